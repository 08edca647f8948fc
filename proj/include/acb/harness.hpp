#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "acb/env.hpp"
#include "acb/policy.hpp"

#include "json.hpp"

namespace acb {

// Environment description as it appears in config files.
struct EnvSpec {
  std::string kind = "figure2";  // figure2 | fixed | per_round
  int d = 0;
  int a_count = 0;
  double sigma_noise = 0.0;
  std::vector<double> theta_star;
  std::vector<std::vector<double>> actions;  // fixed kind only

  Environment build(long horizon, uint64_t seed) const;
  int dim() const;
};

struct ExperimentConfig {
  EnvSpec env;
  PolicyConfig policy;
  long horizon = 10000;
  int replicates = 1;
  std::vector<double> beta_grid;
  std::vector<double> lr_grid;
  std::vector<int> m_grid;
  uint64_t master_seed = 1;
  std::string output_path = ".";

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Hash of the canonical JSON form, as 16 hex digits. Recorded in every
  // output file so reruns are attributable.
  std::string config_id() const;
};

// Seeds for replicate i, derived from (master_seed, i, role).
uint64_t replicate_env_seed(uint64_t master_seed, int replicate);
uint64_t replicate_policy_seed(uint64_t master_seed, int replicate);

// True when the environment's fixed action set is the standard basis — the
// multi-armed regime the incremental guarantee covers. Incremental runs on
// anything else are labeled "heuristic regime" by the CLI.
bool is_standard_basis_env(const EnvSpec& env);

struct RunDiagnostics {
  long rerandomize_count = 0;
  std::vector<long> anchor_rounds;
  std::vector<double> anchor_bonuses;
  // log det of the covariance as each round's selection saw it.
  std::vector<double> log_det_at_selection;
  // Sum over rounds of ||x_t||^2 in the post-update inverse norm.
  double potential_sum = 0.0;
  double final_log_det = 0.0;
  double lambda = 0.0;
  int dim = 0;
  int a_count = 0;
};

// Per-round traces of one episode.
struct RunResult {
  PolicyConfig policy;
  uint64_t env_seed = 0;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> inst_regret;
  std::vector<double> cum_regret;
  std::vector<double> bonus;
  RunDiagnostics diag;

  long horizon() const { return static_cast<long>(actions.size()); }
  double final_regret() const {
    return cum_regret.empty() ? 0.0 : cum_regret.back();
  }
};

// Runs the observe -> select -> reward -> update loop for `horizon` rounds.
RunResult run_episode(Environment& env, Policy& policy, long horizon);

struct ReplicateAggregate {
  std::vector<double> mean_curve;
  std::vector<double> stderr_curve;
  std::vector<double> final_regrets;  // one per replicate
  double mean_final = 0.0;
  double stderr_final = 0.0;
  int replicates = 0;
  std::vector<RunResult> runs;  // populated only when traces are kept
};

// Executes config.replicates independent episodes. Replicates may run
// concurrently; aggregation is a serial reduce in replicate order, so the
// result is identical to serial execution.
ReplicateAggregate run_replicates(const ExperimentConfig& config,
                                  bool keep_traces = false, int threads = 0);

struct SweepCell {
  int m = 0;
  double beta = 0.0;
  double lr = 0.0;
  double mean_final = 0.0;
  double stderr_final = 0.0;
  int replicates = 0;
  std::vector<double> mean_curve;
  std::vector<double> stderr_curve;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  // Best cell per ensemble size: lowest mean final regret, ties broken by
  // smaller beta then smaller lr.
  std::vector<SweepCell> winners;
};

// Grid over (m, beta[, lr]); the lr axis only applies to the SGD oracle.
SweepResult grid_search(const ExperimentConfig& config, int threads = 0,
                        bool keep_curves = false);

// Long-format trace CSV; one row per (replicate, round).
void write_run_csv(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<RunResult>& runs);

// Winner row per ensemble size.
void write_sweep_csv(std::ostream& out, const ExperimentConfig& config,
                     const SweepResult& sweep);

struct LabeledCurve {
  std::string label;
  std::vector<double> mean;
  std::vector<double> stderr_band;
};

void write_curves_svg(std::ostream& out, const std::string& title,
                      const std::string& config_id,
                      const std::vector<LabeledCurve>& curves);

// Decimal text with enough digits to round-trip exactly.
std::string format_double(double value);

// Runs `body(i)` for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Each index must write only its own slots.
void parallel_for(long n, int threads, const std::function<void(long)>& body);

}  // namespace acb
