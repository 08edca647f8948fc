#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "acb/errors.hpp"
#include "acb/harness.hpp"
#include "acb/policy.hpp"
#include "acb/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;
constexpr int kExitRuntimeFailure = 2;
constexpr int kExitVerificationFailure = 3;

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2 = 0.69314718055994530942;

acb::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file: " + path);
  }
  nlohmann::json j;
  in >> j;
  acb::ExperimentConfig config = acb::ExperimentConfig::from_json(j);
  if (config.policy.kind == acb::PolicyKind::kAcbIncremental &&
      !acb::is_standard_basis_env(config.env)) {
    std::cout << "note: heuristic regime (incremental targets on "
                 "non-orthogonal action features)\n";
  }
  return config;
}

std::filesystem::path output_file(const acb::ExperimentConfig& config,
                                  const std::string& stem,
                                  const std::string& ext) {
  std::filesystem::path dir(config.output_path);
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
  }
  return dir / (stem + "_" + config.config_id() + ext);
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw acb::IoError("cannot write " + path.string());
  }
  writer(out);
  if (!out) {
    throw acb::IoError("write failed for " + path.string());
  }
  std::cout << "wrote " << path.string() << "\n";
}

// The resolved configuration (horizon included) goes next to every output so
// results stay attributable to their exact settings.
void write_config_json(const acb::ExperimentConfig& config) {
  write_file(output_file(config, "config", ".json"), [&](std::ostream& out) {
    out << config.to_json().dump(2) << "\n";
  });
}

int cmd_run(const std::string& config_path, int threads) {
  acb::ExperimentConfig config = load_config(config_path);
  acb::ReplicateAggregate agg = acb::run_replicates(config, true, threads);
  write_config_json(config);
  write_file(output_file(config, "run", ".csv"), [&](std::ostream& out) {
    acb::write_run_csv(out, config, agg.runs);
  });
  acb::LabeledCurve curve{acb::to_string(config.policy.kind), agg.mean_curve,
                          agg.stderr_curve};
  write_file(output_file(config, "run", ".svg"), [&](std::ostream& out) {
    acb::write_curves_svg(out, "cumulative regret", config.config_id(),
                          {curve});
  });
  std::cout << "mean final regret " << agg.mean_final << " +/- "
            << agg.stderr_final << " over " << agg.replicates
            << " replicates\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, int threads) {
  acb::ExperimentConfig config = load_config(config_path);
  acb::SweepResult sweep = acb::grid_search(config, threads, true);
  write_config_json(config);
  write_file(output_file(config, "sweep", ".csv"), [&](std::ostream& out) {
    acb::write_sweep_csv(out, config, sweep);
  });
  std::vector<acb::LabeledCurve> curves;
  for (const acb::SweepCell& cell : sweep.winners) {
    acb::LabeledCurve curve;
    curve.label = "M=" + std::to_string(cell.m);
    curve.mean = cell.mean_curve;
    curve.stderr_band = cell.stderr_curve;
    curves.push_back(std::move(curve));
  }
  write_file(output_file(config, "sweep", ".svg"), [&](std::ostream& out) {
    acb::write_curves_svg(out, "cumulative regret by ensemble size",
                          config.config_id(), curves);
  });
  for (const acb::SweepCell& cell : sweep.winners) {
    std::cout << "M=" << cell.m << " best beta=" << cell.beta;
    if (config.policy.oracle == acb::OracleKind::kSgdPolyak) {
      std::cout << " lr=" << cell.lr;
    }
    std::cout << " mean final regret " << cell.mean_final << " +/- "
              << cell.stderr_final << "\n";
  }
  return kExitOk;
}

int cmd_figure2(const std::string& oracle, long horizon, int replicates,
                std::vector<int> m_grid, uint64_t seed,
                const std::string& output, int threads) {
  acb::ExperimentConfig config;
  config.env.kind = "figure2";
  config.policy.kind = acb::PolicyKind::kAcbIncremental;
  config.policy.lambda = 0.01;
  config.policy.oracle = acb::oracle_kind_from_string(oracle);
  config.horizon = horizon;
  config.replicates = replicates;
  config.beta_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
  config.lr_grid = config.beta_grid;
  config.m_grid = std::move(m_grid);
  config.master_seed = seed;
  config.output_path = output;
  acb::SweepResult sweep = acb::grid_search(config, threads, true);
  write_config_json(config);
  write_file(output_file(config, "figure2", ".csv"), [&](std::ostream& out) {
    acb::write_sweep_csv(out, config, sweep);
  });
  std::vector<acb::LabeledCurve> curves;
  for (const acb::SweepCell& cell : sweep.winners) {
    acb::LabeledCurve curve;
    curve.label = "M=" + std::to_string(cell.m);
    curve.mean = cell.mean_curve;
    curve.stderr_band = cell.stderr_curve;
    curves.push_back(std::move(curve));
    std::cout << "M=" << cell.m << " beta=" << cell.beta;
    if (config.policy.oracle == acb::OracleKind::kSgdPolyak) {
      std::cout << " lr=" << cell.lr;
    }
    std::cout << " final regret " << cell.mean_final << " +/- "
              << cell.stderr_final << "\n";
  }
  write_file(output_file(config, "figure2", ".svg"), [&](std::ostream& out) {
    acb::write_curves_svg(out,
                          "50-armed bandit, " + oracle + " oracle",
                          config.config_id(), curves);
  });
  return kExitOk;
}

int cmd_verify(uint64_t seed, double scale, int threads) {
  const std::vector<acb::CheckReport> reports =
      acb::run_standard_suite(seed, scale, threads);
  bool all_pass = true;
  for (const acb::CheckReport& report : reports) {
    std::cout << report.to_json().dump() << "\n";
    all_pass = all_pass && report.pass;
  }
  return all_pass ? kExitOk : kExitVerificationFailure;
}

int cmd_envelope(const acb::TheoryParams& p, double gamma2) {
  nlohmann::json j;
  j["theory_beta"] = acb::theory_beta(p);
  j["lambda"] = p.lambda();
  j["ensemble_size"] = {
      {"rerandomized", acb::theory_ensemble_size(p.t_horizon, p.delta,
                                                 acb::TargetMode::kRerandomized)},
      {"incremental", acb::theory_ensemble_size(p.t_horizon, p.delta,
                                                acb::TargetMode::kIncremental)},
      {"lazy", acb::theory_ensemble_size(p.t_horizon, p.delta,
                                         acb::TargetMode::kLazy, p.a_count)}};
  j["regret_envelope"] =
      acb::regret_envelope(p, gamma2 >= 0.0 ? gamma2 : acb::theory_beta(p));
  j["lazy_gamma"] = [&] {
    const double beta = acb::theory_beta(p) * std::sqrt(2.0 / (kPi * kLog2));
    return beta * beta * kPi * kLog2 / 2.0;
  }();
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic linear bandits: LinUCB and anti-concentrated "
               "ensemble bonuses"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run one configuration");
  run->add_option("--config", config_path, "JSON config file")->required();

  auto* sweep = app.add_subcommand("sweep", "grid search over M/beta/lr");
  sweep->add_option("--config", config_path, "JSON config file")->required();

  auto* figure2 = app.add_subcommand(
      "figure2", "preset: 50-armed bandit ensemble-size sweep");
  std::string oracle = "exact_rls";
  long horizon = 10000;
  int replicates = 100;
  std::vector<int> m_grid = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  uint64_t seed = 20240416;
  std::string output = "out";
  figure2->add_option("--oracle", oracle, "exact_rls or sgd_polyak");
  figure2->add_option("--horizon", horizon, "rounds per episode");
  figure2->add_option("--replicates", replicates, "independent trials");
  figure2->add_option("--m-grid", m_grid, "ensemble sizes");
  figure2->add_option("--seed", seed, "master seed");
  figure2->add_option("--output", output, "output directory");

  auto* verify = app.add_subcommand("verify", "statistical checks of the concentration bounds");
  uint64_t verify_seed = 7;
  double scale = 1.0;
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--scale", scale, "trial-count scale in (0,1]");

  auto* envelope =
      app.add_subcommand("envelope", "print theory constants for T,d,A,B,W,sigma,delta");
  acb::TheoryParams params;
  params.t_horizon = 10000;
  params.d = 50;
  params.a_count = 50;
  params.b_bound = 1.0;
  params.w_bound = 1.0;
  params.sigma_noise = 0.1;
  params.delta = 0.05;
  double gamma2 = -1.0;
  envelope->add_option("--t", params.t_horizon, "horizon T");
  envelope->add_option("--d", params.d, "feature dimension");
  envelope->add_option("--a", params.a_count, "action count");
  envelope->add_option("--b", params.b_bound, "feature norm bound B");
  envelope->add_option("--w", params.w_bound, "theta* norm bound W");
  envelope->add_option("--sigma", params.sigma_noise, "noise level");
  envelope->add_option("--delta", params.delta, "confidence delta");
  envelope->add_option("--gamma2", gamma2,
                       "bonus upper-envelope slope (default theory beta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  try {
    if (*run) {
      return cmd_run(config_path, threads);
    }
    if (*sweep) {
      return cmd_sweep(config_path, threads);
    }
    if (*figure2) {
      return cmd_figure2(oracle, horizon, replicates, m_grid, seed, output,
                         threads);
    }
    if (*verify) {
      return cmd_verify(verify_seed, scale, threads);
    }
    if (*envelope) {
      return cmd_envelope(params, gamma2);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const acb::ModeError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
  return kExitOk;
}
