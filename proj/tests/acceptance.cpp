// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failures. Heavy simulations run with all available cores.
//
//   acceptance [--cli <path-to-cli-binary>] [--threads n]

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "acb/ensemble.hpp"
#include "acb/harness.hpp"
#include "acb/linalg.hpp"
#include "acb/policy.hpp"
#include "acb/verify.hpp"

using namespace acb;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2 = 0.69314718055994530942;

int g_threads = 0;
int g_failures = 0;

void report(int id, bool pass, const std::string& label,
            const std::string& detail) {
  std::printf("[%2d] %s  %s: %s\n", id, pass ? "PASS" : "FAIL", label.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) {
    ++g_failures;
  }
}

std::string fmt(double v, int prec = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

ExperimentConfig figure2_base(PolicyKind kind, uint64_t seed) {
  ExperimentConfig config;
  config.env.kind = "figure2";
  config.policy.kind = kind;
  config.policy.lambda = 0.01;
  config.horizon = 10000;
  config.replicates = 100;
  config.beta_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
  config.lr_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
  config.master_seed = seed;
  return config;
}

const SweepCell* winner_for_m(const SweepResult& sweep, int m) {
  for (const SweepCell& cell : sweep.winners) {
    if (cell.m == m) {
      return &cell;
    }
  }
  return nullptr;
}

// Criteria 1 and 3 share one grid search over the exact oracle.
SweepResult criterion_1(ExperimentConfig& config) {
  config = figure2_base(PolicyKind::kAcbIncremental, 914200);
  config.policy.oracle = OracleKind::kExactRls;
  config.m_grid = {1, 16};
  SweepResult sweep = grid_search(config, g_threads, true);
  const SweepCell* m1 = winner_for_m(sweep, 1);
  const SweepCell* m16 = winner_for_m(sweep, 16);
  const bool separated =
      m16->mean_final + 2.0 * m16->stderr_final <
      m1->mean_final - 2.0 * m1->stderr_final;
  report(1, separated, "figure-2 exact oracle, M=16 vs M=1",
         "M=16 best beta=" + fmt(m16->beta, 2) + " regret " +
             fmt(m16->mean_final) + "+/-" + fmt(2 * m16->stderr_final) +
             "; M=1 best beta=" + fmt(m1->beta, 2) + " regret " +
             fmt(m1->mean_final) + "+/-" + fmt(2 * m1->stderr_final) +
             " (2se intervals disjoint: " + (separated ? "yes" : "no") + ")");
  return sweep;
}

void criterion_2() {
  ExperimentConfig config = figure2_base(PolicyKind::kAcbIncremental, 914201);
  config.policy.oracle = OracleKind::kSgdPolyak;
  config.m_grid = {1, 16};
  SweepResult sweep = grid_search(config, g_threads, false);
  const SweepCell* m1 = winner_for_m(sweep, 1);
  const SweepCell* m16 = winner_for_m(sweep, 16);
  const bool separated =
      m16->mean_final + 2.0 * m16->stderr_final <
      m1->mean_final - 2.0 * m1->stderr_final;
  report(2, separated, "figure-2 SGD oracle, M=16 vs M=1",
         "M=16 best (beta=" + fmt(m16->beta, 2) + ", lr=" + fmt(m16->lr, 2) +
             ") regret " + fmt(m16->mean_final) + "+/-" +
             fmt(2 * m16->stderr_final) + "; M=1 best (beta=" +
             fmt(m1->beta, 2) + ", lr=" + fmt(m1->lr, 2) + ") regret " +
             fmt(m1->mean_final) + "+/-" + fmt(2 * m1->stderr_final));
}

void criterion_3(const SweepResult& exact_sweep) {
  const SweepCell* best = nullptr;
  for (const SweepCell& cell : exact_sweep.cells) {
    if (!best || cell.mean_final < best->mean_final) {
      best = &cell;
    }
  }
  const double r3 = best->mean_curve[999];
  const double r4 = best->mean_curve[9999];
  const double rate3 = r3 / 1e3;
  const double rate4 = r4 / 1e4;
  const bool pass = rate4 < 0.5 * rate3;
  report(3, pass, "regret rate halves from T=1e3 to T=1e4",
         "winning cell (M=" + std::to_string(best->m) + ", beta=" +
             fmt(best->beta, 2) + "): R(1e3)=" + fmt(r3) + ", R(1e4)=" +
             fmt(r4) + ", rate ratio " + fmt(rate4 / rate3, 3) + " < 0.5");
}

void criterion_4() {
  TheoryParams p;
  p.t_horizon = 10000;
  p.d = 50;
  p.a_count = 50;
  p.b_bound = 1.0;
  p.w_bound = std::sqrt(0.75 * 0.75 + 49 * 0.25 * 0.25);  // ||theta*||
  p.sigma_noise = 0.1;
  p.delta = 0.05;
  const double beta = theory_beta(p);
  const double envelope = regret_envelope(p, beta);
  ExperimentConfig config = figure2_base(PolicyKind::kLinUcb, 914202);
  config.policy.beta = beta;
  config.policy.lambda = p.lambda();
  config.replicates = 50;
  ReplicateAggregate agg = run_replicates(config, false, g_threads);
  int within = 0;
  for (double r : agg.final_regrets) {
    within += (r <= envelope);
  }
  report(4, within >= 47, "LinUCB stays under the theory envelope",
         "beta=" + fmt(beta, 3) + ", envelope=" + fmt(envelope) + ", mean=" +
             fmt(agg.mean_final) + ", within " + std::to_string(within) +
             "/50 (need 47)");
}

void criterion_5() {
  bool all = true;
  std::string detail;
  for (int d : {2, 5, 10}) {
    CheckReport r = check_ensemble_law(d, 1.0, 100, 10000, 771000 + d);
    all = all && r.pass;
    detail += "d=" + std::to_string(d) + " worst var err " +
              fmt(r.observed[3].second * 100, 2) + "%, frob err " +
              fmt(r.observed[4].second * 100, 2) + "%; ";
  }
  report(5, all, "re-randomized weights follow N(0, sigma_inv)",
         detail + "(tolerance 5%)");
}

void criterion_6() {
  bool all = true;
  double worst_excess = -1.0;
  for (int m : {8, 64, 256}) {
    for (double delta : {0.01, 0.1}) {
      CheckReport r = check_gaussian_max(m, delta, 100000, 88100 + m);
      all = all && r.pass;
      const double margin = r.thresholds[0].second;
      worst_excess = std::max(
          worst_excess,
          std::max(r.observed[4].second, r.observed[5].second) - margin);
    }
  }
  report(6, all, "max-of-Gaussians tail sandwich",
         "all 6 (M, delta) combos at 1e5 trials; worst rate minus margin = " +
             fmt(worst_excess, 4));
}

struct MixedRun {
  RunResult run;
  double lambda;
  int dim;
  bool lazy;
};

void criterion_7() {
  std::vector<MixedRun> runs;
  const long horizon = 5000;
  int idx = 0;
  const auto random_fixed_env = [&](EnvSpec& env, int d, int a_count,
                                    uint64_t seed) {
    rng::Stream gen(rng::mix(31337, seed));
    env.kind = "fixed";
    env.sigma_noise = 0.1;
    const Eigen::VectorXd theta = 1.5 * sample_unit_vector(gen, d);
    env.theta_star.assign(theta.data(), theta.data() + d);
    env.actions.clear();
    for (int a = 0; a < a_count; ++a) {
      const Eigen::VectorXd x = sample_unit_vector(gen, d);
      env.actions.emplace_back(x.data(), x.data() + d);
    }
  };
  std::vector<ExperimentConfig> configs;
  const double lambdas[3] = {0.01, 0.1, 1.0};
  for (int i = 0; i < 8; ++i) {  // lazy runs
    ExperimentConfig c;
    int a_count = 50;
    if (i % 2 == 0) {
      c.env.kind = "figure2";
    } else {
      random_fixed_env(c.env, 10, 20, i);
      a_count = 20;
    }
    const double beta = 0.3 + 0.2 * i;
    c.policy.kind = PolicyKind::kAcbLazy;
    c.policy.beta = beta;
    c.policy.gamma = beta * beta * kPi * kLog2 / 2.0;
    c.policy.lambda = lambdas[i % 3];
    c.policy.m = theory_ensemble_size(horizon, 0.05, TargetMode::kLazy, a_count);
    configs.push_back(c);
  }
  for (int i = 0; i < 4; ++i) {  // incremental
    ExperimentConfig c;
    if (i % 2 == 0) {
      c.env.kind = "figure2";
    } else {
      c.env.kind = "per_round";
      c.env.d = 8;
      c.env.a_count = 15;
      c.env.sigma_noise = 0.1;
      c.env.theta_star = {0.6, -0.2, 0.3, 0.0, 0.1, -0.4, 0.2, 0.5};
    }
    c.policy.kind = PolicyKind::kAcbIncremental;
    c.policy.beta = 0.05 + 0.3 * i;
    c.policy.lambda = lambdas[(i + 1) % 3];
    c.policy.m = 8;
    configs.push_back(c);
  }
  for (int i = 0; i < 4; ++i) {  // re-randomized
    ExperimentConfig c;
    random_fixed_env(c.env, 10, 20, 100 + i);
    c.policy.kind = PolicyKind::kAcbRerandomized;
    c.policy.beta = 0.4 + 0.4 * i;
    c.policy.lambda = lambdas[i % 3];
    c.policy.m = theory_ensemble_size(horizon, 0.05, TargetMode::kRerandomized);
    configs.push_back(c);
  }
  for (int i = 0; i < 4; ++i) {  // baselines
    ExperimentConfig c;
    c.env.kind = "figure2";
    c.policy.kind = (i == 0)   ? PolicyKind::kLinUcb
                    : (i == 1) ? PolicyKind::kGreedy
                    : (i == 2) ? PolicyKind::kUniformRandom
                               : PolicyKind::kLinUcb;
    c.policy.beta = (i == 3) ? 3.5 : 0.5;
    c.policy.lambda = lambdas[i % 3];
    configs.push_back(c);
  }

  bool all = true;
  int lazy_checked = 0;
  for (ExperimentConfig& c : configs) {
    c.horizon = horizon;
    c.replicates = 1;
    c.master_seed = 515000 + idx++;
    ReplicateAggregate agg = run_replicates(c, true, g_threads);
    const RunResult& run = agg.runs.front();
    const int dim = c.env.dim();
    const bool pot = check_elliptical_potential(run, c.policy.lambda, dim).pass;
    bool det = true;
    if (c.policy.kind == PolicyKind::kAcbLazy) {
      det = check_lazy_determinants(run, 0.05).pass;
      ++lazy_checked;
    }
    all = all && pot && det;
  }
  report(7, all, "deterministic inequalities on a 20-run mixed suite",
         std::to_string(configs.size()) + " runs at T=5000, " +
             std::to_string(lazy_checked) +
             " lazy runs also checked for determinant bounds");
}

void criterion_8() {
  const long horizon = 10000;
  TheoryParams p;
  p.t_horizon = horizon;
  p.d = 50;
  p.a_count = 50;
  p.b_bound = 1.0;
  p.w_bound = 1.0;
  p.sigma_noise = 0.1;
  p.delta = 0.05;
  ExperimentConfig config = figure2_base(PolicyKind::kAcbLazy, 914208);
  config.policy.beta = 0.3;
  config.policy.gamma = 0.3 * 0.3 * kPi * kLog2 / 2.0;
  config.policy.m = theory_ensemble_size(horizon, p.delta, TargetMode::kLazy, 50);
  config.replicates = 3;
  ReplicateAggregate agg = run_replicates(config, true, g_threads);
  bool all = true;
  long max_count = 0;
  for (const RunResult& run : agg.runs) {
    const bool inequality = check_rerandomize_count(run, p).pass;
    const bool economical = run.diag.rerandomize_count <= horizon / 20;
    all = all && inequality && economical;
    max_count = std::max(max_count, run.diag.rerandomize_count);
  }
  report(8, all, "lazy re-randomization economy",
         "M=" + std::to_string(config.policy.m) + ", max count " +
             std::to_string(max_count) + " over 3 runs (cap " +
             std::to_string(horizon / 20) + "), budget inequality holds");
}

void criterion_9() {
  const int d = 5, n = 200, m = 8;
  bool all = true;
  double worst = 0.0;
  for (int dataset = 0; dataset < 20; ++dataset) {
    rng::Stream gen(rng::mix(660000, dataset));
    Eigen::MatrixXd theta(d, m);
    for (int j = 0; j < m; ++j) {
      theta.col(j) = sample_unit_vector(gen, d);
    }
    std::vector<Eigen::VectorXd> rows;
    Eigen::MatrixXd x_mat(n, d);
    Eigen::MatrixXd targets(n, m);
    for (int r = 0; r < n; ++r) {
      rows.push_back(sample_unit_vector(gen, d));
      x_mat.row(r) = rows.back().transpose();
      for (int j = 0; j < m; ++j) {
        targets(r, j) = rows.back().dot(theta.col(j)) + 0.1 * gen.next_gaussian();
      }
    }
    NoiseEnsemble ens(d, 1.0, m, TargetMode::kIncremental,
                      OracleKind::kSgdPolyak, 661000 + dataset);
    ens.sgd_refresh(rows, targets, SgdConfig{0.05, 0.5, 100});
    const Eigen::MatrixXd exact =
        (x_mat.transpose() * x_mat).ldlt().solve(x_mat.transpose() * targets);
    for (int j = 0; j < m; ++j) {
      const double rel = (ens.polyak_weights().col(j) - exact.col(j)).norm() /
                         exact.col(j).norm();
      worst = std::max(worst, rel);
      all = all && rel <= 0.01;
    }
  }
  report(9, all, "SGD oracle agrees with the exact solver",
         "20 datasets (d=5, n=200), 100 passes, lr=0.05; worst regressor "
         "error " +
             fmt(worst * 100, 3) + "% (cap 1%)");
}

void criterion_10() {
  const int d = 20;
  bool all = true;
  double worst_inv = 0.0, worst_logdet = 0.0;
  for (int seq = 0; seq < 5; ++seq) {
    CovarianceState cov(d, 1.0);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    rng::Stream gen(rng::mix(550000, seq));
    for (int t = 0; t < 500; ++t) {
      const Eigen::VectorXd x =
          sample_unit_vector(gen, d) * (10.0 * gen.next_unit());
      cov.rank_one_update(x);
      sigma += x * x.transpose();
    }
    const Eigen::MatrixXd inv_ref =
        sigma.llt().solve(Eigen::MatrixXd::Identity(d, d));
    const double log_det_ref =
        2.0 *
        Eigen::MatrixXd(sigma.llt().matrixL()).diagonal().array().log().sum();
    const double inv_err = (cov.sigma_inv() - inv_ref).norm() / inv_ref.norm();
    const double log_err = std::abs(cov.log_det() - log_det_ref);
    worst_inv = std::max(worst_inv, inv_err);
    worst_logdet = std::max(worst_logdet, log_err);
    all = all && inv_err <= 1e-8 && log_err <= 1e-6;
  }
  std::ostringstream detail;
  detail << "5 sequences of 500 updates at d=20: worst inverse error "
         << worst_inv << " (cap 1e-8), worst log-det error " << worst_logdet
         << " (cap 1e-6)";
  report(10, all, "maintained inverse and log-det stay exact", detail.str());
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_11(const std::string& cli) {
  if (cli.empty()) {
    report(11, false, "CSV reproducibility through the CLI",
           "no --cli path provided");
    return;
  }
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("acb_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  ExperimentConfig config;
  config.env.kind = "figure2";
  config.policy.kind = PolicyKind::kAcbIncremental;
  config.policy.beta = 0.1;
  config.policy.lambda = 0.01;
  config.policy.m = 4;
  config.horizon = 300;
  config.replicates = 3;
  config.beta_grid = {0.05, 0.1};
  config.m_grid = {1, 4};
  config.master_seed = 5150;
  config.output_path = (dir / "out").string();
  const fs::path config_path = dir / "config.json";
  {
    std::ofstream out(config_path);
    out << config.to_json().dump(2) << "\n";
  }
  const std::string id = config.config_id();
  bool pass = true;
  std::string detail;
  for (const std::string sub : {"run", "sweep"}) {
    const fs::path csv = fs::path(config.output_path) / (sub + "_" + id + ".csv");
    std::string first, second;
    for (int attempt = 0; attempt < 2; ++attempt) {
      std::error_code ec;
      fs::remove_all(config.output_path, ec);
      const std::string cmd = cli + " --threads 2 " + sub + " --config " +
                              config_path.string() + " >/dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      const auto bytes = read_file(csv);
      if (rc != 0 || !bytes) {
        pass = false;
        detail += sub + " invocation failed; ";
        break;
      }
      (attempt == 0 ? first : second) = *bytes;
    }
    if (pass && first != second) {
      pass = false;
      detail += sub + " output differs between invocations; ";
    }
    if (pass) {
      detail += sub + " byte-identical (" + std::to_string(first.size()) +
                " bytes); ";
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  report(11, pass, "CSV reproducibility through the CLI", detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--threads" && i + 1 < argc) {
      g_threads = std::atoi(argv[++i]);
    }
  }
  std::printf("acceptance suite: 50-armed-bandit reproduction and concentration checks\n");
  std::fflush(stdout);

  ExperimentConfig exact_config;
  const SweepResult exact_sweep = criterion_1(exact_config);
  criterion_2();
  criterion_3(exact_sweep);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11(cli);

  if (g_failures == 0) {
    std::printf("all 11 criteria passed\n");
  } else {
    std::printf("%d criteria failed\n", g_failures);
  }
  return g_failures;
}
