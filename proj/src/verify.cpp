#include "acb/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "acb/ensemble.hpp"
#include "acb/env.hpp"
#include "acb/linalg.hpp"

namespace acb {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2 = 0.69314718055994530942;

double binomial_margin(double delta, long trials) {
  return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
}

}  // namespace

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j;
  j["check"] = name;
  j["trials"] = trials;
  nlohmann::json obs = nlohmann::json::object();
  for (const auto& [key, value] : observed) {
    obs[key] = value;
  }
  nlohmann::json thr = nlohmann::json::object();
  for (const auto& [key, value] : thresholds) {
    thr[key] = value;
  }
  j["observed"] = obs;
  j["thresholds"] = thr;
  j["pass"] = pass;
  j["seed"] = seed;
  return j;
}

CheckReport check_gaussian_max(int m, double delta, long trials,
                               uint64_t seed) {
  if (trials < 10000) {
    throw std::invalid_argument("check_gaussian_max: trials must be >= 1e4");
  }
  const auto [lower, upper] = gaussian_max_bounds(m, delta);
  long below_lower = 0;
  long above_upper = 0;
  for (long t = 0; t < trials; ++t) {
    rng::Stream stream(rng::mix(seed, 0x6a55, t));
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      z = std::max(z, std::abs(stream.next_gaussian()));
    }
    if (z < lower) {
      ++below_lower;
    }
    if (z > upper) {
      ++above_upper;
    }
  }
  const double rate_lower = static_cast<double>(below_lower) / trials;
  const double rate_upper = static_cast<double>(above_upper) / trials;
  const double margin = binomial_margin(delta, trials);
  CheckReport report;
  report.name = "gaussian_max";
  report.trials = trials;
  report.seed = seed;
  report.observed = {{"m", static_cast<double>(m)},
                     {"delta", delta},
                     {"lower_bound", lower},
                     {"upper_bound", upper},
                     {"lower_failure_rate", rate_lower},
                     {"upper_failure_rate", rate_upper}};
  report.thresholds = {{"max_failure_rate", margin}};
  report.pass = rate_lower <= margin && rate_upper <= margin;
  return report;
}

CheckReport check_ensemble_law(int d, double lambda, int history_length,
                               long trials, uint64_t seed) {
  if (trials < 10000) {
    throw std::invalid_argument("check_ensemble_law: trials must be >= 1e4");
  }
  const int m = 4;
  CovarianceState cov(d, lambda);
  NoiseEnsemble ensemble(d, lambda, m, TargetMode::kRerandomized,
                         OracleKind::kExactRls, rng::mix(seed, 0xe53b));
  rng::Stream history_stream(rng::mix(seed, 0x4157));
  for (int r = 0; r < history_length; ++r) {
    const Eigen::VectorXd x = sample_gaussian_vector(history_stream, d);
    cov.rank_one_update(x);
    ensemble.append_history(x);
  }

  const int n_queries = 10;
  std::vector<Eigen::VectorXd> queries;
  std::vector<double> target_var(n_queries);
  rng::Stream query_stream(rng::mix(seed, 0x63d2));
  for (int q = 0; q < n_queries; ++q) {
    queries.push_back(sample_gaussian_vector(query_stream, d));
    target_var[q] = cov.quadratic_form(queries.back());
  }

  std::vector<double> second_moment(n_queries, 0.0);
  Eigen::MatrixXd w_outer = Eigen::MatrixXd::Zero(d, d);
  const long samples = trials * m;
  for (long t = 0; t < trials; ++t) {
    ensemble.rerandomize(cov);
    const Eigen::MatrixXd& w = ensemble.weights();
    w_outer.noalias() += w * w.transpose();
    for (int q = 0; q < n_queries; ++q) {
      const Eigen::RowVectorXd proj = queries[q].transpose() * w;
      second_moment[q] += proj.squaredNorm();
    }
  }
  double worst_var_error = 0.0;
  for (int q = 0; q < n_queries; ++q) {
    const double var = second_moment[q] / samples;
    worst_var_error =
        std::max(worst_var_error, std::abs(var - target_var[q]) /
                                      std::max(target_var[q], 1e-300));
  }
  w_outer /= static_cast<double>(samples);
  const double frob_error =
      (w_outer - cov.sigma_inv()).norm() / cov.sigma_inv().norm();

  CheckReport report;
  report.name = "ensemble_law";
  report.trials = trials;
  report.seed = seed;
  report.observed = {{"d", static_cast<double>(d)},
                     {"lambda", lambda},
                     {"history_length", static_cast<double>(history_length)},
                     {"worst_variance_rel_error", worst_var_error},
                     {"covariance_frobenius_rel_error", frob_error}};
  report.thresholds = {{"max_rel_error", 0.05}};
  report.pass = worst_var_error <= 0.05 && frob_error <= 0.05;
  return report;
}

CheckReport check_elliptical_potential(const RunResult& run, double lambda,
                                       int d) {
  const double lhs = run.diag.potential_sum;
  const double rhs =
      run.horizon() == 0
          ? 0.0
          : 2.0 * (run.diag.final_log_det - d * std::log(lambda));
  CheckReport report;
  report.name = "elliptical_potential";
  report.trials = run.horizon();
  report.seed = run.env_seed;
  report.observed = {{"potential_sum", lhs}};
  report.thresholds = {{"twice_log_det_ratio", rhs}, {"slack", 1e-9}};
  report.pass = lhs <= rhs + 1e-9;
  return report;
}

CheckReport check_lazy_determinants(const RunResult& run, double delta) {
  if (run.policy.kind != PolicyKind::kAcbLazy) {
    throw std::invalid_argument("check_lazy_determinants: not a lazy run");
  }
  const double beta = run.policy.beta;
  const double gamma_expected = beta * beta * kPi * kLog2 / 2.0;
  if (std::abs(run.policy.gamma - gamma_expected) >
      1e-9 * std::max(1.0, gamma_expected)) {
    throw std::invalid_argument(
        "check_lazy_determinants: gamma must equal beta^2 pi log2 / 2");
  }
  const long horizon = run.horizon();
  const double cap = std::log(2.0 * std::exp(1.0));
  const double growth_factor =
      0.5 * std::log1p(kPi * kLog2 /
                       (16.0 * std::log(2.0 * run.diag.a_count * horizon /
                                        delta)));

  double worst_within = 0.0;
  size_t anchor_idx = 0;
  double anchor_log_det = run.diag.log_det_at_selection.empty()
                              ? 0.0
                              : run.diag.log_det_at_selection[0];
  for (long t = 0; t < horizon; ++t) {
    if (anchor_idx < run.diag.anchor_rounds.size() &&
        run.diag.anchor_rounds[anchor_idx] == t + 1) {
      anchor_log_det = run.diag.log_det_at_selection[t];
      ++anchor_idx;
    }
    worst_within = std::max(
        worst_within, run.diag.log_det_at_selection[t] - anchor_log_det);
  }

  double min_growth = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < run.diag.anchor_rounds.size(); ++k) {
    const long prev = run.diag.anchor_rounds[k - 1] - 1;
    const long cur = run.diag.anchor_rounds[k] - 1;
    min_growth = std::min(min_growth,
                          run.diag.log_det_at_selection[cur] -
                              run.diag.log_det_at_selection[prev]);
  }
  const bool growth_ok = run.diag.anchor_rounds.size() < 2 ||
                         min_growth >= growth_factor - 1e-9;

  CheckReport report;
  report.name = "lazy_determinants";
  report.trials = horizon;
  report.seed = run.env_seed;
  report.observed = {
      {"anchors", static_cast<double>(run.diag.anchor_rounds.size())},
      {"worst_within_anchor_log_ratio", worst_within},
      {"min_anchor_growth_log_ratio",
       std::isfinite(min_growth) ? min_growth : 0.0}};
  report.thresholds = {{"within_anchor_cap_log_2e", cap},
                       {"min_growth_log", growth_factor},
                       {"delta", delta}};
  report.pass = worst_within <= cap + 1e-9 && growth_ok;
  return report;
}

CheckReport check_rerandomize_count(const RunResult& run,
                                    const TheoryParams& p) {
  p.validate();
  const double k = static_cast<double>(run.diag.rerandomize_count);
  const double t = static_cast<double>(p.t_horizon);
  const double lambda = p.lambda();
  const double lhs =
      0.5 * k *
      std::log1p(kPi * kLog2 / (16.0 * std::log(2.0 * p.a_count * t / p.delta)));
  const double rhs = p.d * std::log1p(t * p.b_bound / (lambda * p.d));
  CheckReport report;
  report.name = "rerandomize_count";
  report.trials = run.horizon();
  report.seed = run.env_seed;
  report.observed = {{"rerandomize_count", k}, {"lhs_log", lhs}};
  report.thresholds = {{"rhs_log", rhs}};
  report.pass = lhs <= rhs + 1e-9;
  return report;
}

CheckReport check_confidence_width(const TheoryParams& p, long trials,
                                   uint64_t seed, double lambda_override) {
  if (trials < 100) {
    throw std::invalid_argument("check_confidence_width: trials must be >= 100");
  }
  if (p.t_horizon < 1 || p.d < 1 || p.a_count < 1 || !(p.w_bound > 0.0) ||
      !(p.sigma_noise >= 0.0) || !(p.delta > 0.0) || !(p.delta < 1.0)) {
    throw std::invalid_argument("check_confidence_width: bad parameters");
  }
  const double lambda = lambda_override > 0.0 ? lambda_override : p.lambda();
  const long horizon = p.t_horizon;
  const double delta_t = p.delta / static_cast<double>(horizon);
  long failures = 0;
  for (long trial = 0; trial < trials; ++trial) {
    rng::Stream setup(rng::mix(seed, 0xc04f, trial));
    Eigen::VectorXd theta_star =
        p.w_bound * sample_unit_vector(setup, p.d);
    Eigen::MatrixXd actions(p.a_count, p.d);
    for (int a = 0; a < p.a_count; ++a) {
      actions.row(a) = sample_unit_vector(setup, p.d).transpose();
    }
    CovarianceState cov(p.d, lambda);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(p.d);
    rng::Stream play(rng::mix(seed, 0x91a4, trial));
    for (long t = 0; t < horizon; ++t) {
      const int a = static_cast<int>(play.next_below(p.a_count));
      const Eigen::VectorXd x = actions.row(a).transpose();
      const double reward =
          x.dot(theta_star) + p.sigma_noise * play.next_gaussian();
      cov.rank_one_update(x);
      moment.noalias() += x * reward;
    }
    const Eigen::VectorXd theta_hat = cov.solve(moment);
    const double beta_t =
        std::sqrt(lambda) * theta_star.norm() +
        std::sqrt(2.0 * p.sigma_noise * p.sigma_noise *
                  (cov.log_det() - p.d * std::log(lambda) +
                   std::log(1.0 / delta_t)));
    bool violated = false;
    for (int a = 0; a < p.a_count && !violated; ++a) {
      const Eigen::VectorXd x = actions.row(a).transpose();
      const double lhs = x.dot(theta_star - theta_hat);
      violated = lhs > beta_t * cov.elliptical_norm(x) + 1e-12;
    }
    if (violated) {
      ++failures;
    }
  }
  const double rate = static_cast<double>(failures) / trials;
  const double margin = binomial_margin(p.delta, trials);
  CheckReport report;
  report.name = "confidence_width";
  report.trials = trials;
  report.seed = seed;
  report.observed = {{"failure_rate", rate},
                     {"d", static_cast<double>(p.d)},
                     {"t_horizon", static_cast<double>(p.t_horizon)},
                     {"sigma", p.sigma_noise}};
  report.thresholds = {{"max_failure_rate", margin}};
  report.pass = rate <= margin;
  return report;
}

std::vector<CheckReport> run_standard_suite(uint64_t seed, double scale,
                                            int threads) {
  scale = std::clamp(scale, 0.01, 1.0);
  std::vector<CheckReport> reports;
  const long gm_trials = std::max<long>(10000, std::lround(100000 * scale));
  for (int m : {8, 64, 256}) {
    for (double delta : {0.01, 0.1}) {
      reports.push_back(
          check_gaussian_max(m, delta, gm_trials, rng::mix(seed, 0x61, m)));
    }
  }
  const long law_trials = std::max<long>(10000, std::lround(10000 * scale));
  for (int d : {2, 5, 10}) {
    reports.push_back(
        check_ensemble_law(d, 1.0, 100, law_trials, rng::mix(seed, 0x1a3, d)));
  }

  // One lazy figure-2 run drives the three run-level checks.
  const long lazy_horizon = std::max<long>(1000, std::lround(5000 * scale));
  TheoryParams p;
  p.t_horizon = lazy_horizon;
  p.d = 50;
  p.a_count = 50;
  p.b_bound = 1.0;
  p.w_bound = 1.0;
  p.sigma_noise = 0.1;
  p.delta = 0.05;
  ExperimentConfig lazy_config;
  lazy_config.env.kind = "figure2";
  lazy_config.policy.kind = PolicyKind::kAcbLazy;
  lazy_config.policy.beta = 0.5;
  lazy_config.policy.gamma = 0.25 * kPi * kLog2 / 2.0;
  lazy_config.policy.lambda = p.lambda();
  lazy_config.policy.m =
      theory_ensemble_size(lazy_horizon, p.delta, TargetMode::kLazy, 50);
  lazy_config.horizon = lazy_horizon;
  lazy_config.replicates = 1;
  lazy_config.master_seed = rng::mix(seed, 0x1a2f);
  ReplicateAggregate lazy_agg = run_replicates(lazy_config, true, threads);
  const RunResult& lazy_run = lazy_agg.runs.front();
  reports.push_back(check_elliptical_potential(
      lazy_run, lazy_config.policy.lambda, 50));
  reports.push_back(check_lazy_determinants(lazy_run, p.delta));
  reports.push_back(check_rerandomize_count(lazy_run, p));

  // And one incremental run for the potential inequality on a second path.
  ExperimentConfig inc_config;
  inc_config.env.kind = "figure2";
  inc_config.policy.kind = PolicyKind::kAcbIncremental;
  inc_config.policy.beta = 0.5;
  inc_config.policy.lambda = 0.01;
  inc_config.policy.m = 16;
  inc_config.horizon = lazy_horizon;
  inc_config.replicates = 1;
  inc_config.master_seed = rng::mix(seed, 0x90da);
  ReplicateAggregate inc_agg = run_replicates(inc_config, true, threads);
  reports.push_back(check_elliptical_potential(
      inc_agg.runs.front(), inc_config.policy.lambda, 50));

  TheoryParams width;
  width.t_horizon = 200;
  width.d = 5;
  width.a_count = 8;
  width.b_bound = 1.0;
  width.w_bound = 1.0;
  width.sigma_noise = 0.1;
  width.delta = 0.05;
  const long width_trials = std::max<long>(100, std::lround(1000 * scale));
  reports.push_back(
      check_confidence_width(width, width_trials, rng::mix(seed, 0xc1d7)));
  return reports;
}

}  // namespace acb
