#include "acb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "acb/errors.hpp"

namespace acb {

namespace {
constexpr uint64_t kRoleEnv = 0x31a6;
constexpr uint64_t kRolePolicy = 0x901c;

const std::vector<double> kDefaultGrid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
}  // namespace

int EnvSpec::dim() const {
  if (kind == "figure2") {
    return 50;
  }
  if (kind == "fixed") {
    return actions.empty() ? 0 : static_cast<int>(actions.front().size());
  }
  return d;
}

Environment EnvSpec::build(long horizon, uint64_t seed) const {
  if (kind == "figure2") {
    return Environment::figure2_mab(horizon, seed);
  }
  Eigen::VectorXd theta(static_cast<long>(theta_star.size()));
  for (size_t i = 0; i < theta_star.size(); ++i) {
    theta[static_cast<long>(i)] = theta_star[i];
  }
  if (kind == "fixed") {
    if (actions.empty()) {
      throw std::invalid_argument("env: fixed kind requires actions");
    }
    Eigen::MatrixXd acts(static_cast<long>(actions.size()), theta.size());
    for (size_t a = 0; a < actions.size(); ++a) {
      if (static_cast<long>(actions[a].size()) != theta.size()) {
        throw std::invalid_argument("env: action dimension mismatch");
      }
      for (long i = 0; i < theta.size(); ++i) {
        acts(static_cast<long>(a), i) = actions[a][static_cast<size_t>(i)];
      }
    }
    return Environment::fixed_set(std::move(theta), std::move(acts),
                                  sigma_noise, horizon, seed);
  }
  if (kind == "per_round") {
    return Environment::per_round(d, a_count, std::move(theta), sigma_noise,
                                  horizon, seed);
  }
  throw std::invalid_argument("env: unknown kind '" + kind + "'");
}

void ExperimentConfig::validate() const {
  if (horizon < 1) {
    throw std::invalid_argument("config: horizon must be >= 1");
  }
  if (replicates < 1) {
    throw std::invalid_argument("config: replicates must be >= 1");
  }
  const int dim = env.dim();
  if (dim < 1) {
    throw std::invalid_argument("config: environment dimension unresolved");
  }
  policy.validate(dim);
  if (policy.kind == PolicyKind::kAcbLazy && env.kind == "per_round") {
    throw std::invalid_argument("config: lazy policy needs fixed actions");
  }
}

uint64_t replicate_env_seed(uint64_t master_seed, int replicate) {
  return rng::mix(master_seed, replicate, kRoleEnv);
}

uint64_t replicate_policy_seed(uint64_t master_seed, int replicate) {
  return rng::mix(master_seed, replicate, kRolePolicy);
}

bool is_standard_basis_env(const EnvSpec& env) {
  if (env.kind == "figure2") {
    return true;
  }
  if (env.kind != "fixed") {
    return false;
  }
  const size_t d = env.actions.empty() ? 0 : env.actions.front().size();
  if (env.actions.size() != d) {
    return false;
  }
  std::vector<bool> seen(d, false);
  for (const auto& action : env.actions) {
    if (action.size() != d) {
      return false;
    }
    int unit_index = -1;
    for (size_t i = 0; i < d; ++i) {
      if (action[i] == 1.0) {
        if (unit_index >= 0) {
          return false;
        }
        unit_index = static_cast<int>(i);
      } else if (action[i] != 0.0) {
        return false;
      }
    }
    if (unit_index < 0 || seen[unit_index]) {
      return false;
    }
    seen[unit_index] = true;
  }
  return true;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["env"] = {{"kind", env.kind}};
  if (env.kind != "figure2") {
    j["env"]["d"] = env.d;
    j["env"]["a_count"] = env.a_count;
    j["env"]["sigma_noise"] = env.sigma_noise;
    j["env"]["theta_star"] = env.theta_star;
    if (env.kind == "fixed") {
      j["env"]["actions"] = env.actions;
    }
  }
  j["policy"] = {{"kind", to_string(policy.kind)},
                 {"beta", policy.beta},
                 {"lambda", policy.lambda},
                 {"m", policy.m},
                 {"oracle", to_string(policy.oracle)},
                 {"seed", policy.seed}};
  if (policy.kind == PolicyKind::kAcbLazy) {
    j["policy"]["gamma"] = policy.gamma;
  }
  if (policy.oracle == OracleKind::kSgdPolyak) {
    j["policy"]["sgd"] = {
        {"learning_rate", policy.sgd.learning_rate},
        {"polyak_start_fraction", policy.sgd.polyak_start_fraction},
        {"passes_per_refresh", policy.sgd.passes_per_refresh}};
  }
  if (policy.gaussian_fast_path) {
    j["policy"]["gaussian_fast_path"] = true;
  }
  j["horizon"] = horizon;
  j["replicates"] = replicates;
  j["beta_grid"] = beta_grid;
  j["lr_grid"] = lr_grid;
  j["m_grid"] = m_grid;
  j["master_seed"] = master_seed;
  j["output_path"] = output_path;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    const auto& je = j.at("env");
    c.env.kind = je.at("kind").get<std::string>();
    if (c.env.kind != "figure2") {
      c.env.d = je.value("d", 0);
      c.env.a_count = je.value("a_count", 0);
      c.env.sigma_noise = je.value("sigma_noise", 0.0);
      c.env.theta_star = je.value("theta_star", std::vector<double>{});
      c.env.actions =
          je.value("actions", std::vector<std::vector<double>>{});
    }
    const auto& jp = j.at("policy");
    c.policy.kind = policy_kind_from_string(jp.at("kind").get<std::string>());
    c.policy.beta = jp.value("beta", 1.0);
    c.policy.lambda = jp.value("lambda", 1.0);
    c.policy.m = jp.value("m", 1);
    c.policy.oracle =
        oracle_kind_from_string(jp.value("oracle", std::string("exact_rls")));
    c.policy.gamma = jp.value("gamma", 0.0);
    c.policy.seed = jp.value("seed", uint64_t{0});
    c.policy.gaussian_fast_path = jp.value("gaussian_fast_path", false);
    if (jp.contains("sgd")) {
      const auto& js = jp.at("sgd");
      c.policy.sgd.learning_rate = js.value("learning_rate", 0.05);
      c.policy.sgd.polyak_start_fraction =
          js.value("polyak_start_fraction", 0.5);
      c.policy.sgd.passes_per_refresh = js.value("passes_per_refresh", 1);
    }
    c.horizon = j.value("horizon", long{10000});
    c.replicates = j.value("replicates", 1);
    c.beta_grid = j.value("beta_grid", kDefaultGrid);
    c.lr_grid = j.value("lr_grid", kDefaultGrid);
    c.m_grid = j.value("m_grid", std::vector<int>{});
    c.master_seed = j.value("master_seed", uint64_t{1});
    c.output_path = j.value("output_path", std::string("."));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ExperimentConfig::config_id() const {
  const std::string canon = to_json().dump();
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

RunResult run_episode(Environment& env, Policy& policy, long horizon) {
  if (env.dim() != policy.dim()) {
    throw std::invalid_argument("run_episode: dimension mismatch");
  }
  RunResult result;
  result.policy = policy.config();
  result.env_seed = env.seed();
  result.actions.reserve(horizon);
  result.rewards.reserve(horizon);
  result.inst_regret.reserve(horizon);
  result.cum_regret.reserve(horizon);
  result.bonus.reserve(horizon);
  result.diag.log_det_at_selection.reserve(horizon);
  result.diag.lambda = policy.covariance().lambda();
  result.diag.dim = policy.dim();
  result.diag.a_count = env.action_count();

  const bool fixed = env.has_fixed_actions();
  Eigen::MatrixXd per_round;
  double cum = 0.0;
  long previous_anchor_count = 0;
  for (long t = 1; t <= horizon; ++t) {
    const Eigen::MatrixXd& acts =
        fixed ? env.action_set() : (per_round = env.actions(t));
    result.diag.log_det_at_selection.push_back(policy.covariance().log_det());
    int choice = 0;
    try {
      choice = policy.select_action(acts);
      const double reward = env.step(t, choice);
      const double inst = env.instantaneous_regret(t, choice);
      const Eigen::VectorXd x = acts.row(choice).transpose();
      policy.update(x, reward);
      result.diag.potential_sum += policy.covariance().quadratic_form(x);
      cum += inst;
      result.actions.push_back(choice);
      result.rewards.push_back(reward);
      result.inst_regret.push_back(inst);
      result.cum_regret.push_back(cum);
      result.bonus.push_back(policy.last_bonus());
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }
    if (policy.config().kind == PolicyKind::kAcbLazy &&
        policy.lazy().rerandomize_count > previous_anchor_count) {
      previous_anchor_count = policy.lazy().rerandomize_count;
      result.diag.anchor_rounds.push_back(t);
      result.diag.anchor_bonuses.push_back(policy.lazy().anchor_bonus);
    }
  }
  result.diag.final_log_det = policy.covariance().log_det();
  result.diag.rerandomize_count = policy.rerandomize_count();
  return result;
}

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) {
      threads = 1;
    }
  }
  threads = static_cast<int>(std::min<long>(threads, n));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      long i;
      while ((i = next.fetch_add(1)) < n) {
        if (failed.load()) {
          return;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& worker : workers) {
    worker.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

ReplicateAggregate run_replicates(const ExperimentConfig& config,
                                  bool keep_traces, int threads) {
  config.validate();
  const int n = config.replicates;
  const long horizon = config.horizon;
  std::vector<RunResult> runs(n);
  parallel_for(n, threads, [&](long i) {
    Environment env = config.env.build(
        horizon, replicate_env_seed(config.master_seed, static_cast<int>(i)));
    PolicyConfig pc = config.policy;
    pc.seed = replicate_policy_seed(config.master_seed, static_cast<int>(i));
    Policy policy(env.dim(), pc);
    runs[i] = run_episode(env, policy, horizon);
  });

  ReplicateAggregate agg;
  agg.replicates = n;
  agg.mean_curve.assign(horizon, 0.0);
  agg.stderr_curve.assign(horizon, 0.0);
  agg.final_regrets.reserve(n);
  for (const RunResult& run : runs) {
    for (long t = 0; t < horizon; ++t) {
      agg.mean_curve[t] += run.cum_regret[t];
    }
    agg.final_regrets.push_back(run.final_regret());
  }
  for (long t = 0; t < horizon; ++t) {
    agg.mean_curve[t] /= n;
  }
  if (n >= 2) {
    for (const RunResult& run : runs) {
      for (long t = 0; t < horizon; ++t) {
        const double diff = run.cum_regret[t] - agg.mean_curve[t];
        agg.stderr_curve[t] += diff * diff;
      }
    }
    for (long t = 0; t < horizon; ++t) {
      agg.stderr_curve[t] = std::sqrt(agg.stderr_curve[t] / (n - 1)) /
                            std::sqrt(static_cast<double>(n));
    }
  }
  agg.mean_final = agg.mean_curve.back();
  agg.stderr_final = agg.stderr_curve.back();
  if (keep_traces) {
    agg.runs = std::move(runs);
  }
  return agg;
}

SweepResult grid_search(const ExperimentConfig& config, int threads,
                        bool keep_curves) {
  config.validate();
  if (config.beta_grid.empty()) {
    throw std::invalid_argument("grid_search: empty beta grid");
  }
  const bool sweep_lr = config.policy.oracle == OracleKind::kSgdPolyak;
  if (sweep_lr && config.lr_grid.empty()) {
    throw std::invalid_argument("grid_search: empty lr grid");
  }
  std::vector<int> ms =
      config.m_grid.empty() ? std::vector<int>{config.policy.m} : config.m_grid;
  const std::vector<double> lrs =
      sweep_lr ? config.lr_grid : std::vector<double>{0.0};

  SweepResult result;
  for (int m : ms) {
    for (double beta : config.beta_grid) {
      for (double lr : lrs) {
        ExperimentConfig cell = config;
        cell.policy.m = m;
        cell.policy.beta = beta;
        if (sweep_lr) {
          cell.policy.sgd.learning_rate = lr;
        }
        ReplicateAggregate agg = run_replicates(cell, false, threads);
        SweepCell row;
        row.m = m;
        row.beta = beta;
        row.lr = sweep_lr ? lr : 0.0;
        row.mean_final = agg.mean_final;
        row.stderr_final = agg.stderr_final;
        row.replicates = agg.replicates;
        if (keep_curves) {
          row.mean_curve = std::move(agg.mean_curve);
          row.stderr_curve = std::move(agg.stderr_curve);
        }
        result.cells.push_back(std::move(row));
      }
    }
  }
  for (int m : ms) {
    const SweepCell* best = nullptr;
    for (const SweepCell& cell : result.cells) {
      if (cell.m != m) {
        continue;
      }
      if (!best || cell.mean_final < best->mean_final ||
          (cell.mean_final == best->mean_final &&
           (cell.beta < best->beta ||
            (cell.beta == best->beta && cell.lr < best->lr)))) {
        best = &cell;
      }
    }
    result.winners.push_back(*best);
  }
  return result;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_run_csv(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<RunResult>& runs) {
  const std::string id = config.config_id();
  const std::string policy = to_string(config.policy.kind);
  const std::string oracle = to_string(config.policy.oracle);
  const std::string lr =
      format_double(config.policy.oracle == OracleKind::kSgdPolyak
                        ? config.policy.sgd.learning_rate
                        : 0.0);
  const std::string beta = format_double(config.policy.beta);
  out << "config_id,policy,oracle,m,beta,lr,replicate,round,action,reward,"
         "inst_regret,cum_regret,bonus\n";
  for (size_t rep = 0; rep < runs.size(); ++rep) {
    const RunResult& run = runs[rep];
    for (long t = 0; t < run.horizon(); ++t) {
      out << id << ',' << policy << ',' << oracle << ',' << config.policy.m
          << ',' << beta << ',' << lr << ',' << rep << ',' << (t + 1) << ','
          << run.actions[t] << ',' << format_double(run.rewards[t]) << ','
          << format_double(run.inst_regret[t]) << ','
          << format_double(run.cum_regret[t]) << ','
          << format_double(run.bonus[t]) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const ExperimentConfig& config,
                     const SweepResult& sweep) {
  const std::string id = config.config_id();
  const std::string policy = to_string(config.policy.kind);
  const std::string oracle = to_string(config.policy.oracle);
  out << "config_id,policy,oracle,m,beta,lr,mean_final_regret,"
         "stderr_final_regret,n_replicates\n";
  for (const SweepCell& cell : sweep.winners) {
    out << id << ',' << policy << ',' << oracle << ',' << cell.m << ','
        << format_double(cell.beta) << ',' << format_double(cell.lr) << ','
        << format_double(cell.mean_final) << ','
        << format_double(cell.stderr_final) << ',' << cell.replicates << '\n';
  }
}

namespace {

std::string svg_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2"};

}  // namespace

void write_curves_svg(std::ostream& out, const std::string& title,
                      const std::string& config_id,
                      const std::vector<LabeledCurve>& curves) {
  if (curves.empty()) {
    throw std::invalid_argument("write_curves_svg: no curves");
  }
  const double width = 960, height = 600;
  const double left = 70, right = 40, top = 50, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  long horizon = 0;
  double y_max = 1.0;
  for (const LabeledCurve& c : curves) {
    horizon = std::max<long>(horizon, static_cast<long>(c.mean.size()));
    for (size_t i = 0; i < c.mean.size(); ++i) {
      const double band = i < c.stderr_band.size() ? c.stderr_band[i] : 0.0;
      if (std::isfinite(c.mean[i] + band)) {
        y_max = std::max(y_max, c.mean[i] + band);
      }
    }
  }
  const auto x_of = [&](double t) {
    return left + plot_w * (horizon > 1 ? t / (horizon - 1.0) : 0.5);
  };
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<desc>config_id=" << svg_escape(config_id) << "</desc>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"18\">" << svg_escape(title)
      << "</text>\n";
  // axes
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    const double x = left + plot_w * frac;
    const double y = top + plot_h * (1.0 - frac);
    out << "<text x=\"" << x << "\" y=\"" << top + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << static_cast<long>(frac * (horizon > 0 ? horizon : 1)) << "</text>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << static_cast<long>(frac * y_max) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">round</text>\n";
  out << "<text x=\"18\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">cumulative regret</text>\n";

  const long max_points = 512;
  for (size_t ci = 0; ci < curves.size(); ++ci) {
    const LabeledCurve& curve = curves[ci];
    const char* color = kPalette[ci % (sizeof(kPalette) / sizeof(*kPalette))];
    const long n = static_cast<long>(curve.mean.size());
    if (n == 0) {
      continue;
    }
    const long step = std::max<long>(1, n / max_points);
    // stderr band
    if (!curve.stderr_band.empty()) {
      out << "<path fill=\"" << color << "\" fill-opacity=\"0.15\" "
          << "stroke=\"none\" d=\"M";
      for (long t = 0; t < n; t += step) {
        out << x_of(static_cast<double>(t)) << ","
            << y_of(curve.mean[t] + curve.stderr_band[t]) << " ";
      }
      for (long t = ((n - 1) / step) * step; t >= 0; t -= step) {
        out << x_of(static_cast<double>(t)) << ","
            << y_of(std::max(0.0, curve.mean[t] - curve.stderr_band[t])) << " ";
      }
      out << "Z\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (long t = 0; t < n; t += step) {
      out << x_of(static_cast<double>(t)) << "," << y_of(curve.mean[t]) << " ";
    }
    if ((n - 1) % step != 0) {
      out << x_of(static_cast<double>(n - 1)) << "," << y_of(curve.mean[n - 1]);
    }
    out << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(ci);
    out << "<rect x=\"" << left + plot_w - 170 << "\" y=\"" << ly - 9
        << "\" width=\"14\" height=\"8\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << left + plot_w - 150 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << svg_escape(curve.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace acb
