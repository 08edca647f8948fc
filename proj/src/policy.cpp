#include "acb/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "acb/errors.hpp"

namespace acb {

namespace {
constexpr uint64_t kEnsembleSeedTag = 0xe5b1;
constexpr uint64_t kSelectTag = 0x5e1e;
}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLinUcb: return "linucb";
    case PolicyKind::kAcbRerandomized: return "acb_rerandomized";
    case PolicyKind::kAcbIncremental: return "acb_incremental";
    case PolicyKind::kAcbLazy: return "acb_lazy";
    case PolicyKind::kGreedy: return "greedy";
    case PolicyKind::kUniformRandom: return "uniform_random";
  }
  return "unknown";
}

std::string to_string(OracleKind oracle) {
  return oracle == OracleKind::kExactRls ? "exact_rls" : "sgd_polyak";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "linucb") return PolicyKind::kLinUcb;
  if (name == "acb_rerandomized") return PolicyKind::kAcbRerandomized;
  if (name == "acb_incremental") return PolicyKind::kAcbIncremental;
  if (name == "acb_lazy") return PolicyKind::kAcbLazy;
  if (name == "greedy") return PolicyKind::kGreedy;
  if (name == "uniform_random") return PolicyKind::kUniformRandom;
  throw std::invalid_argument("unknown policy kind: " + name);
}

OracleKind oracle_kind_from_string(const std::string& name) {
  if (name == "exact_rls") return OracleKind::kExactRls;
  if (name == "sgd_polyak") return OracleKind::kSgdPolyak;
  throw std::invalid_argument("unknown oracle kind: " + name);
}

void PolicyConfig::validate(int dim) const {
  if (dim < 1) {
    throw std::invalid_argument("policy: dim must be >= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("policy: lambda must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("policy: beta must be nonnegative");
  }
  if (is_acb() && m < 1) {
    throw std::invalid_argument("policy: ensemble size must be >= 1");
  }
  if (kind == PolicyKind::kAcbLazy) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("policy: lazy mode requires gamma > 0");
    }
  } else if (gamma != 0.0) {
    throw std::invalid_argument("policy: gamma is only meaningful in lazy mode");
  }
}

uint64_t Policy::derive_ensemble_seed(uint64_t policy_seed) {
  return rng::mix(policy_seed, kEnsembleSeedTag);
}

Policy::Policy(int dim, PolicyConfig config)
    : dim_(dim), config_(config), cov_(dim, config.lambda) {
  config_.validate(dim);
  reward_moment_ = Eigen::VectorXd::Zero(dim);
  theta_hat_ = Eigen::VectorXd::Zero(dim);
  if (config_.is_acb()) {
    TargetMode mode = TargetMode::kIncremental;
    if (config_.kind == PolicyKind::kAcbRerandomized) {
      mode = TargetMode::kRerandomized;
    } else if (config_.kind == PolicyKind::kAcbLazy) {
      mode = TargetMode::kLazy;
    }
    ensemble_ = std::make_unique<NoiseEnsemble>(
        dim, config_.lambda, config_.m, mode, config_.oracle,
        derive_ensemble_seed(config_.seed), config_.sgd);
    ensemble_->set_gaussian_fast_path(config_.gaussian_fast_path);
  }
  if (config_.mab_tape_keying) {
    pull_counts_.assign(dim, 0);
  }
}

int Policy::argmax_lowest(const Eigen::VectorXd& scores) const {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) {
      best = i;
    }
  }
  return best;
}

int Policy::select_action(const Eigen::Ref<const Eigen::MatrixXd>& actions) {
  const long a_count = actions.rows();
  if (a_count < 1) {
    throw std::invalid_argument("select_action: empty action set");
  }
  if (actions.cols() != dim_) {
    throw std::invalid_argument("select_action: feature dimension mismatch");
  }
  ++round_;

  if (config_.kind == PolicyKind::kUniformRandom) {
    rng::Stream stream(rng::mix(config_.seed, kSelectTag, round_));
    last_bonus_ = 0.0;
    return static_cast<int>(stream.next_below(a_count));
  }

  if (config_.kind == PolicyKind::kAcbLazy) {
    if (lazy_.omega > 0) {
      --lazy_.omega;
      last_bonus_ = lazy_.anchor_bonus;
      return lazy_.anchor_action;
    }
    ensemble_->rerandomize(cov_);
    const Eigen::VectorXd bonuses = ensemble_->bonuses(actions, config_.beta);
    const Eigen::VectorXd scores = actions * theta_hat_ + bonuses;
    const int choice = argmax_lowest(scores);
    const double b = bonuses[choice];
    // ceil(gamma / bonus^2) total plays of the anchor, this round included.
    long plays = std::numeric_limits<long>::max() / 2;
    if (b > 0.0) {
      const double ratio = config_.gamma / (b * b);
      if (ratio < static_cast<double>(std::numeric_limits<long>::max() / 2)) {
        plays = static_cast<long>(std::ceil(ratio));
      }
    }
    lazy_.omega = plays - 1;
    lazy_.anchor_action = choice;
    lazy_.anchor_time = round_;
    lazy_.anchor_bonus = b;
    ++lazy_.rerandomize_count;
    last_bonus_ = b;
    return choice;
  }

  Eigen::VectorXd scores = actions * theta_hat_;
  Eigen::VectorXd bonuses;
  switch (config_.kind) {
    case PolicyKind::kGreedy:
      break;
    case PolicyKind::kLinUcb: {
      bonuses.resize(a_count);
      for (long i = 0; i < a_count; ++i) {
        bonuses[i] =
            config_.beta * cov_.elliptical_norm(actions.row(i).transpose());
      }
      scores += bonuses;
      break;
    }
    default: {  // ACB re-randomized / incremental
      bonuses = ensemble_->bonuses(actions, config_.beta);
      scores += bonuses;
      break;
    }
  }
  const int choice = argmax_lowest(scores);
  last_bonus_ = bonuses.size() > 0 ? bonuses[choice] : 0.0;
  return choice;
}

void Policy::update(const Eigen::Ref<const Eigen::VectorXd>& x,
                    double reward) {
  if (x.size() != dim_) {
    throw std::invalid_argument("update: dimension mismatch");
  }
  if (!std::isfinite(reward)) {
    throw std::invalid_argument("update: non-finite reward");
  }
  cov_.rank_one_update(x);
  reward_moment_.noalias() += x * reward;
  theta_hat_ = cov_.solve(reward_moment_);
  if (!ensemble_) {
    return;
  }
  switch (config_.kind) {
    case PolicyKind::kAcbIncremental: {
      if (config_.mab_tape_keying) {
        int arm = 0;
        x.cwiseAbs().maxCoeff(&arm);
        ensemble_->record(cov_, x,
                          NoiseEnsemble::tape_row_key(arm, ++pull_counts_[arm]));
      } else {
        ensemble_->record(cov_, x);
      }
      break;
    }
    case PolicyKind::kAcbRerandomized:
      ensemble_->append_history(x);
      ensemble_->rerandomize(cov_);
      break;
    case PolicyKind::kAcbLazy:
      // Targets stay untouched until the next anchor.
      ensemble_->append_history(x);
      break;
    default:
      break;
  }
}

void TheoryParams::validate() const {
  if (t_horizon < 1 || d < 1 || a_count < 1) {
    throw std::invalid_argument("theory: T, d, A must be >= 1");
  }
  if (!(b_bound > 0.0) || !(w_bound > 0.0) || !(sigma_noise > 0.0)) {
    throw std::invalid_argument("theory: B, W, sigma must be positive");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("theory: delta must lie in (0, 1)");
  }
}

double TheoryParams::lambda() const {
  validate();
  return sigma_noise * sigma_noise / (w_bound * w_bound);
}

double theory_beta(const TheoryParams& p) {
  const double lambda = p.lambda();
  const double t = static_cast<double>(p.t_horizon);
  const double log_term =
      p.d * std::log1p(t * p.b_bound / (lambda * p.d)) + std::log(t / p.delta);
  return std::sqrt(lambda) * p.w_bound +
         std::sqrt(2.0) * p.sigma_noise * std::sqrt(log_term);
}

int theory_ensemble_size(long t_horizon, double delta, TargetMode variant,
                         int a_count) {
  if (t_horizon < 1 || !(delta > 0.0) || !(delta < 1.0) || a_count < 1) {
    throw std::invalid_argument("theory_ensemble_size: bad arguments");
  }
  const double t = static_cast<double>(t_horizon);
  double inner = 0.0;
  switch (variant) {
    case TargetMode::kRerandomized: inner = 2.0 * t / delta; break;
    case TargetMode::kIncremental: inner = t / delta; break;
    case TargetMode::kLazy: inner = a_count * t / delta; break;
  }
  const int m = static_cast<int>(std::ceil(std::log(inner)));
  return m > 0 ? m : 1;
}

double regret_envelope(const TheoryParams& p, double gamma2) {
  if (!(gamma2 >= 0.0)) {
    throw std::invalid_argument("regret_envelope: gamma2 must be >= 0");
  }
  const double lambda = p.lambda();
  const double t = static_cast<double>(p.t_horizon);
  const double beta_bar = theory_beta(p);
  return (gamma2 + beta_bar) *
         std::sqrt(2.0 * p.d * t * std::log1p(t * p.b_bound / (lambda * p.d)));
}

std::pair<double, double> gaussian_max_bounds(int m, double delta) {
  if (m < 1 || !(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("gaussian_max_bounds: bad arguments");
  }
  const double log_log = std::log(std::log(1.0 / delta));
  const double inner = std::log(m / 2.0) - log_log;
  const double lower =
      inner > 0.0 ? std::sqrt(M_PI / 2.0) * std::sqrt(inner) : 0.0;
  const double upper = std::sqrt(2.0) * (std::sqrt(std::log(2.0 * m)) +
                                         std::sqrt(std::log(1.0 / delta)));
  return {lower, upper};
}

}  // namespace acb
