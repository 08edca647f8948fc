#include "acb/env.hpp"

#include <cmath>
#include <stdexcept>

#include "acb/linalg.hpp"

namespace acb {

namespace {
constexpr uint64_t kNoiseTag = 0x4013e;
constexpr uint64_t kActionTag = 0xac710;
constexpr uint64_t kOptArmTag = 0x09717;
}  // namespace

Environment Environment::fixed_set(Eigen::VectorXd theta_star,
                                   Eigen::MatrixXd actions, double sigma_noise,
                                   long horizon, uint64_t seed,
                                   NoiseKeying keying) {
  if (actions.rows() < 1) {
    throw std::invalid_argument("environment: empty action set");
  }
  if (actions.cols() != theta_star.size()) {
    throw std::invalid_argument("environment: dimension mismatch");
  }
  if (sigma_noise < 0.0 || horizon < 0) {
    throw std::invalid_argument("environment: bad sigma or horizon");
  }
  Environment env;
  env.dim_ = static_cast<int>(actions.cols());
  env.a_count_ = static_cast<int>(actions.rows());
  env.sigma_noise_ = sigma_noise;
  env.horizon_ = horizon;
  env.seed_ = seed;
  env.keying_ = keying;
  env.theta_star_ = std::move(theta_star);
  env.fixed_actions_ = std::move(actions);
  env.fixed_means_ = env.fixed_actions_ * env.theta_star_;
  env.fixed_best_mean_ = env.fixed_means_.maxCoeff(&env.fixed_best_action_);
  if (keying == NoiseKeying::kByArmPull) {
    env.pull_counts_.assign(env.a_count_, 0);
  }
  return env;
}

Environment Environment::per_round(int dim, int a_count,
                                   Eigen::VectorXd theta_star,
                                   double sigma_noise, long horizon,
                                   uint64_t seed) {
  if (dim < 1 || a_count < 1) {
    throw std::invalid_argument("environment: dim and a_count must be >= 1");
  }
  if (theta_star.size() != dim) {
    throw std::invalid_argument("environment: dimension mismatch");
  }
  Environment env;
  env.dim_ = dim;
  env.a_count_ = a_count;
  env.sigma_noise_ = sigma_noise;
  env.horizon_ = horizon;
  env.seed_ = seed;
  env.per_round_ = true;
  env.theta_star_ = std::move(theta_star);
  return env;
}

Environment Environment::figure2_mab(long horizon, uint64_t seed) {
  const int arms = 50;
  rng::Stream stream(rng::mix(seed, kOptArmTag));
  const long best = stream.next_below(arms);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(arms, 0.25);
  theta[best] = 0.75;
  return fixed_set(std::move(theta), Eigen::MatrixXd::Identity(arms, arms),
                   0.1, horizon, seed);
}

const Eigen::MatrixXd& Environment::action_set() const {
  if (per_round_) {
    throw std::invalid_argument("action_set: environment has per-round actions");
  }
  return fixed_actions_;
}

int Environment::optimal_action() const {
  if (per_round_) {
    throw std::invalid_argument("optimal_action: per-round actions");
  }
  return fixed_best_action_;
}

Eigen::MatrixXd Environment::actions(long round) const {
  if (!per_round_) {
    return fixed_actions_;
  }
  Eigen::MatrixXd acts(a_count_, dim_);
  for (int a = 0; a < a_count_; ++a) {
    rng::Stream stream(rng::mix(seed_, kActionTag, round, a));
    acts.row(a) = sample_unit_vector(stream, dim_).transpose();
  }
  return acts;
}

void Environment::check_action(long round, int action) const {
  (void)round;
  if (action < 0 || action >= a_count_) {
    throw std::invalid_argument("environment: action index out of range");
  }
}

double Environment::mean_reward(long round, int action) const {
  check_action(round, action);
  if (!per_round_) {
    return fixed_means_[action];
  }
  rng::Stream stream(rng::mix(seed_, kActionTag, round, action));
  return sample_unit_vector(stream, dim_).dot(theta_star_);
}

double Environment::best_mean(long round) const {
  if (!per_round_) {
    return fixed_best_mean_;
  }
  double best = mean_reward(round, 0);
  for (int a = 1; a < a_count_; ++a) {
    best = std::max(best, mean_reward(round, a));
  }
  return best;
}

double Environment::arm_pull_noise(uint64_t seed, int arm, long pull) {
  return rng::normal_at(rng::mix(seed, kNoiseTag, arm, pull));
}

double Environment::step(long round, int action) {
  check_action(round, action);
  double noise = 0.0;
  if (keying_ == NoiseKeying::kByArmPull) {
    noise = arm_pull_noise(seed_, action, ++pull_counts_[action]);
  } else {
    noise = rng::normal_at(rng::mix(seed_, kNoiseTag, round));
  }
  return mean_reward(round, action) + sigma_noise_ * noise;
}

double Environment::instantaneous_regret(long round, int action) const {
  check_action(round, action);
  const double gap = best_mean(round) - mean_reward(round, action);
  return gap > 0.0 ? gap : 0.0;
}

}  // namespace acb
