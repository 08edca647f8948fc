#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "acb/rng.hpp"

namespace acb {

// How reward-noise sub-streams are keyed. kByRound draws one value per round;
// kByArmPull keys by (action index, pull count), which lets a pre-sampled
// noise tape replay a run exactly. Fixed action sets only for the latter.
enum class NoiseKeying { kByRound, kByArmPull };

// Stochastic linear bandit environment: ground truth theta*, per-round
// action features, and N(0, sigma^2) reward noise. All draws are keyed from
// the environment seed, so replays are exact and independent of any policy
// randomness.
class Environment {
 public:
  static Environment fixed_set(Eigen::VectorXd theta_star,
                               Eigen::MatrixXd actions, double sigma_noise,
                               long horizon, uint64_t seed,
                               NoiseKeying keying = NoiseKeying::kByRound);

  // Draws a fresh set of a_count uniform unit vectors every round.
  static Environment per_round(int dim, int a_count, Eigen::VectorXd theta_star,
                               double sigma_noise, long horizon, uint64_t seed);

  // The synthetic 50-armed bandit: standard-basis actions, one uniformly
  // chosen arm with mean reward 0.75, the rest 0.25, noise N(0, 0.1^2).
  static Environment figure2_mab(long horizon, uint64_t seed);

  int dim() const { return dim_; }
  int action_count() const { return a_count_; }
  long horizon() const { return horizon_; }
  double sigma_noise() const { return sigma_noise_; }
  uint64_t seed() const { return seed_; }
  const Eigen::VectorXd& theta_star() const { return theta_star_; }
  bool has_fixed_actions() const { return !per_round_; }

  // Fixed-set accessors.
  const Eigen::MatrixXd& action_set() const;
  int optimal_action() const;

  // Action features for a round, one per row. Regenerating the same round
  // yields the same matrix.
  Eigen::MatrixXd actions(long round) const;

  double mean_reward(long round, int action) const;
  double best_mean(long round) const;

  // Mean reward plus one keyed noise draw. Mutates per-arm pull counts under
  // kByArmPull keying.
  double step(long round, int action);

  double instantaneous_regret(long round, int action) const;

  // The noise value a kByArmPull environment uses for the pull-th play of an
  // arm (unscaled by sigma). Exposed for tape constructions.
  static double arm_pull_noise(uint64_t seed, int arm, long pull);

 private:
  Environment() = default;
  void check_action(long round, int action) const;

  int dim_ = 0;
  int a_count_ = 0;
  double sigma_noise_ = 0.0;
  long horizon_ = 0;
  uint64_t seed_ = 0;
  bool per_round_ = false;
  NoiseKeying keying_ = NoiseKeying::kByRound;
  Eigen::VectorXd theta_star_;
  Eigen::MatrixXd fixed_actions_;   // a_count x dim
  Eigen::VectorXd fixed_means_;
  double fixed_best_mean_ = 0.0;
  int fixed_best_action_ = 0;
  std::vector<long> pull_counts_;
};

}  // namespace acb
