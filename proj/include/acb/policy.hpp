#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acb/ensemble.hpp"
#include "acb/linalg.hpp"

namespace acb {

enum class PolicyKind {
  kLinUcb,
  kAcbRerandomized,
  kAcbIncremental,
  kAcbLazy,
  kGreedy,
  kUniformRandom
};

std::string to_string(PolicyKind kind);
std::string to_string(OracleKind oracle);
PolicyKind policy_kind_from_string(const std::string& name);
OracleKind oracle_kind_from_string(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kLinUcb;
  double beta = 1.0;
  double lambda = 1.0;
  int m = 1;  // ensemble size, ACB kinds only
  OracleKind oracle = OracleKind::kExactRls;
  double gamma = 0.0;  // re-randomization budget, AcbLazy only
  uint64_t seed = 0;
  SgdConfig sgd;
  bool gaussian_fast_path = false;
  // Keys reward-noise-independent target streams by (arm, pull count)
  // instead of global row index. Standard-basis action features only.
  bool mab_tape_keying = false;

  bool is_acb() const {
    return kind == PolicyKind::kAcbRerandomized ||
           kind == PolicyKind::kAcbIncremental ||
           kind == PolicyKind::kAcbLazy;
  }
  void validate(int dim) const;
};

struct LazyState {
  long omega = 0;
  int anchor_action = -1;
  long anchor_time = 0;
  long rerandomize_count = 0;
  double anchor_bonus = 0.0;
};

// One bandit decision rule with its estimator state. Single-threaded;
// distinct instances run fully in parallel with independent seeds.
class Policy {
 public:
  Policy(int dim, PolicyConfig config);

  // Picks an action among the rows of `actions`. Ties break toward the
  // lowest index.
  int select_action(const Eigen::Ref<const Eigen::MatrixXd>& actions);

  // Folds the played feature and observed reward into the estimator and
  // advances the ensemble according to its target mode.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x, double reward);

  int dim() const { return dim_; }
  const PolicyConfig& config() const { return config_; }
  const CovarianceState& covariance() const { return cov_; }
  const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
  const Eigen::VectorXd& reward_moment() const { return reward_moment_; }
  const NoiseEnsemble* ensemble() const { return ensemble_.get(); }
  const LazyState& lazy() const { return lazy_; }
  long round() const { return round_; }
  // Bonus of the action returned by the last select_action call.
  double last_bonus() const { return last_bonus_; }
  long rerandomize_count() const {
    return ensemble_ ? ensemble_->rerandomize_count() : 0;
  }

  static uint64_t derive_ensemble_seed(uint64_t policy_seed);

 private:
  int argmax_lowest(const Eigen::VectorXd& scores) const;

  int dim_;
  PolicyConfig config_;
  CovarianceState cov_;
  Eigen::VectorXd reward_moment_;
  Eigen::VectorXd theta_hat_;
  std::unique_ptr<NoiseEnsemble> ensemble_;
  LazyState lazy_;
  long round_ = 0;
  double last_bonus_ = 0.0;
  std::vector<long> pull_counts_;  // tape keying only
};

// Problem constants for the confidence-width and regret formulas.
struct TheoryParams {
  long t_horizon = 0;
  int d = 0;
  int a_count = 0;
  double b_bound = 0.0;   // sup ||x||
  double w_bound = 0.0;   // ||theta*|| bound
  double sigma_noise = 0.0;
  double delta = 0.0;

  void validate() const;
  // The sigma^2 / W^2 regularizer the closed-form constants assume.
  double lambda() const;
};

// sqrt(lambda) W + sqrt(2) sigma sqrt(d log(1 + TB/(lambda d)) + log(T/delta))
// with lambda = sigma^2 / W^2.
double theory_beta(const TheoryParams& p);

// Sufficient ensemble size for each target mode:
// re-randomized ceil(log(2T/delta)), incremental ceil(log(T/delta)),
// lazy ceil(log(AT/delta)). Natural logarithms.
int theory_ensemble_size(long t_horizon, double delta, TargetMode variant,
                         int a_count = 1);

// (gamma2 + beta_bar) sqrt(2 d T log(1 + TB/(lambda d))).
double regret_envelope(const TheoryParams& p, double gamma2);

// High-probability envelope for max_j |z_j| over m standard Gaussians:
// lower sqrt(pi/2) sqrt(log(m/2) - log log(1/delta)) (0 when not real),
// upper sqrt(2) (sqrt(log 2m) + sqrt(log 1/delta)).
std::pair<double, double> gaussian_max_bounds(int m, double delta);

}  // namespace acb
