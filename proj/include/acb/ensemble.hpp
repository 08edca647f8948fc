#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "acb/linalg.hpp"
#include "acb/rng.hpp"

namespace acb {

// How the random regression targets are refreshed over time.
enum class TargetMode { kRerandomized, kIncremental, kLazy };

// Least-squares oracle backing the ensemble regressors.
enum class OracleKind { kExactRls, kSgdPolyak };

struct SgdConfig {
  double learning_rate = 0.05;
  // Fraction of a refresh pass skipped before iterate averaging starts.
  // Streaming updates keep a running average of all iterates instead.
  double polyak_start_fraction = 0.5;
  int passes_per_refresh = 1;
};

// M linear regressors trained to predict i.i.d. N(0,1) targets from the
// played features. The maximum absolute prediction across the ensemble,
// scaled by beta, is the exploration bonus.
//
// Construction performs the warm start: d synthetic rows sqrt(lambda)*e_i
// with standard Gaussian targets, which makes the unregularized regression
// over all rows coincide with the ridge solution and gives the re-randomized
// weights the exact law N(0, sigma_inv).
//
// All target draws come from sub-streams keyed by (regressor index, row key),
// so results do not depend on update order or on any parallelism across
// regressors.
class NoiseEnsemble {
 public:
  NoiseEnsemble(int dim, double lambda, int m, TargetMode mode,
                OracleKind oracle, uint64_t seed, SgdConfig sgd = {});

  int dim() const { return dim_; }
  int m() const { return m_; }
  TargetMode mode() const { return mode_; }
  OracleKind oracle() const { return oracle_; }
  uint64_t seed() const { return seed_; }
  long history_size() const { return static_cast<long>(history_.size()); }
  long rerandomize_count() const { return epoch_; }
  const std::vector<Eigen::VectorXd>& history() const { return history_; }

  // dim x m weight matrix (column j = regressor j).
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& moments() const { return moments_; }
  const Eigen::MatrixXd& polyak_weights() const { return polyak_; }

  // Weights used for bonus scoring: the Polyak average under SgdPolyak,
  // the exact solution otherwise.
  const Eigen::MatrixXd& scoring_weights() const {
    return oracle_ == OracleKind::kSgdPolyak ? polyak_ : weights_;
  }

  // Ingests one data row whose feature has already been folded into cov by
  // the caller. Samples one fresh target per regressor and advances the
  // oracle. Incremental or Lazy mode only.
  void record(const CovarianceState& cov,
              const Eigen::Ref<const Eigen::VectorXd>& x);

  // Same, with a caller-chosen sub-stream key for the new row's targets.
  void record(const CovarianceState& cov,
              const Eigen::Ref<const Eigen::VectorXd>& x, uint64_t row_key);

  // Appends a played feature to the replay history without sampling targets.
  // Rerandomized or Lazy mode only.
  void append_history(const Eigen::Ref<const Eigen::VectorXd>& x);

  // Resamples every target (warm rows included) and re-solves all
  // regressors over the retained history. Rerandomized or Lazy mode only.
  void rerandomize(const CovarianceState& cov);

  // beta * max_j |<x, w_j>|.
  double bonus(const Eigen::Ref<const Eigen::VectorXd>& x, double beta) const;

  // Row-wise bonuses for a stacked action matrix (one action per row).
  Eigen::VectorXd bonuses(const Eigen::Ref<const Eigen::MatrixXd>& actions,
                          double beta) const;

  // Runs shuffled SGD passes over an explicit dataset; targets is
  // rows x m. SgdPolyak oracle only.
  void sgd_refresh(const std::vector<Eigen::VectorXd>& rows,
                   const Eigen::MatrixXd& targets, const SgdConfig& config);

  // Draws weights directly from N(0, sigma_inv) instead of replaying the
  // history at rerandomize time. Equal in law to the literal path for the
  // exact oracle; off by default.
  void set_gaussian_fast_path(bool enabled) { fast_path_ = enabled; }
  bool gaussian_fast_path() const { return fast_path_; }

  // Sub-stream keys for row targets. Exposed so that pre-sampled "tape"
  // constructions can reproduce the exact draws.
  static uint64_t warm_row_key(int i);
  static uint64_t data_row_key(long row);
  static uint64_t tape_row_key(int arm, long pull);
  static uint64_t epoch_row_key(long epoch, long row);

  // The N(0,1) target regressor j sees for a given row key.
  static double keyed_target(uint64_t seed, int regressor, uint64_t row_key);

 private:
  void record_impl(const CovarianceState& cov,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   uint64_t row_key);
  Eigen::RowVectorXd sample_targets(uint64_t row_key) const;
  bool retains_history() const { return mode_ != TargetMode::kIncremental; }

  int dim_;
  double lambda_;
  int m_;
  TargetMode mode_;
  OracleKind oracle_;
  uint64_t seed_;
  SgdConfig sgd_;
  bool fast_path_ = false;

  Eigen::MatrixXd weights_;  // dim x m
  Eigen::MatrixXd moments_;  // dim x m, exact oracle
  Eigen::MatrixXd polyak_;   // dim x m, SGD oracle
  long polyak_steps_ = 0;

  std::vector<Eigen::VectorXd> history_;  // warm rows first, retained modes
  long row_count_ = 0;                    // rows seen, warm rows included
  long epoch_ = 0;                        // completed rerandomizations
  long refresh_count_ = 0;                // sgd_refresh invocations

  mutable Eigen::MatrixXd scratch_;  // action-scores buffer
};

}  // namespace acb
