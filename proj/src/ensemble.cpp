#include "acb/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "acb/errors.hpp"

namespace acb {

namespace {
constexpr uint64_t kTargetTag = 0x7a26e7;
constexpr uint64_t kWarmTag = 0x3a23;
constexpr uint64_t kDataTag = 0xda7a;
constexpr uint64_t kTapeTag = 0x7a9e;
constexpr uint64_t kEpochTag = 0xe90c;
constexpr uint64_t kFastTag = 0xfa57;
constexpr uint64_t kShuffleTag = 0x54f1;
}  // namespace

uint64_t NoiseEnsemble::warm_row_key(int i) { return rng::mix(kWarmTag, i); }

uint64_t NoiseEnsemble::data_row_key(long row) {
  return rng::mix(kDataTag, row);
}

uint64_t NoiseEnsemble::tape_row_key(int arm, long pull) {
  return rng::mix(kTapeTag, arm, pull);
}

uint64_t NoiseEnsemble::epoch_row_key(long epoch, long row) {
  return rng::mix(kEpochTag, epoch, row);
}

double NoiseEnsemble::keyed_target(uint64_t seed, int regressor,
                                   uint64_t row_key) {
  return rng::normal_at(rng::mix(seed, kTargetTag, regressor, row_key));
}

NoiseEnsemble::NoiseEnsemble(int dim, double lambda, int m, TargetMode mode,
                             OracleKind oracle, uint64_t seed, SgdConfig sgd)
    : dim_(dim),
      lambda_(lambda),
      m_(m),
      mode_(mode),
      oracle_(oracle),
      seed_(seed),
      sgd_(sgd) {
  if (dim < 1 || m < 1) {
    throw std::invalid_argument("NoiseEnsemble: dim and m must be >= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("NoiseEnsemble: lambda must be positive");
  }
  const double sqrt_lambda = std::sqrt(lambda);
  weights_.resize(dim, m);
  moments_.resize(dim, m);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < m; ++j) {
      const double y = keyed_target(seed_, j, warm_row_key(i));
      // Warm rows sqrt(lambda)*e_i with targets y make the unregularized
      // solution over warm rows alone w_i = y_i / sqrt(lambda).
      moments_(i, j) = sqrt_lambda * y;
      weights_(i, j) = y / sqrt_lambda;
    }
  }
  polyak_ = weights_;
  if (retains_history()) {
    history_.reserve(static_cast<size_t>(dim) + 64);
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      row[i] = sqrt_lambda;
      history_.push_back(std::move(row));
    }
  }
  row_count_ = dim;
}

Eigen::RowVectorXd NoiseEnsemble::sample_targets(uint64_t row_key) const {
  Eigen::RowVectorXd y(m_);
  for (int j = 0; j < m_; ++j) {
    y[j] = keyed_target(seed_, j, row_key);
  }
  return y;
}

void NoiseEnsemble::record(const CovarianceState& cov,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  record_impl(cov, x, data_row_key(row_count_));
}

void NoiseEnsemble::record(const CovarianceState& cov,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           uint64_t row_key) {
  record_impl(cov, x, row_key);
}

void NoiseEnsemble::record_impl(const CovarianceState& cov,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                uint64_t row_key) {
  if (mode_ == TargetMode::kRerandomized) {
    throw ModeError("record: not available with re-randomized targets");
  }
  if (x.size() != dim_) {
    throw std::invalid_argument("record: dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("record: non-finite entries");
  }
  const Eigen::RowVectorXd y = sample_targets(row_key);
  if (retains_history()) {
    history_.push_back(x);
  }
  ++row_count_;
  if (oracle_ == OracleKind::kExactRls) {
    moments_.noalias() += x * y;
    // cov already contains x, so with v = sigma_inv x the batch solution
    // advances as W <- W + v (y - x^T W). Resynced from the moments on the
    // covariance refresh cadence to bound drift.
    const Eigen::VectorXd v = cov.solve(x);
    const Eigen::RowVectorXd residual = y - x.transpose() * weights_;
    weights_.noalias() += v * residual;
    if (cov.update_count() % CovarianceState::kRefreshPeriod == 0) {
      weights_.noalias() = cov.sigma_inv() * moments_;
    }
  } else {
    const double lr = sgd_.learning_rate;
    for (int step = 0; step < sgd_.passes_per_refresh; ++step) {
      const Eigen::RowVectorXd resid = x.transpose() * weights_ - y;
      weights_.noalias() -= lr * x * resid;
      ++polyak_steps_;
      polyak_ += (weights_ - polyak_) / static_cast<double>(polyak_steps_);
    }
  }
}

void NoiseEnsemble::append_history(
    const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!retains_history()) {
    throw ModeError("append_history: incremental mode keeps no history");
  }
  if (x.size() != dim_) {
    throw std::invalid_argument("append_history: dimension mismatch");
  }
  history_.push_back(x);
  ++row_count_;
}

void NoiseEnsemble::rerandomize(const CovarianceState& cov) {
  if (mode_ == TargetMode::kIncremental) {
    throw ModeError("rerandomize: not available with incremental targets");
  }
  ++epoch_;
  const long rows = static_cast<long>(history_.size());
  if (oracle_ == OracleKind::kExactRls && fast_path_) {
    for (int j = 0; j < m_; ++j) {
      rng::Stream stream(rng::mix(seed_, kFastTag, epoch_, j));
      weights_.col(j) = cov.sample_from_inverse(stream);
    }
    return;
  }
  Eigen::MatrixXd targets(rows, m_);
  for (long r = 0; r < rows; ++r) {
    targets.row(r) = sample_targets(epoch_row_key(epoch_, r));
  }
  if (oracle_ == OracleKind::kExactRls) {
    moments_.setZero();
    for (long r = 0; r < rows; ++r) {
      moments_.noalias() += history_[r] * targets.row(r);
    }
    weights_.noalias() = cov.sigma_inv() * moments_;
  } else {
    sgd_refresh(history_, targets, sgd_);
  }
}

double NoiseEnsemble::bonus(const Eigen::Ref<const Eigen::VectorXd>& x,
                            double beta) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("bonus: dimension mismatch");
  }
  return beta * (scoring_weights().transpose() * x).cwiseAbs().maxCoeff();
}

Eigen::VectorXd NoiseEnsemble::bonuses(
    const Eigen::Ref<const Eigen::MatrixXd>& actions, double beta) const {
  if (actions.cols() != dim_) {
    throw std::invalid_argument("bonuses: dimension mismatch");
  }
  scratch_.resize(actions.rows(), m_);
  scratch_.noalias() = actions * scoring_weights();
  return beta * scratch_.cwiseAbs().rowwise().maxCoeff();
}

void NoiseEnsemble::sgd_refresh(const std::vector<Eigen::VectorXd>& rows,
                                const Eigen::MatrixXd& targets,
                                const SgdConfig& config) {
  if (oracle_ != OracleKind::kSgdPolyak) {
    throw ModeError("sgd_refresh: requires the SgdPolyak oracle");
  }
  if (rows.empty()) {
    throw std::invalid_argument("sgd_refresh: empty dataset");
  }
  const long n = static_cast<long>(rows.size());
  if (targets.rows() != n || targets.cols() != m_) {
    throw std::invalid_argument("sgd_refresh: target shape mismatch");
  }
  ++refresh_count_;
  const long total_steps = static_cast<long>(config.passes_per_refresh) * n;
  const long skip = static_cast<long>(
      std::floor(config.polyak_start_fraction * total_steps));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim_, m_);
  long averaged = 0;
  long step = 0;
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double lr = config.learning_rate;
  for (int pass = 0; pass < config.passes_per_refresh; ++pass) {
    rng::Stream shuffle(rng::mix(seed_, kShuffleTag, refresh_count_, pass));
    for (long i = n - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle.next_below(i + 1)]);
    }
    for (long i = 0; i < n; ++i) {
      const Eigen::VectorXd& x = rows[order[i]];
      const Eigen::RowVectorXd resid =
          x.transpose() * weights_ - targets.row(order[i]);
      weights_.noalias() -= lr * x * resid;
      ++step;
      if (step > skip) {
        sum += weights_;
        ++averaged;
      }
    }
  }
  polyak_ = averaged > 0 ? (sum / static_cast<double>(averaged)).eval()
                         : weights_;
  polyak_steps_ = averaged;
}

}  // namespace acb
