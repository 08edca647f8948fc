#include "acb/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "acb/errors.hpp"

namespace acb {

CovarianceState::CovarianceState(int dim, double lambda)
    : dim_(dim), lambda_(lambda) {
  if (dim < 1) {
    throw std::invalid_argument("CovarianceState: dim must be >= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("CovarianceState: lambda must be positive");
  }
  sigma_ = Eigen::MatrixXd::Identity(dim, dim) * lambda;
  sigma_inv_ = Eigen::MatrixXd::Identity(dim, dim) / lambda;
  log_det_ = dim * std::log(lambda);
}

void CovarianceState::rank_one_update(
    const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != dim_) {
    throw std::invalid_argument("rank_one_update: dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("rank_one_update: non-finite entries");
  }
  const Eigen::VectorXd v = sigma_inv_ * x;
  const double s = x.dot(v);
  sigma_.noalias() += x * x.transpose();
  sigma_inv_.noalias() -= v * v.transpose() / (1.0 + s);
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();
  sigma_inv_ = (0.5 * (sigma_inv_ + sigma_inv_.transpose())).eval();
  log_det_ += std::log1p(s);
  ++update_count_;
  if (update_count_ % kRefreshPeriod == 0) {
    refresh();
  }
}

double CovarianceState::quadratic_form(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("quadratic_form: dimension mismatch");
  }
  const double q = x.dot(sigma_inv_ * x);
  return q > 0.0 ? q : 0.0;
}

double CovarianceState::elliptical_norm(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::sqrt(quadratic_form(x));
}

Eigen::VectorXd CovarianceState::solve(
    const Eigen::Ref<const Eigen::VectorXd>& b) const {
  if (b.size() != dim_) {
    throw std::invalid_argument("solve: dimension mismatch");
  }
  return sigma_inv_ * b;
}

Eigen::VectorXd CovarianceState::sample_from_inverse(
    rng::Stream& stream) const {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw NumericError("sample_from_inverse: covariance not positive definite");
  }
  const Eigen::VectorXd z = sample_gaussian_vector(stream, dim_);
  // U w = z with U = L^T gives Cov(w) = (L L^T)^-1 = sigma_inv.
  return llt.matrixU().solve(z);
}

void CovarianceState::refresh() {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw NumericError("refresh: covariance not positive definite");
  }
  sigma_inv_ = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
  sigma_inv_ = (0.5 * (sigma_inv_ + sigma_inv_.transpose())).eval();
  log_det_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd sample_gaussian_vector(rng::Stream& stream, int dim) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) {
    z[i] = stream.next_gaussian();
  }
  return z;
}

Eigen::VectorXd sample_unit_vector(rng::Stream& stream, int dim) {
  while (true) {
    Eigen::VectorXd z = sample_gaussian_vector(stream, dim);
    const double norm = z.norm();
    if (norm > 1e-12) {
      return z / norm;
    }
  }
}

}  // namespace acb
