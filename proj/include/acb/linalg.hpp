#pragma once

#include <Eigen/Dense>

#include "acb/rng.hpp"

namespace acb {

// Regularized design matrix lambda*I + sum_t x_t x_t^T together with a
// maintained inverse and log-determinant.
//
// The inverse is kept current with Sherman-Morrison rank-one updates and
// re-symmetrized after every step; a dense recomputation every
// kRefreshPeriod updates bounds floating-point drift. The log-determinant is
// advanced with the matching rank-one identity log det(A + xx^T) =
// log det(A) + log(1 + x^T A^-1 x) and refreshed on the same cadence.
//
// Single writer; concurrent readers are fine between updates.
class CovarianceState {
 public:
  static constexpr long kRefreshPeriod = 1000;

  CovarianceState(int dim, double lambda);

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  long update_count() const { return update_count_; }
  double log_det() const { return log_det_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& sigma_inv() const { return sigma_inv_; }

  void rank_one_update(const Eigen::Ref<const Eigen::VectorXd>& x);

  // x^T sigma_inv x, clamped at zero.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // sqrt(x^T sigma_inv x); zero exactly when x is zero.
  double elliptical_norm(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // sigma_inv * b.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b) const;

  // Draws w ~ N(0, sigma_inv) through a Cholesky factorization of sigma.
  Eigen::VectorXd sample_from_inverse(rng::Stream& stream) const;

  // Recomputes sigma_inv and log_det from sigma by dense factorization.
  void refresh();

 private:
  int dim_;
  double lambda_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sigma_inv_;
  double log_det_;
  long update_count_ = 0;
};

// d independent N(0,1) coordinates.
Eigen::VectorXd sample_gaussian_vector(rng::Stream& stream, int dim);

// Uniform draw from the unit sphere in R^d.
Eigen::VectorXd sample_unit_vector(rng::Stream& stream, int dim);

}  // namespace acb
