#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acb/harness.hpp"
#include "acb/policy.hpp"

#include "json.hpp"

namespace acb {

// Outcome of one statistical or deterministic check. `pass` is a pure
// function of the observed statistics against the thresholds.
struct CheckReport {
  std::string name;
  long trials = 0;
  std::vector<std::pair<std::string, double>> observed;
  std::vector<std::pair<std::string, double>> thresholds;
  bool pass = false;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Draws `trials` maxima of m absolute standard Gaussians and verifies that
// each side of the high-probability envelope fails at rate at most
// delta + 3 sqrt(delta (1-delta) / trials).
CheckReport check_gaussian_max(int m, double delta, long trials,
                               uint64_t seed);

// Builds a random history, re-randomizes `trials` times, and verifies that
// <w, x> has the variance the inverse-covariance law prescribes for ten
// random queries, and that the empirical covariance of w matches sigma_inv
// in relative Frobenius norm. 5% tolerances.
CheckReport check_ensemble_law(int d, double lambda, int history_length,
                               long trials, uint64_t seed);

// Deterministic: the summed post-update elliptical potential never exceeds
// 2 (log det Sigma_T - d log lambda).
CheckReport check_elliptical_potential(const RunResult& run, double lambda,
                                       int d);

// Deterministic on lazy runs with gamma = beta^2 pi log2 / 2: the
// determinant ratio to the last anchor stays at most 2e at every round, and
// anchor-to-anchor growth is at least sqrt(1 + pi log2 / (16 log(2AT/delta))).
CheckReport check_lazy_determinants(const RunResult& run, double delta = 0.05);

// The re-randomization count k of a lazy run satisfies
// (1 + pi log2 / (16 log(2AT/delta)))^(k/2) <= (1 + TB/(lambda d))^d.
CheckReport check_rerandomize_count(const RunResult& run,
                                    const TheoryParams& p);

// Runs `trials` independent short bandit histories with uniformly random
// pulls and verifies the confidence-width inequality
//   <a, theta* - theta_hat> <= beta_t ||a||_{Sigma^-1}
// for every action at the final round, with delta_t = delta / T; the
// empirical failure rate must stay within delta plus a 3-sigma binomial
// margin. `lambda_override` > 0 replaces the sigma^2/W^2 regularizer, which
// also admits the noiseless sigma = 0 case.
CheckReport check_confidence_width(const TheoryParams& p, long trials,
                                   uint64_t seed, double lambda_override = 0.0);

// The default `verify` suite. `scale` in (0, 1] shrinks trial counts for
// quick runs; 1 reproduces the reference settings.
std::vector<CheckReport> run_standard_suite(uint64_t seed, double scale = 1.0,
                                            int threads = 0);

}  // namespace acb
