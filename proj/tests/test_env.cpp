#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "acb/env.hpp"

using acb::Environment;
using acb::NoiseKeying;

TEST_CASE("figure2 preset constants") {
  Environment env = Environment::figure2_mab(1000, 5);
  CHECK(env.dim() == 50);
  CHECK(env.action_count() == 50);
  CHECK(env.sigma_noise() == doctest::Approx(0.1));
  CHECK(env.action_set().isApprox(Eigen::MatrixXd::Identity(50, 50)));
  const int best = env.optimal_action();
  CHECK(env.mean_reward(1, best) == doctest::Approx(0.75));
  CHECK(env.instantaneous_regret(1, best) == doctest::Approx(0.0));
  for (int a = 0; a < 50; ++a) {
    if (a != best) {
      CHECK(env.mean_reward(1, a) == doctest::Approx(0.25));
      CHECK(env.instantaneous_regret(1, a) == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("different seeds move the optimal arm") {
  int distinct = 0;
  const int base = Environment::figure2_mab(10, 0).optimal_action();
  for (uint64_t seed = 1; seed < 20; ++seed) {
    if (Environment::figure2_mab(10, seed).optimal_action() != base) {
      ++distinct;
    }
  }
  CHECK(distinct > 0);
}

TEST_CASE("noiseless steps return the exact mean") {
  Eigen::VectorXd theta(2);
  theta << 0.4, -0.2;
  Environment env = Environment::fixed_set(
      theta, Eigen::MatrixXd::Identity(2, 2), 0.0, 10, 9);
  CHECK(env.step(1, 0) == doctest::Approx(0.4));
  CHECK(env.step(2, 1) == doctest::Approx(-0.2));
}

TEST_CASE("reward noise is centered and replayable") {
  Environment env = Environment::figure2_mab(0, 31);
  const int best = env.optimal_action();
  const int n = 10000;
  double mean = 0.0;
  for (int t = 1; t <= n; ++t) {
    mean += env.step(t, best);
  }
  mean /= n;
  CHECK(std::abs(mean - 0.75) <= 3.0 * 0.1 / std::sqrt(n));  // 0.003 margin

  Environment replay = Environment::figure2_mab(0, 31);
  Environment replay2 = Environment::figure2_mab(0, 31);
  for (int t = 1; t <= 100; ++t) {
    CHECK(replay.step(t, t % 50) == replay2.step(t, t % 50));
  }
}

TEST_CASE("noise depends only on the environment stream") {
  // Same env seed and same action sequence give the same rewards no matter
  // what any policy-side generator does.
  Environment a = Environment::figure2_mab(0, 77);
  Environment b = Environment::figure2_mab(0, 77);
  for (int t = 1; t <= 200; ++t) {
    const int action = (t * 13) % 50;
    CHECK(a.step(t, action) == b.step(t, action));
  }
}

TEST_CASE("per-arm-pull keying depends on the pull count, not the round") {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  Environment a =
      Environment::fixed_set(theta, Eigen::MatrixXd::Identity(3, 3), 1.0, 0,
                             55, NoiseKeying::kByArmPull);
  Environment b =
      Environment::fixed_set(theta, Eigen::MatrixXd::Identity(3, 3), 1.0, 0,
                             55, NoiseKeying::kByArmPull);
  // a pulls arm 0 at rounds 1..5; b pulls arm 0 at rounds 2,4,6,8,10.
  std::vector<double> ra, rb;
  for (int t = 1; t <= 5; ++t) {
    ra.push_back(a.step(t, 0));
  }
  for (int t = 1; t <= 10; ++t) {
    if (t % 2 == 0) {
      rb.push_back(b.step(t, 0));
    } else {
      b.step(t, 1);
    }
  }
  CHECK(ra == rb);
  CHECK(ra[0] == Environment::arm_pull_noise(55, 0, 1));
}

TEST_CASE("degenerate theta gives zero regret everywhere") {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  Environment env = Environment::fixed_set(
      theta, Eigen::MatrixXd::Identity(4, 4), 0.1, 0, 3);
  for (int a = 0; a < 4; ++a) {
    CHECK(env.instantaneous_regret(1, a) == 0.0);
  }
}

TEST_CASE("per-round generator draws replayable unit vectors") {
  Eigen::VectorXd theta(4);
  theta << 1, 0, 0, 0;
  Environment env = Environment::per_round(4, 7, theta, 0.1, 100, 21);
  Environment replay = Environment::per_round(4, 7, theta, 0.1, 100, 21);
  for (long t = 1; t <= 50; ++t) {
    const Eigen::MatrixXd acts = env.actions(t);
    CHECK(acts.rows() == 7);
    for (int a = 0; a < 7; ++a) {
      CHECK(acts.row(a).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(acts == replay.actions(t));
    CHECK(env.best_mean(t) ==
          doctest::Approx((acts * theta).maxCoeff()).epsilon(1e-12));
  }
  // Distinct rounds draw distinct sets.
  CHECK(env.actions(1) != env.actions(2));

  // Norm check over ten thousand generated vectors.
  double worst = 0.0;
  for (long t = 1; t <= 1430; ++t) {
    const Eigen::MatrixXd acts = env.actions(t);
    for (int a = 0; a < acts.rows(); ++a) {
      worst = std::max(worst, std::abs(acts.row(a).norm() - 1.0));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("fixed-set optimum and argument validation") {
  Eigen::VectorXd theta(3);
  theta << 0.1, 0.9, 0.2;
  Environment env = Environment::fixed_set(
      theta, Eigen::MatrixXd::Identity(3, 3), 0.1, 0, 3);
  CHECK(env.optimal_action() == 1);
  CHECK_THROWS_AS(env.step(1, 3), std::invalid_argument);
  CHECK_THROWS_AS(env.step(1, -1), std::invalid_argument);
  CHECK_THROWS_AS(env.instantaneous_regret(1, 5), std::invalid_argument);
  CHECK_THROWS_AS(
      Environment::fixed_set(theta, Eigen::MatrixXd::Identity(2, 2), 0.1, 0, 3),
      std::invalid_argument);
}
