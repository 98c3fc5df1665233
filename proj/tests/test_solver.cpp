#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "longfuse/solver.hpp"

using namespace longfuse;

namespace {

Eigen::MatrixXd random_psd(int m, std::mt19937_64 &rng, int rank = -1) {
  std::normal_distribution<double> g;
  const int r = rank < 0 ? m + 3 : rank;
  Eigen::MatrixXd B(m, r);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < r; ++j)
      B(i, j) = g(rng);
  return B * B.transpose();
}

double kkt_residual(const Eigen::MatrixXd &M, double alpha, const WeightSolution &s) {
  Eigen::MatrixXd A = M;
  A.diagonal().array() += alpha;
  return (A * s.weights - s.multiplier * Eigen::VectorXd::Ones(M.rows())).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("identity with alpha 0 gives equal weights") {
  const auto s = solve_weights(Eigen::MatrixXd::Identity(2, 2), 0.0);
  CHECK(s.weights(0) == doctest::Approx(0.5));
  CHECK(s.weights(1) == doctest::Approx(0.5));
}

TEST_CASE("diag(1,3) with alpha 0 gives (0.75, 0.25)") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 0, 0, 3;
  const auto s = solve_weights(M, 0.0);
  CHECK(std::abs(s.weights(0) - 0.75) <= 1e-12);
  CHECK(std::abs(s.weights(1) - 0.25) <= 1e-12);
  CHECK(verify_optimality(M, 0.0, s.weights, 1000, 1e-3));
  CHECK_FALSE(s.used_fallback);
}

TEST_CASE("constant Gram matrix plus alpha gives uniform weights") {
  for (int m : {2, 5, 17})
    for (double c : {0.0, 0.3, 250.0}) {
      const Eigen::MatrixXd M = Eigen::MatrixXd::Constant(m, m, c);
      const auto s = solve_weights(M, 0.1);
      for (int i = 0; i < m; ++i)
        CHECK(s.weights(i) == doctest::Approx(1.0 / m).epsilon(1e-12));
    }
}

TEST_CASE("random PSD matrices: optimal, KKT-consistent, summing to one") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 29);
    const Eigen::MatrixXd M = random_psd(m, rng, static_cast<int>(rng() % (m + 2)));
    const auto s = solve_weights(M, 0.1);
    CHECK(std::abs(s.weights.sum() - 1.0) <= 1e-9);
    CHECK(kkt_residual(M, 0.1, s) <= 1e-8 * (1.0 + M.cwiseAbs().rowwise().sum().maxCoeff()));
    CHECK(verify_optimality(M, 0.1, s.weights, 1000, 1e-3, rng()));
  }
}

TEST_CASE("a feasible perturbation of norm 0.1 is detected as suboptimal") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd M = random_psd(6, rng);
  const auto s = solve_weights(M, 0.1);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(6);
  d(0) = 1.0;
  d(1) = -1.0;
  d *= 0.1 / d.norm();
  CHECK_FALSE(verify_optimality(M, 0.1, s.weights + d, 1000, 1e-3));
}

TEST_CASE("a single atlas is vacuously optimal") {
  Eigen::VectorXd w(1);
  w << 1.0;
  CHECK(verify_optimality(Eigen::MatrixXd::Constant(1, 1, 2.0), 0.0, w, 10, 0.1));
  CHECK(solve_weights(Eigen::MatrixXd::Constant(1, 1, 0.0), 0.1).weights(0) == 1.0);
}

TEST_CASE("property: scale and permutation equivariance") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 10);
    const Eigen::MatrixXd M = random_psd(m, rng);
    const auto base = solve_weights(M, 0.1);
    const double c = 0.01 + static_cast<double>(rng() % 1000) / 10.0;
    const auto scaled = solve_weights(c * M, c * 0.1);
    CHECK((scaled.weights - base.weights).cwiseAbs().maxCoeff() <= 1e-9);

    Eigen::VectorXi perm(m);
    for (int i = 0; i < m; ++i)
      perm(i) = i;
    std::shuffle(perm.data(), perm.data() + m, rng);
    const Eigen::PermutationMatrix<Eigen::Dynamic> P(perm);
    const Eigen::MatrixXd Mp = P * M * P.transpose();
    const auto permuted = solve_weights(Mp, 0.1);
    CHECK((permuted.weights - P * base.weights).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("rank-deficient matrix with alpha 0 raises a degenerate-matrix error") {
  const Eigen::MatrixXd M = Eigen::MatrixXd::Constant(3, 3, 1.0);
  CHECK_THROWS_WITH_AS(solve_weights(M, 0.0), doctest::Contains("alpha > 0"), DegenerateMatrixError);
  CHECK_THROWS_AS(solve_weights(Eigen::MatrixXd::Zero(2, 2), 0.0), DegenerateMatrixError);
  CHECK_NOTHROW(solve_weights(M, 0.1));
}

TEST_CASE("penalty-scaled matrices with huge dynamic range solve without fallback") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd G = random_psd(6, rng);
  Eigen::VectorXd p(6);
  p << 1, 1, 1, std::exp(150.0), std::exp(150.0), std::exp(40.0);
  const Eigen::MatrixXd M = p.asDiagonal() * G * p.asDiagonal();
  const auto s = solve_weights(M, 0.1);
  CHECK_FALSE(s.used_fallback);
  CHECK(s.weights.allFinite());
  CHECK(std::abs(s.weights.sum() - 1.0) <= 1e-9);
  CHECK(std::abs(s.weights(3)) <= 1e-30);
}

TEST_CASE("negative weights are allowed") {
  // Strongly correlated errors of atlases 0 and 1 push one weight below zero.
  Eigen::MatrixXd M(3, 3);
  M << 1.0, 1.2, 0.0, 1.2, 2.0, 0.0, 0.0, 0.0, 4.0;
  const auto s = solve_weights(M, 0.0);
  CHECK(s.weights.minCoeff() < 0.0);
  CHECK(std::abs(s.weights.sum() - 1.0) <= 1e-12);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(solve_weights(Eigen::MatrixXd(0, 0), 0.1), Error);
  CHECK_THROWS_AS(solve_weights(Eigen::MatrixXd::Identity(2, 2), -1.0), Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_weights(bad, 0.1), Error);
}
