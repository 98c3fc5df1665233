#include "longfuse/solver.hpp"

#include <cmath>
#include <random>

namespace longfuse {
namespace {

bool usable(const Eigen::VectorXd &z) {
  const double s = z.sum();
  return z.allFinite() && std::isfinite(s) && s != 0.0;
}

} // namespace

WeightSolution solve_weights(const Eigen::MatrixXd &M, double alpha) {
  const Eigen::Index m = M.rows();
  if (m == 0 || M.cols() != m)
    throw Error("solve_weights: matrix must be square and non-empty");
  if (!(alpha >= 0.0))
    throw Error("solve_weights: alpha must be non-negative");
  if (!M.allFinite())
    throw Error("solve_weights: matrix has non-finite entries");

  Eigen::MatrixXd A = M;
  A.diagonal().array() += alpha;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);

  WeightSolution out;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  Eigen::VectorXd z;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    // With alpha > 0 and M PSD every pivot is at least alpha, whatever the
    // dynamic range of M. With alpha = 0 a vanishing pivot means A is singular.
    const auto d = ldlt.vectorD();
    const double scale = d.cwiseAbs().maxCoeff();
    if (alpha > 0.0)
      ok = (d.array() > 0.0).all();
    else
      ok = scale > 0.0 && (d.cwiseAbs().array() > scale * 1e-14).all();
    if (ok) {
      z = ldlt.solve(ones);
      ok = usable(z);
    }
  }
  if (!ok) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (alpha == 0.0 && cod.rank() < m)
      throw DegenerateMatrixError("solve_weights: degenerate matrix (rank " + std::to_string(cod.rank()) + " of " +
                                  std::to_string(m) + ") with alpha = 0; use alpha > 0");
    z = cod.solve(ones);
    if (!usable(z))
      throw DegenerateMatrixError("solve_weights: degenerate matrix, no usable solution; use alpha > 0");
    out.used_fallback = true;
  }
  const double s = z.sum();
  out.weights = z / s;
  out.multiplier = 1.0 / s;
  return out;
}

bool verify_optimality(const Eigen::MatrixXd &M, double alpha, const Eigen::VectorXd &w, int trials, double step,
                       std::uint64_t seed) {
  const Eigen::Index m = w.size();
  if (m <= 1)
    return true;
  Eigen::MatrixXd A = M;
  A.diagonal().array() += alpha;
  auto f = [&](const Eigen::VectorXd &v) { return v.dot(A * v); };
  const double f0 = f(w);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd d(m);
  for (int trial = 0; trial < trials; ++trial) {
    for (Eigen::Index i = 0; i < m; ++i)
      d[i] = normal(rng);
    d.array() -= d.mean();
    const double norm = d.norm();
    if (norm == 0.0)
      continue;
    d /= norm;
    if (f(w + step * d) < f0 - 1e-12)
      return false;
  }
  return true;
}

} // namespace longfuse
