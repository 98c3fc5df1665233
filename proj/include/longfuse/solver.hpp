#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "longfuse/volume.hpp"

namespace longfuse {

/// alpha = 0 with a rank-deficient matrix: the weight problem has no unique solution.
class DegenerateMatrixError : public Error {
public:
  using Error::Error;
};

struct WeightSolution {
  Eigen::VectorXd weights;
  double multiplier = 0.0; ///< lambda = 1 / (1' (M + alpha I)^-1 1)
  bool used_fallback = false;
};

/// Minimiser of w'(M + alpha I)w subject to sum(w) = 1:
/// w = A^-1 1 / (1' A^-1 1) with A = M + alpha I, via a pivoted LDL'
/// factorisation. Falls back to a complete orthogonal decomposition when the
/// factorisation is unusable. Weights may be negative.
WeightSolution solve_weights(const Eigen::MatrixXd &M, double alpha);

/// Brute-force optimality oracle: true iff no sampled feasible direction d
/// (sum(d) = 0, unit norm) lowers f(w) = w'(M + alpha I)w by more than 1e-12
/// at w + step * d.
bool verify_optimality(const Eigen::MatrixXd &M, double alpha, const Eigen::VectorXd &w, int trials, double step,
                       std::uint64_t seed = 0x5eed);

} // namespace longfuse
