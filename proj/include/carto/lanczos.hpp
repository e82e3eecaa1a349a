#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "carto/kernels.hpp"

namespace carto {

/// Matrix-free operator for the truncated SVD.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  /// y = A x
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  /// y = A^T x
  virtual void apply_transpose(std::span<const double> x,
                               std::span<double> y) const = 0;
};

struct SvdOptions {
  Eigen::Index rank = 3;
  /// Krylov subspace size; 0 picks min(min(m, n), max(2 rank + 10, 20)).
  Eigen::Index subspace = 0;
  double tol = 1e-10;
  int max_restarts = 500;
  std::uint64_t seed = 42;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct TruncatedSvd {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd left;    // rows x rank
  Eigen::MatrixXd right;   // cols x rank
  int restarts = 0;
  long matvecs = 0;
  /// max_i sqrt(|A v_i - s_i u_i|^2 + |A^T u_i - s_i v_i|^2) / s_1
  double relative_residual = 0.0;
};

/// Leading singular triplets by thick-restart Golub-Kahan-Lanczos
/// bidiagonalisation with full reorthogonalisation. The start vector is
/// drawn from a generator seeded with `seed`, so results are reproducible.
/// Each pair (u_i, v_i) is signed so that the largest-magnitude entry of v_i
/// is positive.
///
/// Throws Error(Convergence) with the residual when `max_restarts` is
/// exhausted.
TruncatedSvd truncated_svd(const LinearOperator& op, const SvdOptions& options);

}  // namespace carto
