#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "carto/sparse.hpp"

/// Data-parallel inner loops. Each kernel has a serial reference and an
/// OpenMP variant selected by `Exec`; both produce bit-identical results
/// because every reduction runs over fixed-size chunks combined in index
/// order, independent of the thread count.
namespace carto::kernels {

enum class Exec { Serial, Parallel };

/// Chunk length of the deterministic reductions.
inline constexpr std::size_t kReduceChunk = 4096;

/// y_r = sum of x_c over the nonzeros of row r.
void pattern_matvec(const CsrPattern& a, std::span<const double> x,
                    std::span<double> y, Exec exec);

double dot(std::span<const double> a, std::span<const double> b, Exec exec);

/// coeffs = basis(:, 0..k)^T v, then v -= basis(:, 0..k) coeffs.
/// `basis` is column-major with v.size() rows.
void project_out(const Eigen::MatrixXd& basis, Eigen::Index k,
                 std::span<double> v, std::span<double> coeffs, Exec exec);

/// out = basis(:, 0..k) * weights.
void combine_columns(const Eigen::MatrixXd& basis, Eigen::Index k,
                     std::span<const double> weights, std::span<double> out,
                     Exec exec);

/// Accumulates separable per-point cell weights into a row-major grid
/// (index iy * nx + ix). Point p contributes wx[p][ix] * wy[p][iy] on the
/// cell window [x_lo[p], x_lo[p] + x_len[p]) x [y_lo[p], y_lo[p] + y_len[p]).
/// Weights for point p start at offsets wx_off[p] / wy_off[p].
struct SeparableWeights {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::span<const std::size_t> x_lo, x_len, wx_off;
  std::span<const std::size_t> y_lo, y_len, wy_off;
  std::span<const double> wx, wy;
};
void accumulate_separable(const SeparableWeights& w, std::span<double> grid,
                          Exec exec);

int max_threads() noexcept;

}  // namespace carto::kernels
