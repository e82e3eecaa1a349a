#include "carto/kernels.hpp"

#include <algorithm>
#include <vector>

#include <omp.h>

namespace carto::kernels {

namespace {

std::size_t chunk_count(std::size_t n) {
  return (n + kReduceChunk - 1) / kReduceChunk;
}

double chunk_dot(const double* a, const double* b, std::size_t begin,
                 std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

int max_threads() noexcept { return omp_get_max_threads(); }

void pattern_matvec(const CsrPattern& a, std::span<const double> x,
                    std::span<double> y, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(a.n_rows);
  const auto* ptr = a.row_ptr.data();
  const auto* col = a.col.data();
  const auto* xs = x.data();
  auto* ys = y.data();
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (auto k = ptr[r]; k < ptr[r + 1]; ++k) s += xs[col[k]];
      ys[r] = s;
    }
    return;
  }
#pragma omp parallel for schedule(static, 1024)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (auto k = ptr[r]; k < ptr[r + 1]; ++k) s += xs[col[k]];
    ys[r] = s;
  }
}

double dot(std::span<const double> a, std::span<const double> b, Exec exec) {
  const std::size_t n = a.size();
  const std::size_t chunks = chunk_count(n);
  std::vector<double> partial(chunks, 0.0);
  const auto nc = static_cast<std::ptrdiff_t>(chunks);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
      const auto begin = static_cast<std::size_t>(c) * kReduceChunk;
      partial[c] = chunk_dot(a.data(), b.data(), begin,
                             std::min(n, begin + kReduceChunk));
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
      const auto begin = static_cast<std::size_t>(c) * kReduceChunk;
      partial[c] = chunk_dot(a.data(), b.data(), begin,
                             std::min(n, begin + kReduceChunk));
    }
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void project_out(const Eigen::MatrixXd& basis, Eigen::Index k,
                 std::span<double> v, std::span<double> coeffs, Exec exec) {
  const std::size_t n = v.size();
  const std::size_t chunks = chunk_count(n);
  const auto kk = static_cast<std::size_t>(k);
  std::fill(coeffs.begin(), coeffs.begin() + kk, 0.0);
  if (kk == 0) return;

  std::vector<double> partial(chunks * kk, 0.0);
  auto chunk_body = [&](std::size_t c) {
    const std::size_t begin = c * kReduceChunk;
    const std::size_t end = std::min(n, begin + kReduceChunk);
    for (std::size_t j = 0; j < kk; ++j) {
      partial[c * kk + j] = chunk_dot(basis.col(static_cast<Eigen::Index>(j)).data(),
                                      v.data(), begin, end);
    }
  };
  const auto nc = static_cast<std::ptrdiff_t>(chunks);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < nc; ++c) chunk_body(static_cast<std::size_t>(c));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) chunk_body(static_cast<std::size_t>(c));
  }
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < kk; ++j) coeffs[j] += partial[c * kk + j];
  }

  const auto nn = static_cast<std::ptrdiff_t>(n);
  const double* b = basis.data();
  const auto ld = static_cast<std::size_t>(basis.rows());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < kk; ++j) s += b[j * ld + i] * coeffs[j];
      v[i] -= s;
    }
  } else {
#pragma omp parallel for schedule(static, 4096)
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < kk; ++j) s += b[j * ld + i] * coeffs[j];
      v[i] -= s;
    }
  }
}

void combine_columns(const Eigen::MatrixXd& basis, Eigen::Index k,
                     std::span<const double> weights, std::span<double> out,
                     Exec exec) {
  const auto nn = static_cast<std::ptrdiff_t>(out.size());
  const auto kk = static_cast<std::size_t>(k);
  const double* b = basis.data();
  const auto ld = static_cast<std::size_t>(basis.rows());
  auto body = [&](std::ptrdiff_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kk; ++j) s += b[j * ld + i] * weights[j];
    out[i] = s;
  };
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < nn; ++i) body(i);
  } else {
#pragma omp parallel for schedule(static, 4096)
    for (std::ptrdiff_t i = 0; i < nn; ++i) body(i);
  }
}

void accumulate_separable(const SeparableWeights& w, std::span<double> grid,
                          Exec exec) {
  const std::size_t n_points = w.x_lo.size();
  // Each band of grid rows is owned by one worker, which visits the points
  // in order; every cell therefore sums its contributions in point order.
  auto band = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t p = 0; p < n_points; ++p) {
      const std::size_t y0 = std::max(w.y_lo[p], row_begin);
      const std::size_t y1 = std::min(w.y_lo[p] + w.y_len[p], row_end);
      if (y0 >= y1) continue;
      const double* wx = w.wx.data() + w.wx_off[p];
      const double* wy = w.wy.data() + w.wy_off[p];
      const std::size_t x0 = w.x_lo[p];
      const std::size_t xl = w.x_len[p];
      for (std::size_t iy = y0; iy < y1; ++iy) {
        const double fy = wy[iy - w.y_lo[p]];
        double* row = grid.data() + iy * w.nx + x0;
        for (std::size_t k = 0; k < xl; ++k) row[k] += wx[k] * fy;
      }
    }
  };
  if (exec == Exec::Serial) {
    band(0, w.ny);
    return;
  }
#pragma omp parallel
  {
    const auto nb = static_cast<std::size_t>(omp_get_num_threads());
    const auto b = static_cast<std::size_t>(omp_get_thread_num());
    band(b * w.ny / nb, (b + 1) * w.ny / nb);
  }
}

}  // namespace carto::kernels
