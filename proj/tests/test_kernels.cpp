#include <doctest.h>

#include <omp.h>

#include <random>
#include <vector>

#include "carto/density.hpp"
#include "carto/kernels.hpp"
#include "carto/stats.hpp"
#include "carto/synth.hpp"
#include "support.hpp"

using namespace carto;
using kernels::Exec;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

CsrPattern random_csr(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double density) {
  std::bernoulli_distribution coin(density);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (coin(rng)) pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  return CsrPattern::from_pairs(rows, cols, std::move(pairs));
}

// Runs `f` under several thread counts and returns each result.
template <typename F>
auto under_thread_counts(F f) {
  std::vector<decltype(f())> out;
  const int saved = omp_get_max_threads();
  for (int t : {1, 2, 3, 8}) {
    omp_set_num_threads(t);
    out.push_back(f());
  }
  omp_set_num_threads(saved);
  return out;
}

}  // namespace

TEST_CASE("pattern mat-vec: serial equals parallel bitwise and matches the naive sum") {
  std::mt19937_64 rng(1);
  const auto a = random_csr(rng, 3000, 70, 0.1);
  const auto x = random_vector(rng, 70);
  std::vector<double> ys(3000), yp(3000);
  kernels::pattern_matvec(a, x, ys, Exec::Serial);
  const auto runs = under_thread_counts([&] {
    kernels::pattern_matvec(a, x, yp, Exec::Parallel);
    return yp;
  });
  for (const auto& r : runs) CHECK(r == ys);
  for (std::size_t i = 0; i < 3000; ++i) {
    double s = 0.0;
    for (auto c : a.row(i)) s += x[c];
    CHECK(std::abs(s - ys[i]) < 1e-12);
  }
}

TEST_CASE("dot: identical across execution modes and thread counts") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 100u, 4096u, 4097u, 50000u}) {
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    const double serial = kernels::dot(a, b, Exec::Serial);
    for (double v : under_thread_counts([&] { return kernels::dot(a, b, Exec::Parallel); })) {
      CHECK(v == serial);
    }
    long double ref = 0.0L;
    for (std::size_t i = 0; i < n; ++i) ref += static_cast<long double>(a[i]) * b[i];
    CHECK(std::abs(serial - static_cast<double>(ref)) < 1e-10 * std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("project_out and combine_columns match Eigen and agree across modes") {
  std::mt19937_64 rng(3);
  const std::size_t n = 9000;
  const Eigen::Index k = 6;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), 10);
  const auto v0 = random_vector(rng, n);

  std::vector<double> vs = v0, vp = v0, cs(k), cp(k);
  kernels::project_out(basis, k, vs, cs, Exec::Serial);
  kernels::project_out(basis, k, vp, cp, Exec::Parallel);
  CHECK(vs == vp);
  CHECK(cs == cp);
  const Eigen::Map<const Eigen::VectorXd> v0m(v0.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd coeffs = basis.leftCols(k).transpose() * v0m;
  const Eigen::VectorXd expected = v0m - basis.leftCols(k) * coeffs;
  for (Eigen::Index j = 0; j < k; ++j) CHECK(std::abs(cs[j] - coeffs(j)) < 1e-9);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(vs[i] - expected(static_cast<Eigen::Index>(i))) < 1e-9);
  }

  const auto w = random_vector(rng, k);
  std::vector<double> os(n), op(n);
  kernels::combine_columns(basis, k, w, os, Exec::Serial);
  kernels::combine_columns(basis, k, w, op, Exec::Parallel);
  CHECK(os == op);
  const Eigen::VectorXd comb =
      basis.leftCols(k) * Eigen::Map<const Eigen::VectorXd>(w.data(), k);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(os[i] - comb(static_cast<Eigen::Index>(i))) < 1e-12);
  }
}

TEST_CASE("separable accumulation matches a naive per-point loop") {
  std::mt19937_64 rng(4);
  const std::size_t nx = 37, ny = 23, np = 500;
  std::uniform_int_distribution<std::size_t> lx(0, nx - 1), ly(0, ny - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> x_lo(np), x_len(np), wx_off(np), y_lo(np), y_len(np), wy_off(np);
  std::vector<double> wx, wy;
  for (std::size_t p = 0; p < np; ++p) {
    x_lo[p] = lx(rng);
    x_len[p] = 1 + lx(rng) % (nx - x_lo[p]);
    y_lo[p] = ly(rng);
    y_len[p] = 1 + ly(rng) % (ny - y_lo[p]);
    wx_off[p] = wx.size();
    wy_off[p] = wy.size();
    for (std::size_t k = 0; k < x_len[p]; ++k) wx.push_back(u(rng));
    for (std::size_t k = 0; k < y_len[p]; ++k) wy.push_back(u(rng));
  }
  kernels::SeparableWeights w;
  w.nx = nx;
  w.ny = ny;
  w.x_lo = x_lo;
  w.x_len = x_len;
  w.wx_off = wx_off;
  w.y_lo = y_lo;
  w.y_len = y_len;
  w.wy_off = wy_off;
  w.wx = wx;
  w.wy = wy;
  std::vector<double> gs(nx * ny, 0.0), gp(nx * ny, 0.0), naive(nx * ny, 0.0);
  kernels::accumulate_separable(w, gs, Exec::Serial);
  kernels::accumulate_separable(w, gp, Exec::Parallel);
  CHECK(gs == gp);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t a = 0; a < y_len[p]; ++a) {
      for (std::size_t b = 0; b < x_len[p]; ++b) {
        naive[(y_lo[p] + a) * nx + x_lo[p] + b] += wx[wx_off[p] + b] * wy[wy_off[p] + a];
      }
    }
  }
  for (std::size_t c = 0; c < nx * ny; ++c) CHECK(gs[c] == doctest::Approx(naive[c]).epsilon(1e-12));
}

TEST_CASE("density grids are identical across execution modes and thread counts") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<Eigen::Vector2d> pts(20000);
  for (auto& p : pts) p = {z(rng), 0.5 * z(rng) + (z(rng) > 0 ? 1.0 : -1.0)};
  DensityOptions o;
  o.nx = 120;
  o.ny = 90;
  o.exec = Exec::Serial;
  const auto serial = density2d(pts, o);
  o.exec = Exec::Parallel;
  for (const auto& g : under_thread_counts([&] { return density2d(pts, o); })) {
    CHECK(g.values == serial.values);
    CHECK(g.marginal_x == serial.marginal_x);
  }
}

TEST_CASE("synthetic generation is identical across execution modes and thread counts") {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.n_users = 3000;
  cfg.exec = Exec::Serial;
  const auto serial = generate(cfg);
  cfg.exec = Exec::Parallel;
  for (const auto& d : under_thread_counts([&] { return generate(cfg); })) {
    CHECK(d.graph.adjacency().col == serial.graph.adjacency().col);
    CHECK(d.graph.adjacency().row_ptr == serial.graph.adjacency().row_ptr);
    CHECK(d.user_positions == serial.user_positions);
    CHECK(d.alpha == serial.alpha);
  }
}

TEST_CASE("rank statistics") {
  const std::vector<double> x{3.0, 1.0, 4.0, 1.0, 5.0};
  CHECK(stats::average_ranks(x) == std::vector<double>{3.0, 1.5, 4.0, 1.5, 5.0});
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 11}, c{5, 4, 3, 2, 1};
  CHECK(stats::spearman(a, b) == doctest::Approx(1.0));
  CHECK(stats::spearman(a, c) == doctest::Approx(-1.0));
  CHECK(stats::pearson(a, c) == doctest::Approx(-1.0));
  CHECK(std::isnan(stats::pearson(a, std::vector<double>(5, 2.0))));
  CHECK(stats::sample_variance(std::vector<double>{1.0}) == 0.0);
  CHECK(stats::sample_variance(a) == doctest::Approx(2.5));
}
