// Serial reference vs OpenMP kernels on pipeline-sized inputs.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "carto/density.hpp"
#include "carto/kernels.hpp"
#include "carto/sparse.hpp"
#include "carto/synth.hpp"

using namespace carto;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

// 100k users x 400 items with about 30 follows per user.
const CsrPattern& follow_pattern() {
  static const CsrPattern pattern = [] {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint32_t> item(0, 399);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t u = 0; u < 100000; ++u) {
      for (int k = 0; k < 30; ++k) pairs.emplace_back(u, item(rng));
    }
    return CsrPattern::from_pairs(100000, 400, std::move(pairs));
  }();
  return pattern;
}

void BM_PatternMatvec(benchmark::State& state) {
  const auto& a = follow_pattern();
  std::vector<double> x(a.n_cols, 1.0), y(a.n_rows);
  for (auto _ : state) {
    kernels::pattern_matvec(a, x, y, exec_of(state));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(a.nnz()));
}

void BM_Dot(benchmark::State& state) {
  std::vector<double> a(1 << 20), b(1 << 20);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = z(rng);
    b[i] = z(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dot(a, b, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(a.size()));
}

void BM_ProjectOut(benchmark::State& state) {
  const Eigen::Index rows = 100000, k = 20;
  const Eigen::MatrixXd basis = Eigen::MatrixXd::Random(rows, k);
  std::vector<double> v(static_cast<std::size_t>(rows), 1.0), coeffs(static_cast<std::size_t>(k));
  for (auto _ : state) {
    kernels::project_out(basis, k, v, coeffs, exec_of(state));
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_Density2d(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<Eigen::Vector2d> pts(100000);
  for (auto& p : pts) p = {z(rng), 0.7 * z(rng)};
  DensityOptions o;
  o.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(density2d(pts, o).values.data());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size()));
}

void BM_Generate(benchmark::State& state) {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.n_users = 20000;
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(generate(cfg).graph.n_edges());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cfg.n_users * cfg.n_items));
}

}  // namespace

// Argument 0 runs the serial reference, 1 the OpenMP variant.
BENCHMARK(BM_PatternMatvec)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dot)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ProjectOut)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Density2d)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
