#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "carto/ca.hpp"
#include "carto/error.hpp"
#include "carto/stats.hpp"
#include "support.hpp"

using namespace carto;
using carto::testing::dense_ca;
using carto::testing::graph_from_dense;
using carto::testing::max_signed_diff;

namespace {

CaOptions serial_options() {
  CaOptions o;
  o.exec = kernels::Exec::Serial;
  return o;
}

PoliticianMeta meta_for(const std::vector<std::string>& items,
                        const std::vector<std::string>& parties,
                        const std::vector<std::uint64_t>& followers) {
  std::vector<PoliticianRecord> recs;
  for (std::size_t j = 0; j < items.size(); ++j) recs.push_back({items[j], parties[j], followers[j]});
  return PoliticianMeta(std::move(recs));
}

CorrespondenceDecomposition decomposition_from_items(const Eigen::MatrixXd& item_coords) {
  CorrespondenceDecomposition d;
  for (Eigen::Index j = 0; j < item_coords.rows(); ++j) d.item_ids.push_back(fmt::format("i{}", j));
  d.item_coords = item_coords;
  d.singular_values = Eigen::VectorXd::Ones(item_coords.cols());
  return d;
}

}  // namespace

TEST_CASE("two disjoint blocks separate by sign on dimension 1 and match the dense oracle") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 4);
  a.block(0, 0, 3, 2).setOnes();
  a.block(3, 2, 3, 2).setOnes();
  const auto ca = correspondence_analysis(graph_from_dense(a), 1, serial_options());
  const auto oracle = dense_ca(a);
  CHECK(ca.singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(ca.user_coords(i, 0) * ca.user_coords(i + 3, 0) < 0.0);
  }
  CHECK(ca.item_coords(0, 0) * ca.item_coords(2, 0) < 0.0);
  CHECK(max_signed_diff(ca.user_coords, oracle.f, 1) < 1e-9);
  CHECK(max_signed_diff(ca.item_coords, oracle.g, 1) < 1e-9);
}

TEST_CASE("independence model raises DegenerateInput") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
  try {
    correspondence_analysis(graph_from_dense(ones), 1, serial_options());
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("random matrices match the dense oracle and satisfy the decomposition invariants") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> rows(8, 40), cols(5, 12);
  int checked = 0;
  while (checked < 30) {
    const Eigen::MatrixXd a = testing::random_pattern(rng, rows(rng), cols(rng), 0.35);
    const auto oracle = dense_ca(a);
    const Eigen::Index k = 3;
    if (testing::min_relative_gap(oracle.d, k) < 1e-4) continue;  // ill-posed instance
    ++checked;
    for (auto exec : {kernels::Exec::Serial, kernels::Exec::Parallel}) {
      CaOptions opt;
      opt.exec = exec;
      const auto ca = correspondence_analysis(graph_from_dense(a), k, opt);
      CHECK((ca.singular_values - oracle.d.head(k)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(max_signed_diff(ca.user_coords, oracle.f, k) < 1e-9);
      CHECK(max_signed_diff(ca.item_coords, oracle.g, k) < 1e-9);
      CHECK(std::abs(ca.row_masses.sum() - 1.0) < 1e-12);
      CHECK(std::abs(ca.col_masses.sum() - 1.0) < 1e-12);
      CHECK(std::abs(ca.total_inertia - oracle.s.squaredNorm()) < 1e-12);
      for (Eigen::Index j = 0; j < k; ++j) {
        CHECK(ca.singular_values(j) >= 0.0);
        CHECK(ca.variance_share(j) >= 0.0);
        CHECK(ca.variance_share(j) <= 1.0);
        if (j > 0) {
          CHECK(ca.singular_values(j) <= ca.singular_values(j - 1));
          CHECK(ca.variance_share(j) <= ca.variance_share(j - 1));
        }
      }
      CHECK(ca.variance_share.sum() <= 1.0 + 1e-12);
      // Standard coordinates have unit mass-weighted variance.
      for (Eigen::Index j = 0; j < k; ++j) {
        const double w = (ca.col_masses.array() * ca.item_coords.col(j).array().square()).sum();
        CHECK(w == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("scaling the counts leaves the decomposition unchanged") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = testing::random_pattern(rng, 30, 9, 0.4);
  const auto base = dense_ca(a);
  const auto scaled = dense_ca(7.5 * a);
  CHECK((base.s - scaled.s).cwiseAbs().maxCoeff() < 1e-12);
  const auto ca = correspondence_analysis(graph_from_dense(a), 2, serial_options());
  CHECK(max_signed_diff(ca.item_coords, scaled.g, 2) < 1e-9);
}

TEST_CASE("a duplicated user row matches the re-run dense oracle") {
  std::mt19937_64 rng(9);
  int done = 0;
  while (done < 5) {
    Eigen::MatrixXd a = testing::random_pattern(rng, 25, 8, 0.4);
    Eigen::MatrixXd dup(a.rows() + 1, a.cols());
    dup << a, a.row(3);
    const auto oracle = dense_ca(dup);
    if (testing::min_relative_gap(oracle.d, 2) < 1e-4) continue;
    ++done;
    const auto ca = correspondence_analysis(graph_from_dense(dup), 2, serial_options());
    CHECK(max_signed_diff(ca.item_coords, oracle.g, 2) < 1e-9);
    CHECK(max_signed_diff(ca.user_coords, oracle.f, 2) < 1e-9);
    // the duplicate user lands on the original
    CHECK((ca.user_coords.row(3) - ca.user_coords.row(25)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("empty rows and columns are dropped before the decomposition") {
  Eigen::MatrixXd a(5, 4);
  a << 1, 0, 1, 0,
       0, 1, 1, 0,
       0, 0, 0, 0,
       1, 1, 0, 0,
       1, 0, 0, 0;
  const auto ca = correspondence_analysis(graph_from_dense(a), 1, serial_options());
  CHECK(ca.dropped_users == std::vector<std::string>{"u2"});
  CHECK(ca.dropped_items == std::vector<std::string>{"i3"});
  Eigen::MatrixXd kept(4, 3);
  kept << 1, 0, 1, 0, 1, 1, 1, 1, 0, 1, 0, 0;
  CHECK(max_signed_diff(ca.item_coords, dense_ca(kept).g, 1) < 1e-9);
}

TEST_CASE("sign canonicalization puts the first party's mean at or below zero") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = testing::random_pattern(rng, 40, 10, 0.3);
  auto ca = correspondence_analysis(graph_from_dense(a), 3, serial_options());
  std::vector<std::string> parties;
  for (int j = 0; j < 10; ++j) parties.push_back(j % 2 ? "B" : "A");
  const auto meta = meta_for(ca.item_ids, parties, std::vector<std::uint64_t>(10, 1));
  canonicalize_signs(ca, meta);
  for (Eigen::Index k = 0; k < 3; ++k) {
    double sum = 0.0;
    for (int j = 0; j < 10; j += 2) sum += ca.item_coords(j, k);
    CHECK(sum <= 0.0);
  }
}

TEST_CASE("popularity screen: permuted coordinates are not flagged") {
  std::mt19937_64 rng(17);
  const int n = 400;
  std::vector<std::string> ids, parties;
  std::vector<std::uint64_t> followers;
  Eigen::MatrixXd coords(n, 2);
  std::normal_distribution<double> z;
  for (int j = 0; j < n; ++j) {
    ids.push_back(fmt::format("i{}", j));
    parties.push_back("P");
    followers.push_back(static_cast<std::uint64_t>(j * 3 + 1));
    coords(j, 0) = std::log(1.0 + j) + 0.01 * z(rng);  // follows degree
    coords(j, 1) = z(rng);
  }
  const auto meta = meta_for(ids, parties, followers);
  auto d = decomposition_from_items(coords);
  auto rep = popularity_screen(d, meta, 0.5);
  CHECK(rep.dims[0].popularity_flagged);
  CHECK(std::abs(rep.dims[0].spearman_vs_degree) > 0.99);
  CHECK_FALSE(rep.dims[1].popularity_flagged);

  Eigen::VectorXd col = coords.col(0);
  std::shuffle(col.data(), col.data() + n, rng);
  coords.col(0) = col;
  rep = popularity_screen(decomposition_from_items(coords), meta, 0.5);
  CHECK(std::abs(rep.dims[0].spearman_vs_degree) < 0.15);
  CHECK_FALSE(rep.dims[0].popularity_flagged);
}

TEST_CASE("popularity screen: constant coordinates are unflagged with a warning") {
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(4, 1);
  const auto meta = meta_for({"i0", "i1", "i2", "i3"}, {"A", "A", "B", "B"}, {1, 2, 3, 4});
  const auto rep = popularity_screen(decomposition_from_items(coords), meta, 0.5);
  CHECK_FALSE(rep.dims[0].popularity_flagged);
  CHECK(rep.warnings.size() == 1);
}

TEST_CASE("party spread screen matches a two-pass variance") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z;
  const int n = 60;
  std::vector<std::string> ids, parties;
  Eigen::MatrixXd coords(n, 3);
  for (int j = 0; j < n; ++j) {
    ids.push_back(fmt::format("i{}", j));
    parties.push_back(fmt::format("P{}", j % 5));
    for (int k = 0; k < 3; ++k) coords(j, k) = z(rng) * (k == 1 ? 1.0 : 0.2);
  }
  parties[n - 1] = "solo";
  const auto meta = meta_for(ids, parties, std::vector<std::uint64_t>(n, 1));
  const auto d = decomposition_from_items(coords);
  auto rep = popularity_screen(d, meta, 0.5);
  party_spread_screen(rep, d, meta, 0.2);
  for (int k = 0; k < 3; ++k) {
    for (const auto& [party, var] : rep.dims[k].party_variance) {
      std::vector<double> v;
      for (int j = 0; j < n; ++j) {
        if (parties[j] == party) v.push_back(coords(j, k));
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double expected = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
      CHECK(std::abs(var - expected) < 1e-12);
    }
  }
  CHECK(rep.dims[0].party_variance.at("solo") == 0.0);
  CHECK(rep.dims[1].spread_flagged);
  CHECK_FALSE(rep.dims[0].spread_flagged);
  CHECK_FALSE(rep.dims[2].spread_flagged);
}

TEST_CASE("identical coordinates within a party give zero variance") {
  Eigen::MatrixXd coords(4, 1);
  coords << 0.3, 0.3, -1.0, 2.0;
  const auto meta = meta_for({"i0", "i1", "i2", "i3"}, {"A", "A", "B", "B"}, {1, 2, 3, 4});
  const auto d = decomposition_from_items(coords);
  auto rep = popularity_screen(d, meta);
  party_spread_screen(rep, d, meta);
  CHECK(rep.dims[0].party_variance.at("A") == 0.0);
}

TEST_CASE("dimension selection skips flagged dimensions") {
  auto report = [](std::vector<bool> flags) {
    DimensionScreenReport r;
    for (std::size_t k = 0; k < flags.size(); ++k) {
      DimensionScreen d;
      d.index = static_cast<Eigen::Index>(k);
      d.popularity_flagged = flags[k];
      r.dims.push_back(d);
    }
    return r;
  };
  CHECK(select_dimensions(report({false, true, false})) == std::pair<Eigen::Index, Eigen::Index>{0, 2});
  CHECK(select_dimensions(report({false, false, false})) == std::pair<Eigen::Index, Eigen::Index>{0, 1});
  CHECK(select_dimensions(report({true, true, false, false})) ==
        std::pair<Eigen::Index, Eigen::Index>{2, 3});
  try {
    select_dimensions(report({true, false, true}));
    FAIL("expected a selection error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Selection);
    CHECK(std::string(e.what()).find("n_dims") != std::string::npos);
  }
}
