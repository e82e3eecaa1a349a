#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "carto/ca.hpp"
#include "carto/error.hpp"
#include "carto/stats.hpp"
#include "carto/synth.hpp"
#include "carto/world.hpp"
#include "support.hpp"

using namespace carto;
using carto::testing::TempDir;

namespace {

// Orthogonal Procrustes with scaling in the plane, solved by the closed-form
// optimal angle for the proper and the reflected case; returns
// 1 - residual / |Y|^2 from the explicitly transformed configuration.
double procrustes_oracle(const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& y_in) {
  const Eigen::MatrixXd x = x_in.rowwise() - x_in.colwise().mean();
  const Eigen::MatrixXd y = y_in.rowwise() - y_in.colwise().mean();
  double best = INFINITY;
  for (double reflect : {1.0, -1.0}) {
    Eigen::MatrixXd xr = x;
    xr.col(1) *= reflect;
    double a = 0.0, b = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      a += xr(i, 0) * y(i, 0) + xr(i, 1) * y(i, 1);
      b += xr(i, 0) * y(i, 1) - xr(i, 1) * y(i, 0);
    }
    const double t = std::atan2(b, a);
    Eigen::Matrix2d rot;
    rot << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    const Eigen::MatrixXd xt = xr * rot;
    const double s = (xt.array() * y.array()).sum() / xt.squaredNorm();
    best = std::min(best, (y - s * xt).squaredNorm());
  }
  return 1.0 - best / y.squaredNorm();
}

Eigen::MatrixXd random_cloud(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, 2);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = 2.0 * z(rng) + 1.0;
    m(i, 1) = z(rng) - 3.0;
  }
  return m;
}

}  // namespace

TEST_CASE("follow probability at zero distance and alpha 6") {
  const double p = follow_probability(6.0, 0.0);
  CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-6.0))).epsilon(1e-15));
  CHECK(p == doctest::Approx(0.9975).epsilon(1e-4));
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(p);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += coin(rng);
  CHECK(hits >= 9900);
  CHECK(follow_probability(0.0, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));
  CHECK(follow_probability(0.0, 2.0, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
}

TEST_CASE("configuration validation") {
  auto cfg = SyntheticConfig::two_cluster();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.user_mixture[0].weight = 0.9;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.item_mixture[0].cov << 1, 0, 0, -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.n_users = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fixed seed gives identical output and different seeds differ") {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.n_users = 2000;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(a.graph.adjacency().col == b.graph.adjacency().col);
  CHECK(a.item_positions == b.item_positions);
  CHECK(a.alpha == b.alpha);
  cfg.seed = 43;
  const auto c = generate(cfg);
  CHECK(a.graph.adjacency().col != c.graph.adjacency().col);
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 2, 4));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 3));
}

TEST_CASE("generated metadata records degree as follower count") {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.n_users = 3000;
  const auto d = generate(cfg);
  const auto deg = d.graph.adjacency().column_degrees();
  for (std::size_t j = 0; j < d.graph.n_items(); ++j) {
    CHECK(d.meta.at(d.graph.items()[j]).follower_count == deg[j]);
    CHECK(d.meta.at(d.graph.items()[j]).party ==
          cfg.item_mixture[d.item_component[j]].label);
  }
}

TEST_CASE("sparse configurations warn") {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.n_users = 500;
  cfg.alpha_mean = -12.0;
  cfg.casual_fraction = 0.0;
  const auto d = generate(cfg);
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("null model: without popularity no dimension is flagged") {
  auto cfg = SyntheticConfig::two_cluster();
  cfg.popularity_scale = 0.0;
  const auto d = generate(cfg);
  const auto g = filter_min_degree(d.graph, 3);
  auto ca = correspondence_analysis(g, 3);
  canonicalize_signs(ca, d.meta);
  const auto rep = popularity_screen(ca, d.meta, 0.5);
  for (const auto& dim : rep.dims) {
    CAPTURE(dim.index);
    CAPTURE(dim.spearman_vs_degree);
    CHECK_FALSE(dim.popularity_flagged);
  }
}

TEST_CASE("well-separated clusters: dimension 1 tracks the planted axis") {
  SyntheticConfig cfg;
  cfg.n_users = 6000;
  cfg.n_items = 60;
  cfg.casual_fraction = 0.0;
  cfg.popularity_scale = 0.3;
  cfg.alpha_mean = 1.0;
  const Eigen::Matrix2d user_cov = 0.25 * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d item_cov = 0.09 * Eigen::Matrix2d::Identity();
  cfg.user_mixture = {{"left", {-1.5, 0}, user_cov, 0.5}, {"right", {1.5, 0}, user_cov, 0.5}};
  cfg.item_mixture = {{"left", {-1.5, 0}, item_cov, 0.5}, {"right", {1.5, 0}, item_cov, 0.5}};
  const auto d = generate(cfg);
  const auto g = filter_min_degree(d.graph, 3);
  const auto ca = correspondence_analysis(g, 2);
  std::vector<double> planted, recovered, label, user_dim;
  for (std::size_t j = 0; j < ca.item_ids.size(); ++j) {
    const auto idx = *d.graph.item_index(ca.item_ids[j]);
    planted.push_back(d.item_positions(static_cast<Eigen::Index>(idx), 0));
    recovered.push_back(ca.item_coords(static_cast<Eigen::Index>(j), 0));
  }
  for (std::size_t i = 0; i < ca.user_ids.size(); ++i) {
    const auto idx = *d.graph.user_index(ca.user_ids[i]);
    label.push_back(static_cast<double>(d.user_component[idx]));
    user_dim.push_back(ca.user_coords(static_cast<Eigen::Index>(i), 0));
  }
  CHECK(std::abs(stats::pearson(planted, recovered)) > 0.9);
  CHECK(std::abs(stats::pearson(label, user_dim)) > 0.9);
}

TEST_CASE("procrustes: identity, isometries and scaling give similarity 1") {
  std::mt19937_64 rng(2);
  const auto y = random_cloud(rng, 50);
  CHECK(procrustes_align(y, y).similarity == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::Matrix2d rot90;
  rot90 << 0, 1, -1, 0;
  Eigen::MatrixXd x = y * rot90;
  x.col(1) *= -1.0;
  CHECK(procrustes_align(x, y).similarity == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXd moved = (3.5 * x).rowwise() + Eigen::RowVector2d(4, -7);
  const auto r = procrustes_align(moved, y);
  CHECK(r.similarity == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXd mapped = (r.scale * moved * r.rotation).rowwise() + r.translation;
  CHECK((mapped - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("procrustes: noisy recovery matches the direct residual oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto y = random_cloud(rng, 80);
    Eigen::MatrixXd x = y;
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += noise(rng);
    const double s = procrustes_align(x, y).similarity;
    CHECK(std::abs(s - procrustes_oracle(x, y)) < 1e-9);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("procrustes: similarity is invariant to isometry and scaling of either side") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const auto y = random_cloud(rng, 40);
  Eigen::MatrixXd x = y;
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += 0.5 * z(rng);
  const double base = procrustes_align(x, y).similarity;
  for (double deg : {17.0, 133.0}) {
    const double t = deg * M_PI / 180.0;
    Eigen::Matrix2d q;
    q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    Eigen::MatrixXd xt = (0.3 * x * q).rowwise() + Eigen::RowVector2d(1, 2);
    Eigen::MatrixXd yt = (5.0 * y * q.transpose()).rowwise() + Eigen::RowVector2d(-3, 0);
    yt.col(0) *= -1.0;
    CHECK(procrustes_align(xt, y).similarity == doctest::Approx(base).epsilon(1e-12));
    CHECK(procrustes_align(x, yt).similarity == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("procrustes: rank-deficient planted data is rejected") {
  Eigen::MatrixXd line(5, 2);
  line << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4;
  std::mt19937_64 rng(5);
  const auto x = random_cloud(rng, 5);
  try {
    procrustes_align(x, line);
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
  CHECK_THROWS_AS(procrustes_align(x.topRows(2), line.topRows(2)), Error);
}

TEST_CASE("synthetic world files are consistent") {
  TempDir dir("world");
  WorldConfig w;
  w.network = SyntheticConfig::six_party(3000, 60);
  w.n_events = 3000;
  const auto s = write_world(w, dir.path());
  for (const char* f : {"edges.tsv", "meta.csv", "party_scores.csv", "outlets.csv", "shares.jsonl",
                        "redirects.csv", "blocklist.csv", "doc_topics.csv", "metatopics.csv",
                        "story_docs.csv", "share_truth.csv", "world.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::size_t total = 0;
  for (const auto& [cat, n] : s.category_counts) total += n;
  CHECK(total == s.n_events);
  const auto loaded = load_graph(dir / "edges.tsv", dir / "meta.csv");
  CHECK(loaded.graph.n_edges() == s.n_edges);
  const auto scores = load_party_scores(dir / "party_scores.csv", world_issues().front());
  for (const auto& issue : world_issues()) CHECK(scores.has_issue(issue));

  TempDir again("world");
  write_world(w, again.path());
  for (const char* f : {"edges.tsv", "shares.jsonl", "doc_topics.csv", "share_truth.csv"}) {
    CHECK(io::read_text(dir / f) == io::read_text(again / f));
  }
}
