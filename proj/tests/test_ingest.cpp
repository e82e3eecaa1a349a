#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "carto/error.hpp"
#include "carto/ingest.hpp"
#include "support.hpp"

using namespace carto;
using carto::testing::TempDir;
using carto::testing::write_file;

namespace {

const char* kMeta =
    "item_id,party,follower_count\n"
    "a,P1,10\n"
    "b,P1,20\n"
    "c,P2,30\n";

BipartiteFollowGraph graph_with_degrees(const std::vector<std::size_t>& degrees,
                                        std::size_t n_items) {
  std::vector<std::string> users, items;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::size_t j = 0; j < n_items; ++j) items.push_back(fmt::format("i{}", j));
  for (std::size_t u = 0; u < degrees.size(); ++u) {
    users.push_back(fmt::format("u{}", u));
    for (std::size_t k = 0; k < degrees[u]; ++k) {
      pairs.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(k));
    }
  }
  return {users, items, CsrPattern::from_pairs(users.size(), items.size(), std::move(pairs))};
}

}  // namespace

TEST_CASE("duplicate edge lines collapse") {
  TempDir dir("ingest");
  write_file(dir / "meta.csv", kMeta);
  write_file(dir / "edges.tsv", "x\ta\nx\tb\nx\ta\n");
  const auto g = load_graph(dir / "edges.tsv", dir / "meta.csv");
  CHECK(g.graph.n_edges() == 2);
  CHECK(g.report.duplicate_edges == 1);
  CHECK(g.graph.n_users() == 1);
  CHECK(g.graph.n_items() == 3);
}

TEST_CASE("unknown item is a validation error naming it in strict mode") {
  TempDir dir("ingest");
  write_file(dir / "meta.csv", kMeta);
  write_file(dir / "edges.tsv", "x\ta\ny\tzz_missing\n");
  try {
    load_graph(dir / "edges.tsv", dir / "meta.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    CHECK(std::string(e.what()).find("zz_missing") != std::string::npos);
  }
  LoadOptions lenient;
  lenient.strict = false;
  const auto g = load_graph(dir / "edges.tsv", dir / "meta.csv", lenient);
  CHECK(g.graph.n_edges() == 1);
  CHECK(g.report.unknown_items == std::vector<std::string>{"zz_missing"});
}

TEST_CASE("malformed edge line reports its line number") {
  TempDir dir("ingest");
  write_file(dir / "meta.csv", kMeta);
  write_file(dir / "edges.tsv", "x\ta\nbroken line\n");
  try {
    load_graph(dir / "edges.tsv", dir / "meta.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("identifiers are opaque strings") {
  TempDir dir("ingest");
  write_file(dir / "meta.csv", "item_id,party,follower_count\n007,P,1\n7,P,1\n");
  write_file(dir / "edges.tsv", "0001\t007\n1\t7\n");
  const auto g = load_graph(dir / "edges.tsv", dir / "meta.csv");
  CHECK(g.graph.n_users() == 2);
  CHECK(g.graph.item_index("007") != g.graph.item_index("7"));
  CHECK(g.graph.user_index("0001").has_value());
  CHECK_FALSE(g.graph.user_index("01").has_value());
}

TEST_CASE("party score table checks the x issue and bounds") {
  TempDir dir("ingest");
  write_file(dir / "s.csv",
             "party,issue,score,scale_min,scale_max\nA,lrgen,3,0,10\nB,lrgen,7,0,10\n");
  const auto t = load_party_scores(dir / "s.csv", "lrgen");
  CHECK(t.scores("lrgen").at("B") == 7.0);
  CHECK_THROWS_AS(load_party_scores(dir / "s.csv", "galtan"), Error);
  write_file(dir / "bad.csv", "party,issue,score,scale_min,scale_max\nA,lrgen,11,0,10\n");
  CHECK_THROWS_AS(load_party_scores(dir / "bad.csv", "lrgen"), Error);
  write_file(dir / "dup.csv",
             "party,issue,score,scale_min,scale_max\nA,lrgen,1,0,10\nA,lrgen,2,0,10\n");
  CHECK_THROWS_AS(load_party_scores(dir / "dup.csv", "lrgen"), Error);
}

TEST_CASE("min-degree filter keeps users at or above the threshold") {
  const auto g = graph_with_degrees({1, 2, 3, 5}, 6);
  CHECK(filter_min_degree(g, 3).n_users() == 2);
  const auto same = filter_min_degree(g, 1);
  CHECK(same.users() == g.users());
  CHECK(same.n_edges() == g.n_edges());
  CHECK(same.n_items() == g.n_items());
}

TEST_CASE("min-degree filter matches a per-row count on a random graph") {
  std::mt19937_64 rng(7);
  const auto a = testing::random_pattern(rng, 1000, 50, 0.06);
  const auto g = testing::graph_from_dense(a);
  for (std::size_t k : {1u, 2u, 3u, 5u}) {
    const auto f = filter_min_degree(g, k);
    std::vector<std::string> expected;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a.row(i).sum() >= static_cast<double>(k)) expected.push_back(fmt::format("u{}", i));
    }
    CHECK(f.users() == expected);
    CHECK(f.n_items() == 50);
    for (std::size_t u = 0; u < f.n_users(); ++u) CHECK(f.degree(u) >= k);
    // idempotent
    const auto ff = filter_min_degree(f, k);
    CHECK(ff.users() == f.users());
    CHECK(ff.n_edges() == f.n_edges());
  }
}

TEST_CASE("edge count equals distinct pairs and index maps are bijections") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> u(0, 199), it(0, 29);
  TempDir dir("ingest");
  std::string meta = "item_id,party,follower_count\n";
  for (int j = 0; j < 30; ++j) meta += fmt::format("m{},P{},1\n", j, j % 3);
  std::string edges;
  std::set<std::pair<int, int>> distinct;
  for (int e = 0; e < 3000; ++e) {
    const int a = u(rng), b = it(rng);
    distinct.emplace(a, b);
    edges += fmt::format("user{}\tm{}\n", a, b);
  }
  write_file(dir / "meta.csv", meta);
  write_file(dir / "edges.tsv", edges);
  const auto g = load_graph(dir / "edges.tsv", dir / "meta.csv");
  CHECK(g.graph.n_edges() == distinct.size());
  for (std::size_t i = 0; i < g.graph.n_users(); ++i) {
    CHECK(g.graph.user_index(g.graph.users()[i]) == i);
  }
  for (std::size_t j = 0; j < g.graph.n_items(); ++j) {
    CHECK(g.graph.item_index(g.graph.items()[j]) == j);
  }

  write_index_maps(g.graph, dir.path());
  io::CsvReader reader(dir / "users_index.csv");
  std::vector<std::string> f;
  std::set<std::string> ids;
  std::set<std::string> rows;
  bool header = true;
  while (reader.next(f)) {
    if (header) {
      header = false;
      continue;
    }
    REQUIRE(f.size() == 2);
    ids.insert(f[0]);
    rows.insert(f[1]);
  }
  CHECK(ids.size() == g.graph.n_users());
  CHECK(rows.size() == g.graph.n_users());
}
