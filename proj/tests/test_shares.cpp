#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "carto/error.hpp"
#include "carto/shares.hpp"
#include "carto/url.hpp"
#include "support.hpp"

using namespace carto;
using carto::testing::TempDir;
using carto::testing::write_file;

namespace {

const std::vector<Outlet> kOutlets{{"focus.de", "focus.de"},
                                   {"bild.de", "bild.de"},
                                   {"welt.de", "welt.de"},
                                   {"spiegel.de", "spiegel.de"}};

// Fails on every lookup, like an unreachable network.
class FailingSource final : public RedirectSource {
 public:
  std::optional<std::string> next_hop(const std::string&) override {
    ++calls;
    throw Error(ErrorCode::Io, "connection refused");
  }
  int calls = 0;
};

class CountingSource final : public RedirectSource {
 public:
  explicit CountingSource(std::shared_ptr<StaticRedirectMap> inner) : inner_(std::move(inner)) {}
  std::optional<std::string> next_hop(const std::string& url) override {
    ++calls;
    return inner_->next_hop(url);
  }
  std::atomic<int> calls{0};

 private:
  std::shared_ptr<StaticRedirectMap> inner_;
};

ShareEvent event(const std::string& id, const std::string& user, const std::string& url) {
  ShareEvent e;
  e.tweet_id = id;
  e.user_id = user;
  e.raw_url = url;
  e.resolved_url = url;
  return e;
}

PoliticalSpace space_of(const std::vector<std::pair<std::string, Eigen::Vector2d>>& users) {
  PoliticalSpace s;
  s.user_coords.resize(static_cast<Eigen::Index>(users.size()), 2);
  for (std::size_t i = 0; i < users.size(); ++i) {
    s.user_ids.push_back(users[i].first);
    s.user_coords.row(static_cast<Eigen::Index>(i)) = users[i].second.transpose();
  }
  return s;
}

}  // namespace

TEST_CASE("canonicalization against hand-written expectations") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"https://www.welt.de/politik/a.html", "https://www.welt.de/politik/a.html"},
      {"HTTPS://WWW.Welt.DE/politik/A.html", "https://www.welt.de/politik/A.html"},
      {"https://www.welt.de/politik/a.html?utm_source=twitter&utm_medium=social",
       "https://www.welt.de/politik/a.html"},
      {"https://www.welt.de/politik/a.html?id=4&utm_campaign=x", "https://www.welt.de/politik/a.html?id=4"},
      {"https://www.welt.de/politik/a.html?fbclid=abc&page=2&gclid=q",
       "https://www.welt.de/politik/a.html?page=2"},
      {"https://www.welt.de/politik/a.html#comments", "https://www.welt.de/politik/a.html"},
      {"https://www.welt.de/politik/", "https://www.welt.de/politik"},
      {"https://www.welt.de", "https://www.welt.de/"},
      {"http://www.welt.de:80/x", "http://www.welt.de/x"},
      {"https://www.welt.de:443/x", "https://www.welt.de/x"},
      {"https://www.welt.de:8443/x", "https://www.welt.de:8443/x"},
      {"not a url", "not a url"},
  };
  for (const auto& [in, expected] : cases) {
    CAPTURE(in);
    CHECK(canonicalize_url(in) == expected);
    CHECK(canonicalize_url(expected) == expected);  // fixed point
  }
  CanonicalizationOptions keep_fragment;
  keep_fragment.strip_fragment = false;
  CHECK(canonicalize_url("https://a.de/x#frag", keep_fragment) == "https://a.de/x#frag");
}

TEST_CASE("utm parameters do not change the story id") {
  const std::string clean = "https://www.spiegel.de/politik/story-1.html";
  CHECK(canonicalize_url(clean + "?utm_source=tw&utm_medium=social") == canonicalize_url(clean));
}

TEST_CASE("outlet matching by domain suffix") {
  CHECK(match_outlet("https://www.focus.de/politik/x.html", kOutlets) == "focus.de");
  CHECK(match_outlet("https://m.bild.de/y", kOutlets) == "bild.de");
  CHECK_FALSE(match_outlet("https://example.org/a", kOutlets).has_value());
  CHECK_FALSE(match_outlet("https://notbild.de/a", kOutlets).has_value());
  CHECK_FALSE(match_outlet("garbage", kOutlets).has_value());
  // Every outlet subdomain matches, compared with a direct suffix check.
  for (const auto& o : kOutlets) {
    for (const std::string prefix : {"", "www.", "m.", "amp.news."}) {
      const std::string url = "https://" + prefix + o.domain + "/p";
      CHECK(match_outlet(url, kOutlets) == o.label);
    }
  }
}

TEST_CASE("static redirect map and hop limit") {
  auto map = std::make_shared<StaticRedirectMap>();
  map->add("https://bit.ly/abc", "https://www.welt.de/a.html?utm_source=x");
  UrlResolver r(map);
  auto res = r.resolve("https://bit.ly/abc");
  CHECK(res.resolved);
  CHECK(res.hops == 1);
  CHECK(res.url == "https://www.welt.de/a.html");
  res = r.resolve("https://www.welt.de/b.html");
  CHECK(res.resolved);
  CHECK(res.hops == 0);

  auto chain = std::make_shared<StaticRedirectMap>();
  for (int i = 0; i < 8; ++i) {
    chain->add(fmt::format("https://s.co/{}", i), fmt::format("https://s.co/{}", i + 1));
  }
  UrlResolver limited(chain);
  CHECK(limited.resolve("https://s.co/3").resolved);  // 5 hops
  const auto failed = limited.resolve("https://s.co/0");  // 8 hops
  CHECK_FALSE(failed.resolved);
  CHECK(failed.url == "https://s.co/0");
  CHECK(failed.error.find("hop") != std::string::npos);

  auto loop = std::make_shared<StaticRedirectMap>();
  loop->add("https://a.co/x", "https://b.co/x");
  loop->add("https://b.co/x", "https://a.co/x");
  CHECK_FALSE(UrlResolver(loop).resolve("https://a.co/x").resolved);
}

TEST_CASE("network failure leaves the event unresolved with its raw url") {
  auto src = std::make_shared<FailingSource>();
  UrlResolver r(src);
  const auto res = r.resolve("https://t.co/xyz?utm_source=a");
  CHECK_FALSE(res.resolved);
  CHECK(res.url == "https://t.co/xyz");
  CHECK_FALSE(res.error.empty());
  std::vector<ShareEvent> events{event("1", "u", "https://t.co/xyz")};
  CHECK(resolve_events(events, r) == 0);
  CHECK_FALSE(events[0].resolved_url.has_value());
  CHECK(events[0].raw_url == "https://t.co/xyz");
}

TEST_CASE("resolver caches by raw url") {
  auto map = std::make_shared<StaticRedirectMap>();
  for (int i = 0; i < 50; ++i) map->add(fmt::format("https://bit.ly/{}", i), "https://welt.de/x");
  auto src = std::make_shared<CountingSource>(map);
  ResolverOptions opt;
  opt.max_in_flight = 4;
  UrlResolver r(src, opt);
  std::vector<std::string> raws;
  for (int k = 0; k < 10; ++k) {
    for (int i = 0; i < 50; ++i) raws.push_back(fmt::format("https://bit.ly/{}", i));
  }
  const auto out = r.resolve_all(raws);
  CHECK(out.size() == raws.size());
  CHECK(r.cache_size() == 50);
  CHECK(src->calls == 100);  // one redirect and one final lookup per distinct url
  r.resolve_all(raws);
  CHECK(src->calls == 100);
}

TEST_CASE("share events load from JSON lines and respect the window") {
  TempDir dir("shares");
  write_file(dir / "s.jsonl",
             "{\"tweet_id\": 1, \"user_id\": \"7\", \"url\": \"https://welt.de/a\", \"ts\": 100, "
             "\"retweet\": true}\n"
             "\n"
             "{\"tweet_id\": \"2\", \"user_id\": 8, \"url\": \"https://welt.de/b\", \"ts\": 200}\n");
  const auto ev = load_share_events(dir / "s.jsonl");
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].tweet_id == "1");
  CHECK(ev[0].user_id == "7");
  CHECK(ev[0].is_retweet);
  CHECK(ev[1].user_id == "8");
  CHECK_FALSE(ev[1].is_retweet);
  CHECK_THROWS_AS(load_share_events(dir / "s.jsonl", {150, 300}), Error);
  write_file(dir / "bad.jsonl", "{\"tweet_id\": 1, \"user_id\": \"7\", \"url\": \"\", \"ts\": 1}\n");
  CHECK_THROWS_AS(load_share_events(dir / "bad.jsonl"), Error);
  write_file(dir / "bad2.jsonl", "{\"tweet_id\": 1,\n");
  try {
    load_share_events(dir / "bad2.jsonl");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find(":1") != std::string::npos);
  }
}

TEST_CASE("join: unembedded users count in the denominator") {
  const auto space = space_of({{"a", {0, 0}}, {"b", {2, 0}}});
  const std::vector<ShareEvent> events{
      event("1", "a", "https://www.welt.de/s1"),  event("2", "b", "https://www.welt.de/s1?utm_source=x"),
      event("3", "zz", "https://www.welt.de/s2"), event("4", "a", "https://example.org/x"),
      event("5", "news", "https://www.welt.de/s1")};
  const auto j = join_shares(events, space, kOutlets, {"news"});
  CHECK(j.coverage.total_events == 5);
  CHECK(j.coverage.blocked == 1);
  CHECK(j.coverage.no_outlet == 1);
  CHECK(j.coverage.positioned == 2);
  CHECK(j.coverage.unembedded == 1);
  CHECK(j.coverage.coverage() == doctest::Approx(2.0 / 3.0));
  CHECK(j.coverage.per_outlet.at("welt.de").unembedded == 1);
  REQUIRE(j.shares.size() == 2);
  CHECK(j.shares[0].story_id == j.shares[1].story_id);

  const auto all = join_shares({events[0], events[1]}, space, kOutlets);
  CHECK(all.coverage.coverage() == 1.0);
}

TEST_CASE("story means") {
  const auto space = space_of({{"a", {1, 2}}, {"b", {0, 0}}, {"c", {2, 0}}});
  auto j = join_shares({event("1", "a", "https://welt.de/x")}, space, kOutlets);
  auto st = story_stats(j.shares);
  REQUIRE(st.size() == 1);
  CHECK(st[0].mean_position == Eigen::Vector2d(1, 2));
  j = join_shares({event("1", "b", "https://welt.de/x"), event("2", "c", "https://welt.de/x")}, space,
                  kOutlets);
  st = story_stats(j.shares);
  CHECK(st[0].mean_position == Eigen::Vector2d(1, 0));
  CHECK(st[0].share_count == 2);
}

TEST_CASE("outlet positions versus story means") {
  const auto space = space_of({{"a", {0, 0}}, {"b", {1, 0}}, {"c", {0, 1}}});
  std::vector<ShareEvent> ev;
  int id = 0;
  for (const std::string story : {"s1", "s2"}) {
    for (const std::string user : {"a", "b", "c"}) {
      ev.push_back(event(std::to_string(id++), user, "https://bild.de/" + story));
    }
  }
  ev.push_back(event("99", "a", "https://welt.de/only"));
  const auto j = join_shares(ev, space, kOutlets);
  const auto stats = story_stats(j.shares);
  CHECK(outlet_positions(j.shares, "bild.de").size() == 6);
  CHECK(story_mean_positions(stats, "bild.de").size() == 2);
  CHECK(story_mean_positions(stats, "welt.de").size() == 1);
  CHECK(story_mean_positions(stats, "unknown.de").empty());
  CHECK(outlet_positions(j.shares, "unknown.de").empty());
}

TEST_CASE("random fixture: coverage and story groups equal a brute-force join") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> user(0, 59), story(0, 24), out(0, 4);
  std::vector<std::pair<std::string, Eigen::Vector2d>> users;
  std::normal_distribution<double> z;
  for (int i = 0; i < 40; ++i) users.emplace_back(fmt::format("u{}", i), Eigen::Vector2d(z(rng), z(rng)));
  const auto space = space_of(users);
  const std::vector<std::string> domains{"welt.de", "bild.de", "focus.de", "spiegel.de", "other.org"};
  std::vector<ShareEvent> events;
  for (int e = 0; e < 2000; ++e) {
    const int u = user(rng);
    const std::string uid = u >= 55 ? fmt::format("news{}", u) : fmt::format("u{}", u);
    events.push_back(event(std::to_string(e), uid,
                           fmt::format("https://www.{}/s{}", domains[out(rng)], story(rng))));
  }
  std::set<std::string> blocked;
  for (int u = 55; u < 60; ++u) blocked.insert(fmt::format("news{}", u));
  const auto j = join_shares(events, space, kOutlets, blocked);

  std::size_t b = 0, no = 0, pos = 0, unemb = 0;
  std::map<std::string, std::vector<Eigen::Vector2d>> groups;
  std::map<std::string, Eigen::Vector2d> where(users.begin(), users.end());
  for (const auto& e : events) {
    if (blocked.contains(e.user_id)) {
      ++b;
    } else if (e.raw_url.find("other.org") != std::string::npos) {
      ++no;
    } else if (!where.contains(e.user_id)) {
      ++unemb;
    } else {
      ++pos;
      groups[e.raw_url].push_back(where.at(e.user_id));
    }
  }
  CHECK(j.coverage.blocked == b);
  CHECK(j.coverage.no_outlet == no);
  CHECK(j.coverage.positioned == pos);
  CHECK(j.coverage.unembedded == unemb);
  CHECK(j.coverage.coverage() == static_cast<double>(pos) / static_cast<double>(pos + unemb));

  const auto stats = story_stats(j.shares);
  CHECK(stats.size() == groups.size());
  std::size_t total = 0;
  for (const auto& s : stats) {
    const auto& g = groups.at(s.story_id);
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& p : g) m += p;
    m /= static_cast<double>(g.size());
    CHECK((s.mean_position - m).norm() < 1e-12);
    CHECK(s.share_count == g.size());
    CHECK(s.positions.size() == s.share_count);
    total += s.share_count;
  }
  CHECK(total == j.shares.size());  // each share in exactly one story
}

TEST_CASE("positioned shares round-trip through CSV") {
  TempDir dir("shares");
  const auto space = space_of({{"a", {0.125, -3.5}}, {"b, c", {1e-17, 2}}});
  auto e1 = event("1", "a", "https://welt.de/x?utm_source=1");
  e1.is_retweet = true;
  e1.timestamp = 1600000000;
  auto e2 = event("2", "b, c", "https://bild.de/\"q\"");
  e2.resolved_url.reset();
  const auto j = join_shares({e1, e2}, space, kOutlets);
  write_positioned_shares(j.shares, dir / "p.csv");
  const auto back = read_positioned_shares(dir / "p.csv");
  REQUIRE(back.size() == j.shares.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].event.tweet_id == j.shares[i].event.tweet_id);
    CHECK(back[i].event.user_id == j.shares[i].event.user_id);
    CHECK(back[i].event.raw_url == j.shares[i].event.raw_url);
    CHECK(back[i].event.is_retweet == j.shares[i].event.is_retweet);
    CHECK(back[i].event.timestamp == j.shares[i].event.timestamp);
    CHECK(back[i].outlet == j.shares[i].outlet);
    CHECK(back[i].story_id == j.shares[i].story_id);
    CHECK(back[i].position == j.shares[i].position);
  }
}

TEST_CASE("blocklist skips its header") {
  TempDir dir("shares");
  write_file(dir / "b.csv", "user_id\nnews_1\nnews_2\n");
  CHECK(load_blocklist(dir / "b.csv") == std::set<std::string>{"news_1", "news_2"});
}
