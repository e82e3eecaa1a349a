#include "carto/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "carto/error.hpp"
#include "carto/io.hpp"
#include "carto/url.hpp"

namespace carto {

namespace {

constexpr std::uint64_t kOutletStream = 101;
constexpr std::uint64_t kEventStream = 102;
constexpr std::uint64_t kTopicStream = 103;
constexpr std::uint64_t kScoreStream = 104;

constexpr const char* kOutletNames[] = {
    "dailyledger.com",  "morningpost.net", "thecourier.org", "citytribune.com",
    "nationalherald.net", "westgazette.com", "eveningstar.org", "thechronicle.net",
    "capitalreview.com", "freeobserver.org", "weeklydispatch.com", "planetbulletin.net"};

constexpr const char* kSections[] = {"politics", "economy", "world", "opinion", "culture"};

constexpr const char* kMetatopics[] = {"economy", "environment", "migration", "health",
                                       "europe",  "security",    "culture",   "technology",
                                       "education", "transport", "housing",   "media"};

enum class OutletKind { Lean, Segmented, Bridging };

struct Story {
  std::size_t outlet = 0;
  std::string long_url;
  std::string story_id;
  std::vector<Eigen::Vector2d> anchors;
  std::optional<std::string> doc_id;
};

std::string base36(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string s;
  do {
    s.push_back(kDigits[v % 36]);
    v /= 36;
  } while (v != 0);
  while (s.size() < 6) s.push_back('0');
  std::reverse(s.begin(), s.end());
  return s;
}

std::string upper_host(const std::string& url) {
  // Upper-cases scheme and host, leaving the path untouched.
  std::string out = url;
  const auto start = out.find("://");
  const auto path = out.find('/', start + 3);
  for (std::size_t i = 0; i < std::min(path, out.size()); ++i) {
    out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[i])));
  }
  return out;
}

std::string outlet_domain(std::size_t o) {
  constexpr std::size_t n = std::size(kOutletNames);
  if (o < n) return kOutletNames[o];
  return fmt::format("outlet{}.com", o);
}

}  // namespace

std::string_view to_string(ShareCategory c) noexcept {
  switch (c) {
    case ShareCategory::Blocked: return "blocked";
    case ShareCategory::NoOutlet: return "no_outlet";
    case ShareCategory::Candidate: return "candidate";
  }
  return "";
}

const std::vector<std::string>& world_issues() {
  static const std::vector<std::string> kIssues = {
      "lrgen", "people_vs_elite", "eu_position", "eu_intmark", "protectionism", "weak_issue"};
  return kIssues;
}

void WorldConfig::validate() const {
  network.validate();
  if (n_outlets == 0 || shares_per_story == 0 || n_topics == 0 || n_metatopics == 0) {
    throw Error(ErrorCode::InvalidArgument, "world counts must be positive");
  }
  if (n_metatopics > std::size(kMetatopics) || n_metatopics > n_topics) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("n_metatopics must be at most {} and at most n_topics",
                            std::size(kMetatopics)));
  }
  for (double f : {blocked_fraction, unknown_user_fraction, foreign_fraction,
                   short_link_fraction, broken_short_fraction, doc_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "world fractions must lie in [0, 1]");
    }
  }
  if (blocked_fraction + foreign_fraction > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "blocked + foreign fractions exceed 1");
  }
  if (ts_end < ts_begin) throw Error(ErrorCode::InvalidArgument, "empty time window");
}

WorldSummary write_world(const WorldConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  std::filesystem::create_directories(dir);
  WorldSummary summary;

  const SyntheticData net = generate(cfg.network);
  summary.warnings = net.warnings;
  summary.n_users = net.graph.n_users();
  summary.n_items = net.graph.n_items();
  summary.n_edges = net.graph.n_edges();

  {
    auto out = io::open_output(dir / "edges.tsv");
    const auto& adj = net.graph.adjacency();
    for (std::size_t i = 0; i < net.graph.n_users(); ++i) {
      for (auto j : adj.row(i)) {
        out << net.graph.users()[i] << '\t' << net.graph.items()[j] << '\n';
      }
    }
  }
  {
    auto out = io::open_output(dir / "meta.csv");
    out << "item_id,party,follower_count\n";
    for (const auto& r : net.meta.records()) {
      out << r.id << ',' << r.party << ',' << r.follower_count << '\n';
    }
  }
  {
    auto out = io::open_output(dir / "planted_users.csv");
    out << "user_id,x,y,component,casual\n";
    for (std::size_t i = 0; i < net.graph.n_users(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      out << net.graph.users()[i] << ',' << io::format_double(net.user_positions(r, 0)) << ','
          << io::format_double(net.user_positions(r, 1)) << ',' << net.user_component[i] << ','
          << static_cast<int>(net.casual[i]) << '\n';
    }
    auto items = io::open_output(dir / "planted_items.csv");
    items << "item_id,party,x,y,alpha\n";
    for (std::size_t j = 0; j < net.graph.n_items(); ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      items << net.graph.items()[j] << ','
            << cfg.network.item_mixture[net.item_component[j]].label << ','
            << io::format_double(net.item_positions(r, 0)) << ','
            << io::format_double(net.item_positions(r, 1)) << ','
            << io::format_double(net.alpha(r)) << '\n';
    }
  }

  // Party survey scores planted from the item component means.
  {
    std::mt19937_64 rng(stream_seed(cfg.seed, kScoreStream, 0));
    std::normal_distribution<double> noise(0.0, cfg.score_noise);
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    constexpr double kRotations[] = {-9.0, -2.0, 5.0, 11.0};
    const auto& issues = world_issues();
    auto out = io::open_output(dir / "party_scores.csv");
    out << "party,issue,score,scale_min,scale_max\n";
    for (const auto& comp : cfg.network.item_mixture) {
      const Eigen::Vector2d m = comp.mean;
      std::vector<double> scores;
      scores.push_back(m.x() + noise(rng));
      for (double deg : kRotations) {
        const double t = deg * std::numbers::pi / 180.0;
        scores.push_back(std::sin(t) * m.x() + std::cos(t) * m.y() + noise(rng));
      }
      for (std::size_t k = 0; k < scores.size(); ++k) {
        const double s = std::clamp(5.0 + 3.0 * scores[k], 0.0, 10.0);
        out << comp.label << ',' << issues[k] << ',' << io::format_double(s) << ",0,10\n";
      }
      out << comp.label << ',' << issues.back() << ',' << io::format_double(unif(rng))
          << ",0,10\n";
    }
  }

  // Outlets and their stories.
  std::mt19937_64 orng(stream_seed(cfg.seed, kOutletStream, 0));
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> outlet_weight(cfg.n_outlets);
  for (std::size_t o = 0; o < cfg.n_outlets; ++o) {
    outlet_weight[o] = 1.0 / std::pow(static_cast<double>(o + 1), 0.8);
  }
  const double weight_total = std::accumulate(outlet_weight.begin(), outlet_weight.end(), 0.0);
  std::vector<Eigen::Vector2d> party_means;
  for (const auto& c : cfg.network.user_mixture) party_means.push_back(c.mean);
  const auto random_party = [&] {
    return party_means[static_cast<std::size_t>(unif(orng) * party_means.size()) %
                       party_means.size()];
  };
  const auto jitter = [&](double sd) { return Eigen::Vector2d(sd * z(orng), sd * z(orng)); };

  std::vector<Story> stories;
  std::vector<std::vector<std::size_t>> outlet_stories(cfg.n_outlets);
  {
    auto out = io::open_output(dir / "outlets.csv");
    out << "outlet,domain\n";
    for (std::size_t o = 0; o < cfg.n_outlets; ++o) {
      const std::string domain = outlet_domain(o);
      out << domain << ',' << domain << '\n';
      const auto kind = static_cast<OutletKind>(o % 3);
      const Eigen::Vector2d a = random_party();
      Eigen::Vector2d b = random_party();
      for (int tries = 0; tries < 16 && (b - a).norm() < 0.5; ++tries) b = random_party();
      const Eigen::Vector2d lean = a + jitter(0.3);
      const double expected = cfg.n_events * outlet_weight[o] / weight_total;
      const auto n_stories = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(expected / cfg.shares_per_story)));
      for (std::size_t s = 0; s < n_stories; ++s) {
        Story st;
        st.outlet = o;
        const char* section = kSections[s % std::size(kSections)];
        st.long_url = fmt::format("https://www.{}/{}/story-{}-{}.html", domain, section, o, s);
        st.story_id = canonicalize_url(st.long_url);
        switch (kind) {
          case OutletKind::Lean: st.anchors = {lean + jitter(0.25)}; break;
          case OutletKind::Segmented:
            st.anchors = {(unif(orng) < 0.5 ? a : b) + jitter(0.15)};
            break;
          case OutletKind::Bridging: st.anchors = {a + jitter(0.15), b + jitter(0.15)}; break;
        }
        outlet_stories[o].push_back(stories.size());
        stories.push_back(std::move(st));
      }
    }
  }
  summary.n_stories = stories.size();

  // Documents and topics.
  {
    std::mt19937_64 trng(stream_seed(cfg.seed, kTopicStream, 0));
    std::uniform_real_distribution<double> tu(0.0, 1.0);
    auto map_out = io::open_output(dir / "metatopics.csv");
    map_out << "topic_id,metatopic\n";
    for (std::size_t t = 1; t <= cfg.n_topics; ++t) {
      map_out << t << ',' << kMetatopics[(t - 1) % cfg.n_metatopics] << '\n';
    }
    auto docs = io::open_output(dir / "doc_topics.csv");
    docs << "doc_id,topic_id,prob\n";
    auto links = io::open_output(dir / "story_docs.csv");
    links << "story_id,doc_id\n";
    const auto topics_per_meta = cfg.n_topics / cfg.n_metatopics;
    for (std::size_t k = 0; k < stories.size(); ++k) {
      auto& st = stories[k];
      if (!(tu(trng) < cfg.doc_fraction)) continue;
      st.doc_id = fmt::format("doc{:06}", k);
      ++summary.n_documents;
      // Outlets favour two metatopics.
      const std::size_t meta = tu(trng) < 0.5 ? st.outlet % cfg.n_metatopics
                                              : (st.outlet + 3) % cfg.n_metatopics;
      const auto pick_in_meta = static_cast<std::size_t>(tu(trng) * topics_per_meta);
      const std::size_t main = 1 + meta + cfg.n_metatopics * std::min(pick_in_meta, topics_per_meta - 1);
      std::map<std::size_t, double> row;
      const double p0 = 0.25 + 0.7 * tu(trng);
      row[main] = p0;
      double rest = (1.0 - p0) * (0.8 + 0.2 * tu(trng));
      for (int extra = 0; extra < 3; ++extra) {
        const std::size_t t = 1 + static_cast<std::size_t>(tu(trng) * cfg.n_topics) % cfg.n_topics;
        const double share = extra == 2 ? rest : rest * tu(trng);
        row[t] += share;
        rest -= share;
      }
      for (const auto& [t, p] : row) {
        docs << *st.doc_id << ',' << t << ',' << io::format_double(p) << '\n';
      }
      links << io::csv_field(st.story_id) << ',' << *st.doc_id << '\n';
    }
  }

  // Share events.
  std::mt19937_64 erng(stream_seed(cfg.seed, kEventStream, 0));
  std::uniform_real_distribution<double> eu(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> ts(cfg.ts_begin, cfg.ts_end);
  const auto n_users = net.graph.n_users();
  const auto sample_user = [&](const Eigen::Vector2d& anchor) -> std::size_t {
    const double r2 = 2.0 * cfg.share_radius * cfg.share_radius;
    std::size_t best = 0;
    double best_d = INFINITY;
    for (int tries = 0; tries < 4000; ++tries) {
      const auto u = static_cast<std::size_t>(eu(erng) * n_users) % n_users;
      const double d = (net.user_positions.row(static_cast<Eigen::Index>(u)).transpose() - anchor)
                           .squaredNorm();
      if (eu(erng) < std::exp(-d / r2)) return u;
      if (d < best_d) {
        best_d = d;
        best = u;
      }
    }
    return best;
  };
  const auto pick_outlet = [&] {
    double u = eu(erng) * weight_total;
    for (std::size_t o = 0; o < cfg.n_outlets; ++o) {
      u -= outlet_weight[o];
      if (u < 0.0) return o;
    }
    return cfg.n_outlets - 1;
  };

  auto shares = io::open_output(dir / "shares.jsonl");
  auto redirects = io::open_output(dir / "redirects.csv");
  redirects << "short,long\n";
  auto truth = io::open_output(dir / "share_truth.csv");
  truth << "tweet_id,category,outlet,story_id,user_id\n";
  auto blocklist = io::open_output(dir / "blocklist.csv");
  blocklist << "user_id\n";
  for (std::size_t o = 0; o < cfg.n_outlets; ++o) blocklist << "news_" << o << '\n';

  std::uint64_t short_counter = 0;
  std::size_t ghost_counter = 0;
  for (std::size_t e = 0; e < cfg.n_events; ++e) {
    const double r = eu(erng);
    ShareCategory cat = ShareCategory::Candidate;
    std::string user;
    std::string url;
    std::string outlet;
    std::string story_id;
    if (r < cfg.blocked_fraction) {
      const auto o = pick_outlet();
      const auto& st = stories[outlet_stories[o][static_cast<std::size_t>(
          eu(erng) * outlet_stories[o].size()) % outlet_stories[o].size()]];
      cat = ShareCategory::Blocked;
      user = fmt::format("news_{}", o);
      url = st.long_url;
      outlet = outlet_domain(o);
      story_id = st.story_id;
    } else if (r < cfg.blocked_fraction + cfg.foreign_fraction) {
      cat = ShareCategory::NoOutlet;
      user = net.graph.users()[static_cast<std::size_t>(eu(erng) * n_users) % n_users];
      url = fmt::format("https://www.videohost.com/watch?v={}", base36(e));
    } else {
      const auto o = pick_outlet();
      const auto& st = stories[outlet_stories[o][static_cast<std::size_t>(
          eu(erng) * outlet_stories[o].size()) % outlet_stories[o].size()]];
      outlet = outlet_domain(o);
      story_id = st.story_id;
      const auto& anchor = st.anchors[static_cast<std::size_t>(eu(erng) * st.anchors.size()) %
                                      st.anchors.size()];
      if (eu(erng) < cfg.unknown_user_fraction) {
        user = fmt::format("ghost{}", ghost_counter++);
      } else {
        user = net.graph.users()[sample_user(anchor)];
      }
      const double v = eu(erng);
      if (v < cfg.short_link_fraction) {
        const std::string code = base36(++short_counter);
        url = "https://bit.ly/" + code;
        if (eu(erng) < cfg.broken_short_fraction) {
          cat = ShareCategory::NoOutlet;
          outlet.clear();
          story_id.clear();
        } else {
          const std::string target = st.long_url + "?utm_source=twitter&utm_medium=social";
          if (eu(erng) < 0.3) {
            const std::string tco = "https://t.co/" + code;
            redirects << tco << ',' << url << '\n';
            url = tco;
            redirects << "https://bit.ly/" << code << ',' << io::csv_field(target) << '\n';
          } else {
            redirects << url << ',' << io::csv_field(target) << '\n';
          }
        }
      } else if (v < cfg.short_link_fraction + 0.2) {
        url = st.long_url + "?utm_campaign=share&fbclid=" + base36(e);
      } else if (v < cfg.short_link_fraction + 0.3) {
        url = upper_host(st.long_url) + "#comments";
      } else {
        url = st.long_url;
      }
    }
    ++summary.category_counts[std::string(to_string(cat))];
    nlohmann::ordered_json ev;
    ev["tweet_id"] = 1000000 + e;
    ev["user_id"] = user;
    ev["url"] = url;
    ev["ts"] = ts(erng);
    ev["retweet"] = eu(erng) < 0.4;
    shares << ev.dump() << '\n';
    truth << (1000000 + e) << ',' << to_string(cat) << ',' << io::csv_field(outlet) << ','
          << io::csv_field(story_id) << ',' << io::csv_field(user) << '\n';
  }
  summary.n_events = cfg.n_events;

  nlohmann::ordered_json info;
  info["seed"] = cfg.seed;
  info["n_users"] = summary.n_users;
  info["n_items"] = summary.n_items;
  info["n_edges"] = summary.n_edges;
  info["n_events"] = summary.n_events;
  info["n_stories"] = summary.n_stories;
  info["n_documents"] = summary.n_documents;
  info["categories"] = summary.category_counts;
  info["x_issue"] = world_issues().front();
  info["time_window"] = {cfg.ts_begin, cfg.ts_end};
  info["warnings"] = summary.warnings;
  io::write_text(dir / "world.json", info.dump(2) + "\n");
  return summary;
}

}  // namespace carto
