#include "carto/shares.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

std::string id_field(const nlohmann::json& obj, const char* key,
                     const std::filesystem::path& path, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::Parse,
                fmt::format("{}:{}: missing field '{}'", path.string(), line, key));
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return it->dump();
  throw Error(ErrorCode::Parse, fmt::format("{}:{}: field '{}' must be a string "
                                            "or integer", path.string(), line, key));
}

}  // namespace

double CoverageReport::coverage() const noexcept {
  const auto denom = positioned + unembedded;
  return denom == 0 ? 0.0 : static_cast<double>(positioned) / static_cast<double>(denom);
}

std::vector<ShareEvent> load_share_events(const std::filesystem::path& path,
                                          const CollectionWindow& window) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<ShareEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected a JSON object", path.string(), line_no));
    }
    ShareEvent ev;
    ev.tweet_id = id_field(obj, "tweet_id", path, line_no);
    ev.user_id = id_field(obj, "user_id", path, line_no);
    const auto url = obj.find("url");
    if (url == obj.end() || !url->is_string() || url->get<std::string>().empty()) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: 'url' must be a nonempty string",
                              path.string(), line_no));
    }
    ev.raw_url = url->get<std::string>();
    const auto ts = obj.find("ts");
    if (ts == obj.end() || !ts->is_number_integer()) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: 'ts' must be an integer", path.string(), line_no));
    }
    ev.timestamp = ts->get<std::int64_t>();
    if (ev.timestamp < window.begin || ev.timestamp > window.end) {
      throw Error(ErrorCode::Validation,
                  fmt::format("{}:{}: timestamp {} outside the collection window",
                              path.string(), line_no, ev.timestamp));
    }
    if (const auto rt = obj.find("retweet"); rt != obj.end()) {
      if (!rt->is_boolean()) {
        throw Error(ErrorCode::Parse, fmt::format("{}:{}: 'retweet' must be boolean",
                                                  path.string(), line_no));
      }
      ev.is_retweet = rt->get<bool>();
    }
    events.push_back(std::move(ev));
  }
  return events;
}

std::size_t resolve_events(std::vector<ShareEvent>& events, UrlResolver& resolver) {
  std::vector<std::string> raws;
  raws.reserve(events.size());
  for (const auto& ev : events) raws.push_back(ev.raw_url);
  const auto results = resolver.resolve_all(raws);
  std::size_t resolved = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (results[i].resolved) {
      events[i].resolved_url = results[i].url;
      ++resolved;
    } else {
      events[i].resolved_url.reset();
    }
  }
  return resolved;
}

JoinResult join_shares(const std::vector<ShareEvent>& events,
                       const PoliticalSpace& space,
                       const std::vector<Outlet>& outlets,
                       const std::set<std::string>& account_blocklist,
                       const CanonicalizationOptions& canonicalization) {
  std::unordered_map<std::string, Eigen::Index> users;
  users.reserve(space.user_ids.size());
  for (std::size_t i = 0; i < space.user_ids.size(); ++i) {
    users.emplace(space.user_ids[i], static_cast<Eigen::Index>(i));
  }

  JoinResult out;
  auto& cov = out.coverage;
  for (const auto& ev : events) {
    ++cov.total_events;
    if (ev.resolved_url) {
      ++cov.resolved;
    } else {
      ++cov.unresolved;
    }
    if (account_blocklist.contains(ev.user_id)) {
      ++cov.blocked;
      continue;
    }
    const std::string story =
        ev.resolved_url ? canonicalize_url(*ev.resolved_url, canonicalization)
                        : canonicalize_url(ev.raw_url, canonicalization);
    auto outlet = match_outlet(story, outlets);
    if (!outlet) {
      ++cov.no_outlet;
      continue;
    }
    auto& per = cov.per_outlet[*outlet];
    const auto it = users.find(ev.user_id);
    if (it == users.end()) {
      ++cov.unembedded;
      ++per.unembedded;
      continue;
    }
    ++cov.positioned;
    ++per.positioned;
    PositionedShare share;
    share.event = ev;
    share.outlet = std::move(*outlet);
    share.story_id = story;
    share.position = space.user_coords.row(it->second).transpose();
    out.shares.push_back(std::move(share));
  }
  return out;
}

std::vector<StoryStats> story_stats(const std::vector<PositionedShare>& shares) {
  std::map<std::string, StoryStats> groups;
  for (const auto& s : shares) {
    auto& g = groups[s.story_id];
    if (g.positions.empty()) {
      g.story_id = s.story_id;
      g.outlet = s.outlet;
    }
    g.positions.push_back(s.position);
  }
  std::vector<StoryStats> out;
  out.reserve(groups.size());
  for (auto& [id, g] : groups) {
    g.share_count = g.positions.size();
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& p : g.positions) sum += p;
    g.mean_position = sum / static_cast<double>(g.share_count);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Eigen::Vector2d> outlet_positions(
    const std::vector<PositionedShare>& shares, const std::string& outlet) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& s : shares) {
    if (s.outlet == outlet) out.push_back(s.position);
  }
  if (out.empty()) spdlog::warn("outlet '{}' has no positioned shares", outlet);
  return out;
}

std::vector<Eigen::Vector2d> story_mean_positions(
    const std::vector<StoryStats>& stories, const std::string& outlet) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& s : stories) {
    if (s.outlet == outlet) out.push_back(s.mean_position);
  }
  if (out.empty()) spdlog::warn("outlet '{}' has no stories", outlet);
  return out;
}

std::set<std::string> load_blocklist(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::set<std::string> out;
  while (reader.next(f)) {
    if (!f.empty() && !f[0].empty() && f[0] != "user_id") out.insert(f[0]);
  }
  return out;
}

void write_positioned_shares(const std::vector<PositionedShare>& shares,
                             const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "tweet_id,user_id,outlet,story_id,x,y,retweet,ts,raw_url,resolved\n";
  for (const auto& s : shares) {
    out << io::csv_field(s.event.tweet_id) << ',' << io::csv_field(s.event.user_id)
        << ',' << io::csv_field(s.outlet) << ',' << io::csv_field(s.story_id) << ','
        << io::format_double(s.position.x()) << ','
        << io::format_double(s.position.y()) << ',' << (s.event.is_retweet ? 1 : 0)
        << ',' << s.event.timestamp << ',' << io::csv_field(s.event.raw_url) << ','
        << (s.event.resolved_url ? 1 : 0) << '\n';
  }
}

std::vector<PositionedShare> read_positioned_shares(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<PositionedShare> out;
  bool header = true;
  while (reader.next(f)) {
    if (header) {
      header = false;
      if (!f.empty() && f[0] == "tweet_id") continue;
    }
    if (f.size() != 10) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected 10 fields",
                                                path.string(), reader.line_number()));
    }
    const auto line = reader.line_number();
    PositionedShare s;
    s.event.tweet_id = f[0];
    s.event.user_id = f[1];
    s.outlet = f[2];
    s.story_id = f[3];
    s.position = {io::parse_double(f[4], path, line), io::parse_double(f[5], path, line)};
    s.event.is_retweet = f[6] == "1";
    s.event.timestamp = io::parse_integer(f[7], path, line);
    s.event.raw_url = f[8];
    if (f[9] == "1") s.event.resolved_url = s.story_id;
    out.push_back(std::move(s));
  }
  return out;
}

void write_story_stats(const std::vector<StoryStats>& stories,
                       const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "story_id,outlet,share_count,mean_x,mean_y\n";
  for (const auto& s : stories) {
    out << io::csv_field(s.story_id) << ',' << io::csv_field(s.outlet) << ','
        << s.share_count << ',' << io::format_double(s.mean_position.x()) << ','
        << io::format_double(s.mean_position.y()) << '\n';
  }
}

}  // namespace carto
