#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carto/align.hpp"
#include "carto/url.hpp"

namespace carto {

struct ShareEvent {
  std::string tweet_id;
  std::string user_id;
  std::string raw_url;
  std::optional<std::string> resolved_url;
  std::int64_t timestamp = 0;  // UTC seconds
  bool is_retweet = false;
};

struct CollectionWindow {
  std::int64_t begin = INT64_MIN;
  std::int64_t end = INT64_MAX;  // inclusive
};

/// Reads JSON lines `{"tweet_id", "user_id", "url", "ts", "retweet"}`.
/// Identifiers may be JSON strings or integers.
std::vector<ShareEvent> load_share_events(const std::filesystem::path& path,
                                          const CollectionWindow& window = {});

/// Fills `resolved_url` for every event. Unresolved events keep the
/// canonical raw url. Returns the number of resolved events.
std::size_t resolve_events(std::vector<ShareEvent>& events, UrlResolver& resolver);

struct PositionedShare {
  ShareEvent event;
  std::string outlet;
  std::string story_id;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct OutletCoverage {
  std::size_t positioned = 0;
  std::size_t unembedded = 0;
};

struct CoverageReport {
  std::size_t total_events = 0;
  std::size_t blocked = 0;     // newspaper accounts
  std::size_t no_outlet = 0;   // url matches no configured outlet
  std::size_t positioned = 0;
  std::size_t unembedded = 0;
  std::size_t resolved = 0;
  std::size_t unresolved = 0;
  std::map<std::string, OutletCoverage> per_outlet;

  /// positioned / (positioned + unembedded)
  double coverage() const noexcept;
};

struct JoinResult {
  std::vector<PositionedShare> shares;
  CoverageReport coverage;
};

/// Joins events to user positions. Blocklisted accounts and events without
/// an outlet are counted but excluded from the coverage denominator.
JoinResult join_shares(const std::vector<ShareEvent>& events,
                       const PoliticalSpace& space,
                       const std::vector<Outlet>& outlets,
                       const std::set<std::string>& account_blocklist = {},
                       const CanonicalizationOptions& canonicalization = {});

struct StoryStats {
  std::string story_id;
  std::string outlet;
  std::size_t share_count = 0;
  std::vector<Eigen::Vector2d> positions;
  Eigen::Vector2d mean_position = Eigen::Vector2d::Zero();
};

/// One group per story id, ordered by story id.
std::vector<StoryStats> story_stats(const std::vector<PositionedShare>& shares);

std::vector<Eigen::Vector2d> outlet_positions(
    const std::vector<PositionedShare>& shares, const std::string& outlet);

std::vector<Eigen::Vector2d> story_mean_positions(
    const std::vector<StoryStats>& stories, const std::string& outlet);

std::set<std::string> load_blocklist(const std::filesystem::path& path);

void write_positioned_shares(const std::vector<PositionedShare>& shares,
                             const std::filesystem::path& path);
std::vector<PositionedShare> read_positioned_shares(const std::filesystem::path& path);
void write_story_stats(const std::vector<StoryStats>& stories,
                       const std::filesystem::path& path);

}  // namespace carto
