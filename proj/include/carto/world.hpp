#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "carto/synth.hpp"

namespace carto {

/// A complete synthetic input set for the pipeline: follow network, party
/// survey scores, outlets, share events with short links and tracking
/// parameters, a redirect table, an account blocklist and topic data.
struct WorldConfig {
  SyntheticConfig network = SyntheticConfig::six_party(20000, 120);
  std::size_t n_events = 20000;
  std::size_t n_outlets = 12;
  std::size_t shares_per_story = 20;  // average
  double share_radius = 0.4;          // latent distance scale of sharers
  double blocked_fraction = 0.02;     // events from newspaper accounts
  double unknown_user_fraction = 0.02;
  double foreign_fraction = 0.03;     // links to non-outlet sites
  double short_link_fraction = 0.25;
  double broken_short_fraction = 0.05;  // share of short links with no redirect
  double doc_fraction = 0.75;           // stories with retrieved text
  std::size_t n_topics = 40;
  std::size_t n_metatopics = 8;
  double score_noise = 0.05;
  std::int64_t ts_begin = 1590969600;  // 2020-06-01
  std::int64_t ts_end = 1601510399;    // 2020-09-30
  std::uint64_t seed = 42;

  void validate() const;
};

enum class ShareCategory { Blocked, NoOutlet, Candidate };

struct WorldSummary {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_edges = 0;
  std::size_t n_events = 0;
  std::size_t n_stories = 0;
  std::size_t n_documents = 0;
  std::map<std::string, std::size_t> category_counts;  // blocked / no_outlet / candidate
  std::vector<std::string> warnings;
};

std::string_view to_string(ShareCategory c) noexcept;

/// Files written to `dir`: edges.tsv, meta.csv, party_scores.csv,
/// outlets.csv, shares.jsonl, redirects.csv, blocklist.csv, doc_topics.csv,
/// metatopics.csv, story_docs.csv, planted_users.csv, planted_items.csv,
/// share_truth.csv and world.json.
WorldSummary write_world(const WorldConfig& config, const std::filesystem::path& dir);

/// Issue names in party_scores.csv. The first is the x-axis issue; the
/// next four are planted small rotations of the y axis; the last carries
/// no signal.
const std::vector<std::string>& world_issues();

}  // namespace carto
