#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "carto/align.hpp"
#include "carto/ca.hpp"
#include "carto/density.hpp"
#include "carto/shares.hpp"
#include "carto/topics.hpp"
#include "carto/world.hpp"

/// File-to-file pipeline stages. Every stage reads plain files written by
/// the previous one and writes its own directory, so stages can be rerun
/// independently.
namespace carto::pipeline {

namespace fs = std::filesystem;

struct EmbedParams {
  fs::path edges;
  fs::path meta;
  fs::path out_dir;
  Eigen::Index n_dims = 3;
  std::size_t min_follow = 3;
  double popularity_threshold = 0.5;
  double variance_threshold = 0.2;
  bool strict = true;
  CaOptions ca;
};

struct EmbedResult {
  std::size_t users_loaded = 0;
  std::size_t users_kept = 0;
  std::size_t items = 0;
  std::size_t edges = 0;
  Eigen::VectorXd singular_values;
  std::pair<Eigen::Index, Eigen::Index> selected{0, 1};
  DimensionScreenReport screen;
};

/// Writes users_index.csv, items_index.csv, masses.csv, user_coords.csv,
/// item_coords.csv, singular_values.json and screen_report.json.
EmbedResult run_embed(const EmbedParams& params);

struct AlignParams {
  fs::path embed_dir;
  fs::path meta;
  fs::path party_scores;
  fs::path out_dir;
  std::string x_issue = "lrgen";
  std::vector<std::string> y_issues;  // empty: every other issue
  double cutoff = 0.8;
  double window_deg = 30.0;
  double step_deg = 1.0;
  bool refine = true;
  std::vector<PartyUnion> unions;
  std::vector<std::string> split;
};

struct AlignResult {
  HandedScans scans;
  IssueSelection selection;
  double rotation_deg = 0.0;
  PoliticalSpace space;
  std::vector<std::pair<std::string, double>> issue_correlations;  // final y vs issue
};

/// Writes scans.json, transform.json, user_positions.csv,
/// item_positions.csv and party_positions.csv.
AlignResult run_align(const AlignParams& params);

struct MapParams {
  fs::path align_dir;
  fs::path shares;
  fs::path outlets;
  fs::path out_dir;
  std::optional<fs::path> redirects;  // offline `short,long` table
  bool online = false;                // follow redirects over HTTP
  std::optional<fs::path> blocklist;
  CollectionWindow window;
  int max_hops = 5;
  std::size_t max_in_flight = 8;
  int http_timeout_s = 10;
};

struct MapResult {
  CoverageReport coverage;
  std::size_t stories = 0;
};

/// Writes positioned_shares.csv, story_stats.csv, coverage.json and
/// resolved_urls.csv.
MapResult run_map(const MapParams& params);

struct TopicsParams {
  fs::path map_dir;
  fs::path doc_topics;
  fs::path metatopic_map;
  fs::path story_docs;
  fs::path out_dir;
  double threshold = kMainTopicThreshold;
};

struct TopicsResult {
  TaggingReport tagging;
  double topic_coverage = 0.0;
  double metatopic_coverage = 0.0;
};

/// Writes tagged_shares.csv, metatopic_matrix.csv and topic_summary.json.
TopicsResult run_topics(const TopicsParams& params);

struct DensityParams {
  fs::path align_dir;
  fs::path shares_dir;  // topics output, or map output without topic tags
  fs::path out_dir;
  std::size_t nx = 200;
  std::size_t ny = 200;
  std::optional<Eigen::Vector2d> bandwidth;
  Estimator estimator = Estimator::Kde;
  std::vector<std::string> outlets;     // empty: most shared
  std::size_t max_outlets = 4;
  std::vector<std::string> metatopics;  // empty: two most frequent
  std::optional<int> topic;             // empty: most frequent main topic
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct DensityResult {
  std::vector<std::string> grids;  // base names written
  std::vector<std::string> figures;
};

/// Writes user, outlet, story-mean, outlet-by-metatopic and
/// topic-versus-metatopic grids (CSV + JSON) and SVG figures.
DensityResult run_density(const DensityParams& params);

struct SynthParams {
  WorldConfig world;
  fs::path out_dir;
};

WorldSummary run_synth(const SynthParams& params);

/// Runs every stage on a directory produced by run_synth.
struct FullRunParams {
  fs::path world_dir;
  fs::path out_dir;
  Eigen::Index n_dims = 3;
  std::size_t min_follow = 3;
  kernels::Exec exec = kernels::Exec::Parallel;
  std::uint64_t seed = 42;
};
void run_all(const FullRunParams& params);

/// `id,dim1,..,dimn` files.
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_coordinates(const fs::path& path);
void write_coordinates(const fs::path& path, const std::vector<std::string>& ids,
                       const Eigen::MatrixXd& coords, const std::vector<std::string>& header);

/// File-system safe name for an outlet or label.
std::string slug(std::string_view name);

}  // namespace carto::pipeline
