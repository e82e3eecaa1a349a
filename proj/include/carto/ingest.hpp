#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "carto/sparse.hpp"

namespace carto {

/// Users (rows) following politicians (columns). Identifiers are opaque
/// strings; rows and columns are addressed by their consecutive index.
class BipartiteFollowGraph {
 public:
  BipartiteFollowGraph() = default;
  BipartiteFollowGraph(std::vector<std::string> users,
                       std::vector<std::string> items, CsrPattern adjacency);

  const std::vector<std::string>& users() const noexcept { return users_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const CsrPattern& adjacency() const noexcept { return adj_; }

  std::size_t n_users() const noexcept { return users_.size(); }
  std::size_t n_items() const noexcept { return items_.size(); }
  std::size_t n_edges() const noexcept { return adj_.nnz(); }
  std::size_t degree(std::size_t user) const noexcept {
    return adj_.row_degree(user);
  }

  std::optional<std::size_t> user_index(const std::string& id) const;
  std::optional<std::size_t> item_index(const std::string& id) const;

 private:
  std::vector<std::string> users_;
  std::vector<std::string> items_;
  CsrPattern adj_;
  std::unordered_map<std::string, std::size_t> user_lookup_;
  std::unordered_map<std::string, std::size_t> item_lookup_;
};

struct PoliticianRecord {
  std::string id;
  std::string party;
  std::uint64_t follower_count = 0;
};

/// One record per politician, in file order.
class PoliticianMeta {
 public:
  PoliticianMeta() = default;
  explicit PoliticianMeta(std::vector<PoliticianRecord> records);

  const std::vector<PoliticianRecord>& records() const noexcept {
    return records_;
  }
  const PoliticianRecord* find(const std::string& id) const;
  const PoliticianRecord& at(const std::string& id) const;
  /// Sorted distinct party labels.
  std::vector<std::string> parties() const;

 private:
  std::vector<PoliticianRecord> records_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

struct IssueInfo {
  std::string name;
  double scale_min = 0.0;
  double scale_max = 10.0;
};

/// Expert-survey positions of parties on issue scales.
class PartyScoreTable {
 public:
  void add(const std::string& party, const IssueInfo& issue, double score);

  bool has_issue(const std::string& issue) const;
  std::vector<std::string> issues() const;
  const IssueInfo& issue(const std::string& name) const;
  /// party -> score for one issue.
  std::map<std::string, double> scores(const std::string& issue) const;

 private:
  std::map<std::string, IssueInfo> issues_;
  std::map<std::pair<std::string, std::string>, double> scores_;  // (issue, party)
};

struct LoadOptions {
  /// Unknown item in the edge file is an error when true; dropped otherwise.
  bool strict = true;
  /// When set, every party label must come from this list.
  std::optional<std::vector<std::string>> declared_parties;
};

struct LoadReport {
  std::size_t edge_lines = 0;
  std::size_t duplicate_edges = 0;
  std::vector<std::string> unknown_items;  // only populated when not strict
  std::size_t dropped_edges = 0;
  std::vector<std::string> items_without_edges;
};

struct LoadedGraph {
  BipartiteFollowGraph graph;
  PoliticianMeta meta;
  LoadReport report;
};

PoliticianMeta load_meta(const std::filesystem::path& meta_file,
                         const LoadOptions& options = {});

/// Reads `user_id<TAB>item_id` edges and the `item_id,party,follower_count`
/// table. Columns follow the metadata order; users follow first appearance.
LoadedGraph load_graph(const std::filesystem::path& edge_file,
                       const std::filesystem::path& meta_file,
                       const LoadOptions& options = {});

/// Reads `party,issue,score,scale_min,scale_max`. The x-axis issue must be
/// present.
PartyScoreTable load_party_scores(const std::filesystem::path& path,
                                  const std::string& x_issue);

/// Keeps the users that follow at least `min_follow` items. Items are kept
/// even when they end up without followers.
BipartiteFollowGraph filter_min_degree(const BipartiteFollowGraph& graph,
                                       std::size_t min_follow);

void write_index_maps(const BipartiteFollowGraph& graph,
                      const std::filesystem::path& dir);

}  // namespace carto
