#include "carto/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

std::string list_some(const std::vector<std::string>& names) {
  constexpr std::size_t kShown = 20;
  std::vector<std::string> head(names.begin(),
                                names.begin() + std::min(kShown, names.size()));
  auto text = fmt::format("{}", fmt::join(head, ", "));
  if (names.size() > kShown) {
    text += fmt::format(" (+{} more)", names.size() - kShown);
  }
  return text;
}

}  // namespace

BipartiteFollowGraph::BipartiteFollowGraph(std::vector<std::string> users,
                                           std::vector<std::string> items,
                                           CsrPattern adjacency)
    : users_(std::move(users)), items_(std::move(items)), adj_(std::move(adjacency)) {
  user_lookup_.reserve(users_.size());
  for (std::size_t i = 0; i < users_.size(); ++i) {
    if (!user_lookup_.emplace(users_[i], i).second) {
      throw Error(ErrorCode::Validation, "duplicate user id " + users_[i]);
    }
  }
  for (std::size_t j = 0; j < items_.size(); ++j) {
    if (!item_lookup_.emplace(items_[j], j).second) {
      throw Error(ErrorCode::Validation, "duplicate item id " + items_[j]);
    }
  }
  if (adj_.n_rows != users_.size() || adj_.n_cols != items_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "adjacency shape does not match the node sets");
  }
}

std::optional<std::size_t> BipartiteFollowGraph::user_index(
    const std::string& id) const {
  const auto it = user_lookup_.find(id);
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> BipartiteFollowGraph::item_index(
    const std::string& id) const {
  const auto it = item_lookup_.find(id);
  if (it == item_lookup_.end()) return std::nullopt;
  return it->second;
}

PoliticianMeta::PoliticianMeta(std::vector<PoliticianRecord> records)
    : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!lookup_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::Validation,
                  "duplicate metadata record for item " + records_[i].id);
    }
  }
}

const PoliticianRecord* PoliticianMeta::find(const std::string& id) const {
  const auto it = lookup_.find(id);
  return it == lookup_.end() ? nullptr : &records_[it->second];
}

const PoliticianRecord& PoliticianMeta::at(const std::string& id) const {
  const auto* rec = find(id);
  if (rec == nullptr) {
    throw Error(ErrorCode::Validation, "no metadata for item " + id);
  }
  return *rec;
}

std::vector<std::string> PoliticianMeta::parties() const {
  std::set<std::string> s;
  for (const auto& r : records_) s.insert(r.party);
  return {s.begin(), s.end()};
}

void PartyScoreTable::add(const std::string& party, const IssueInfo& issue,
                          double score) {
  if (!(issue.scale_min < issue.scale_max)) {
    throw Error(ErrorCode::Validation,
                fmt::format("issue {}: scale_min must be below scale_max",
                            issue.name));
  }
  const auto [it, inserted] = issues_.emplace(issue.name, issue);
  if (!inserted && (it->second.scale_min != issue.scale_min ||
                    it->second.scale_max != issue.scale_max)) {
    throw Error(ErrorCode::Validation,
                fmt::format("issue {} declared with two different scales",
                            issue.name));
  }
  if (score < issue.scale_min || score > issue.scale_max) {
    throw Error(ErrorCode::Validation,
                fmt::format("score {} for ({}, {}) outside [{}, {}]", score,
                            party, issue.name, issue.scale_min,
                            issue.scale_max));
  }
  if (!scores_.emplace(std::pair{issue.name, party}, score).second) {
    throw Error(ErrorCode::Validation,
                fmt::format("duplicate score for ({}, {})", party, issue.name));
  }
}

bool PartyScoreTable::has_issue(const std::string& issue) const {
  return issues_.contains(issue);
}

std::vector<std::string> PartyScoreTable::issues() const {
  std::vector<std::string> out;
  for (const auto& [name, info] : issues_) out.push_back(name);
  return out;
}

const IssueInfo& PartyScoreTable::issue(const std::string& name) const {
  const auto it = issues_.find(name);
  if (it == issues_.end()) {
    throw Error(ErrorCode::Validation, "unknown issue " + name);
  }
  return it->second;
}

std::map<std::string, double> PartyScoreTable::scores(
    const std::string& issue) const {
  std::map<std::string, double> out;
  for (auto it = scores_.lower_bound({issue, std::string()});
       it != scores_.end() && it->first.first == issue; ++it) {
    out.emplace(it->first.second, it->second);
  }
  return out;
}

PoliticianMeta load_meta(const std::filesystem::path& meta_file,
                         const LoadOptions& options) {
  io::CsvReader reader(meta_file);
  std::vector<std::string> f;
  std::vector<PoliticianRecord> records;
  bool first = true;
  while (reader.next(f)) {
    if (first && f.size() >= 1 && f[0] == "item_id") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected item_id,party,follower_count",
                              meta_file.string(), reader.line_number()));
    }
    const auto count = io::parse_integer(f[2], meta_file, reader.line_number());
    if (count < 0) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: follower_count must be nonnegative",
                              meta_file.string(), reader.line_number()));
    }
    records.push_back({f[0], f[1], static_cast<std::uint64_t>(count)});
  }
  if (options.declared_parties) {
    const std::set<std::string> allowed(options.declared_parties->begin(),
                                        options.declared_parties->end());
    std::vector<std::string> bad;
    for (const auto& r : records) {
      if (!allowed.contains(r.party)) bad.push_back(r.id + ":" + r.party);
    }
    if (!bad.empty()) {
      throw Error(ErrorCode::Validation,
                  "party labels outside the declared set: " + list_some(bad));
    }
  }
  return PoliticianMeta(std::move(records));
}

LoadedGraph load_graph(const std::filesystem::path& edge_file,
                       const std::filesystem::path& meta_file,
                       const LoadOptions& options) {
  LoadedGraph out;
  out.meta = load_meta(meta_file, options);

  std::vector<std::string> items;
  std::unordered_map<std::string, std::uint32_t> item_index;
  for (const auto& r : out.meta.records()) {
    item_index.emplace(r.id, static_cast<std::uint32_t>(items.size()));
    items.push_back(r.id);
  }

  std::ifstream in(edge_file);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + edge_file.string());

  std::vector<std::string> users;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::set<std::string> unknown;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected user_id<TAB>item_id",
                              edge_file.string(), line_no));
    }
    auto user = io::trim(std::string_view(line).substr(0, tab));
    auto item = io::trim(std::string_view(line).substr(tab + 1));
    if (user.empty() || item.empty()) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: empty identifier",
                                                edge_file.string(), line_no));
    }
    ++out.report.edge_lines;
    const auto it = item_index.find(item);
    if (it == item_index.end()) {
      unknown.insert(item);
      ++out.report.dropped_edges;
      continue;
    }
    auto [uit, inserted] =
        user_index.emplace(user, static_cast<std::uint32_t>(users.size()));
    if (inserted) users.push_back(std::move(user));
    pairs.emplace_back(uit->second, it->second);
  }

  if (!unknown.empty()) {
    std::vector<std::string> names(unknown.begin(), unknown.end());
    if (options.strict) {
      throw Error(ErrorCode::Validation,
                  "edges reference items without metadata: " + list_some(names));
    }
    spdlog::warn("dropped {} edges to {} items without metadata",
                 out.report.dropped_edges, names.size());
    out.report.unknown_items = std::move(names);
  }

  const std::size_t raw = pairs.size();
  auto adjacency = CsrPattern::from_pairs(users.size(), items.size(),
                                          std::move(pairs));
  out.report.duplicate_edges = raw - adjacency.nnz();

  const auto col_deg = adjacency.column_degrees();
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (col_deg[j] == 0) out.report.items_without_edges.push_back(items[j]);
  }
  if (!out.report.items_without_edges.empty()) {
    spdlog::warn("{} items have no followers in the edge file",
                 out.report.items_without_edges.size());
  }
  out.graph = BipartiteFollowGraph(std::move(users), std::move(items),
                                   std::move(adjacency));
  return out;
}

PartyScoreTable load_party_scores(const std::filesystem::path& path,
                                  const std::string& x_issue) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  PartyScoreTable table;
  bool first = true;
  while (reader.next(f)) {
    if (first && !f.empty() && f[0] == "party") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 5) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected party,issue,score,scale_min,scale_max",
                              path.string(), reader.line_number()));
    }
    const auto line = reader.line_number();
    IssueInfo info{f[1], io::parse_double(f[3], path, line),
                   io::parse_double(f[4], path, line)};
    table.add(f[0], info, io::parse_double(f[2], path, line));
  }
  if (!table.has_issue(x_issue)) {
    throw Error(ErrorCode::Validation,
                fmt::format("{}: x-axis issue '{}' missing", path.string(),
                            x_issue));
  }
  return table;
}

BipartiteFollowGraph filter_min_degree(const BipartiteFollowGraph& graph,
                                       std::size_t min_follow) {
  if (min_follow < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_follow must be at least 1");
  }
  const auto& adj = graph.adjacency();
  CsrPattern kept;
  kept.n_cols = adj.n_cols;
  std::vector<std::string> users;
  for (std::size_t r = 0; r < adj.n_rows; ++r) {
    if (adj.row_degree(r) < min_follow) continue;
    users.push_back(graph.users()[r]);
    const auto row = adj.row(r);
    kept.col.insert(kept.col.end(), row.begin(), row.end());
    kept.row_ptr.push_back(kept.col.size());
  }
  kept.n_rows = users.size();
  return BipartiteFollowGraph(std::move(users), graph.items(), std::move(kept));
}

void write_index_maps(const BipartiteFollowGraph& graph,
                      const std::filesystem::path& dir) {
  auto users = io::open_output(dir / "users_index.csv");
  users << "index,user_id\n";
  for (std::size_t i = 0; i < graph.n_users(); ++i) {
    users << i << ',' << io::csv_field(graph.users()[i]) << '\n';
  }
  auto items = io::open_output(dir / "items_index.csv");
  items << "index,item_id\n";
  for (std::size_t j = 0; j < graph.n_items(); ++j) {
    items << j << ',' << io::csv_field(graph.items()[j]) << '\n';
  }
}

}  // namespace carto
