#include "carto/topics.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

constexpr double kRowSumTolerance = 1e-6;

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("threshold {} outside [0, 1]", threshold));
  }
}

template <typename Entry, typename Key>
std::optional<Key> argmax_above(std::span<const Entry> row, double threshold,
                                Key Entry::*key) {
  const Entry* best = nullptr;
  for (const auto& e : row) {
    // Rows are sorted by key, so strict '>' keeps the lowest key on ties.
    if (best == nullptr || e.prob > best->prob) best = &e;
  }
  if (best == nullptr || !(best->prob > threshold)) return std::nullopt;
  return best->*key;
}

std::string join_limited(const std::vector<int>& ids) {
  constexpr std::size_t kShown = 20;
  std::vector<int> head(ids.begin(), ids.begin() + std::min(ids.size(), kShown));
  std::string s = fmt::format("{}", fmt::join(head, ", "));
  if (ids.size() > kShown) s += fmt::format(" (+{} more)", ids.size() - kShown);
  return s;
}

}  // namespace

DocTopicMatrix DocTopicMatrix::from_triples(std::span<const Triple> triples) {
  DocTopicMatrix m;
  std::vector<std::vector<TopicEntry>> rows;
  for (const auto& t : triples) {
    if (t.topic < 1) {
      throw Error(ErrorCode::Validation,
                  fmt::format("document '{}': topic id {} must be >= 1", t.doc_id, t.topic));
    }
    if (!(t.prob >= 0.0 && t.prob <= 1.0)) {
      throw Error(ErrorCode::Validation,
                  fmt::format("document '{}', topic {}: probability {} outside [0, 1]",
                              t.doc_id, t.topic, t.prob));
    }
    auto [it, inserted] = m.index_.try_emplace(t.doc_id, m.doc_ids_.size());
    if (inserted) {
      m.doc_ids_.push_back(t.doc_id);
      rows.emplace_back();
    }
    rows[it->second].push_back({t.topic, t.prob});
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end(),
              [](const TopicEntry& a, const TopicEntry& b) { return a.topic < b.topic; });
    double total = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k > 0 && r[k].topic == r[k - 1].topic) {
        throw Error(ErrorCode::Validation,
                    fmt::format("document '{}': duplicate topic {}", m.doc_ids_[i], r[k].topic));
      }
      total += r[k].prob;
    }
    if (total > 1.0 + kRowSumTolerance) {
      throw Error(ErrorCode::Validation,
                  fmt::format("document '{}': topic probabilities sum to {}",
                              m.doc_ids_[i], total));
    }
    if (total > 1.0) {
      spdlog::debug("document '{}': row total {} exceeds 1 within tolerance",
                    m.doc_ids_[i], total);
    }
    for (const auto& e : r) {
      if (e.prob > 0.0) m.entries_.push_back(e);
    }
    m.row_ptr_.push_back(m.entries_.size());
  }
  return m;
}

std::span<const TopicEntry> DocTopicMatrix::row(std::size_t i) const {
  return {entries_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

double DocTopicMatrix::row_total(std::size_t i) const {
  double s = 0.0;
  for (const auto& e : row(i)) s += e.prob;
  return s;
}

std::optional<std::size_t> DocTopicMatrix::doc_index(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> DocTopicMatrix::topic_ids() const {
  std::set<int> ids;
  for (const auto& e : entries_) ids.insert(e.topic);
  return {ids.begin(), ids.end()};
}

MetatopicMap::MetatopicMap(std::map<int, std::string> topic_to_label)
    : map_(std::move(topic_to_label)) {
  std::set<std::string> labels;
  for (const auto& [topic, label] : map_) {
    if (label.empty()) {
      throw Error(ErrorCode::Validation, fmt::format("topic {} has an empty metatopic", topic));
    }
    labels.insert(label);
  }
  labels_.assign(labels.begin(), labels.end());
  for (const auto& [topic, label] : map_) {
    const auto pos = std::lower_bound(labels_.begin(), labels_.end(), label);
    topic_label_.emplace(topic, static_cast<std::size_t>(pos - labels_.begin()));
  }
}

std::optional<std::size_t> MetatopicMap::label_of(int topic) const {
  const auto it = topic_label_.find(topic);
  if (it == topic_label_.end()) return std::nullopt;
  return it->second;
}

std::span<const MetatopicEntry> MetatopicMatrix::row(std::size_t i) const {
  return {entries.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
}

double MetatopicMatrix::row_total(std::size_t i) const {
  double s = 0.0;
  for (const auto& e : row(i)) s += e.prob;
  return s;
}

MetatopicMatrix metatopic_matrix(const DocTopicMatrix& m, const MetatopicMap& map) {
  std::vector<int> unmapped;
  for (int t : m.topic_ids()) {
    if (!map.label_of(t)) unmapped.push_back(t);
  }
  if (!unmapped.empty()) {
    throw Error(ErrorCode::Validation,
                fmt::format("{} topic(s) without a metatopic: {}", unmapped.size(),
                            join_limited(unmapped)));
  }
  MetatopicMatrix out;
  out.doc_ids = m.doc_ids();
  out.labels = map.labels();
  out.row_ptr.reserve(m.n_docs() + 1);
  std::vector<double> acc(out.labels.size(), 0.0);
  std::vector<char> touched(out.labels.size(), 0);
  for (std::size_t i = 0; i < m.n_docs(); ++i) {
    for (const auto& e : m.row(i)) {
      const auto l = *map.label_of(e.topic);
      acc[l] += e.prob;
      touched[l] = 1;
    }
    for (std::size_t l = 0; l < acc.size(); ++l) {
      if (touched[l]) {
        out.entries.push_back({l, acc[l]});
        acc[l] = 0.0;
        touched[l] = 0;
      }
    }
    out.row_ptr.push_back(out.entries.size());
  }
  return out;
}

std::optional<int> main_topic(std::span<const TopicEntry> row, double threshold) {
  check_threshold(threshold);
  return argmax_above(row, threshold, &TopicEntry::topic);
}

std::optional<std::size_t> main_metatopic(std::span<const MetatopicEntry> row,
                                          double threshold) {
  check_threshold(threshold);
  return argmax_above(row, threshold, &MetatopicEntry::label);
}

double assignment_coverage(const DocTopicMatrix& m, double threshold) {
  if (m.n_docs() == 0) return 0.0;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m.n_docs(); ++i) {
    if (main_topic(m.row(i), threshold)) ++assigned;
  }
  return static_cast<double>(assigned) / static_cast<double>(m.n_docs());
}

double assignment_coverage(const MetatopicMatrix& m, double threshold) {
  if (m.n_docs() == 0) return 0.0;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m.n_docs(); ++i) {
    if (main_metatopic(m.row(i), threshold)) ++assigned;
  }
  return static_cast<double>(assigned) / static_cast<double>(m.n_docs());
}

DocTopicMatrix load_doc_topics(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<DocTopicMatrix::Triple> triples;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "doc_id") continue;
    }
    const auto line = reader.line_number();
    if (f.size() != 3) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected doc_id,topic_id,prob", path.string(), line));
    }
    triples.push_back({f[0], static_cast<int>(io::parse_integer(f[1], path, line)),
                       io::parse_double(f[2], path, line)});
  }
  return DocTopicMatrix::from_triples(triples);
}

MetatopicMap load_metatopic_map(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::map<int, std::string> map;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "topic_id") continue;
    }
    const auto line = reader.line_number();
    if (f.size() != 2) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected topic_id,metatopic", path.string(), line));
    }
    const int topic = static_cast<int>(io::parse_integer(f[0], path, line));
    if (!map.emplace(topic, f[1]).second) {
      throw Error(ErrorCode::Validation,
                  fmt::format("{}:{}: topic {} listed twice", path.string(), line, topic));
    }
  }
  return MetatopicMap(std::move(map));
}

std::unordered_map<std::string, std::string> make_story_doc_links(
    std::span<const std::pair<std::string, std::string>> pairs) {
  std::unordered_map<std::string, std::string> story_doc;
  std::unordered_map<std::string, std::string> doc_story;
  for (const auto& [story, doc] : pairs) {
    const auto [s, s_new] = story_doc.emplace(story, doc);
    if (!s_new && s->second != doc) {
      throw Error(ErrorCode::Validation,
                  fmt::format("story '{}' linked to documents '{}' and '{}'", story,
                              s->second, doc));
    }
    const auto [d, d_new] = doc_story.emplace(doc, story);
    if (!d_new && d->second != story) {
      throw Error(ErrorCode::Validation,
                  fmt::format("document '{}' linked to stories '{}' and '{}'", doc,
                              d->second, story));
    }
  }
  return story_doc;
}

std::unordered_map<std::string, std::string> load_story_doc_links(
    const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<std::pair<std::string, std::string>> pairs;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "story_id") continue;
    }
    if (f.size() != 2) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected story_id,doc_id",
                                                path.string(), reader.line_number()));
    }
    pairs.emplace_back(f[0], f[1]);
  }
  return make_story_doc_links(pairs);
}

std::vector<TaggedShare> tag_shares(
    const std::vector<PositionedShare>& shares,
    const std::unordered_map<std::string, std::string>& story_docs,
    const DocTopicMatrix& m, const MetatopicMatrix& mt, double threshold,
    TaggingReport* report) {
  check_threshold(threshold);
  if (mt.doc_ids != m.doc_ids()) {
    throw Error(ErrorCode::InvalidArgument,
                "metatopic matrix does not belong to the topic matrix");
  }
  TaggingReport rep;
  std::vector<TaggedShare> out;
  out.reserve(shares.size());
  for (const auto& s : shares) {
    TaggedShare t{s, std::nullopt, std::nullopt, std::nullopt};
    ++rep.shares;
    if (const auto link = story_docs.find(s.story_id); link != story_docs.end()) {
      t.doc_id = link->second;
      ++rep.with_document;
      if (const auto di = m.doc_index(link->second)) {
        t.main_topic = main_topic(m.row(*di), threshold);
        if (const auto l = main_metatopic(mt.row(*di), threshold)) {
          t.main_metatopic = mt.labels[*l];
        }
      } else {
        ++rep.missing_documents;
      }
    }
    if (t.main_topic) ++rep.with_topic;
    if (t.main_metatopic) ++rep.with_metatopic;
    out.push_back(std::move(t));
  }
  if (rep.missing_documents > 0) {
    spdlog::warn("{} share(s) link to documents missing from the topic matrix",
                 rep.missing_documents);
  }
  if (report) *report = rep;
  return out;
}

std::vector<Eigen::Vector2d> filter_positions(const std::vector<TaggedShare>& shares,
                                              const ShareFilter& filter) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& t : shares) {
    if (filter.outlet && t.share.outlet != *filter.outlet) continue;
    if (filter.metatopic && t.main_metatopic != filter.metatopic) continue;
    if (filter.topic && t.main_topic != filter.topic) continue;
    out.push_back(t.share.position);
  }
  return out;
}

void write_tagged_shares(const std::vector<TaggedShare>& shares,
                         const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "tweet_id,user_id,outlet,story_id,x,y,doc_id,main_topic,main_metatopic\n";
  for (const auto& t : shares) {
    const auto& s = t.share;
    out << io::csv_field(s.event.tweet_id) << ',' << io::csv_field(s.event.user_id) << ','
        << io::csv_field(s.outlet) << ',' << io::csv_field(s.story_id) << ','
        << io::format_double(s.position.x()) << ',' << io::format_double(s.position.y())
        << ',' << io::csv_field(t.doc_id.value_or("")) << ','
        << (t.main_topic ? std::to_string(*t.main_topic) : std::string()) << ','
        << io::csv_field(t.main_metatopic.value_or("")) << '\n';
  }
}

std::vector<TaggedShare> read_tagged_shares(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<TaggedShare> out;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "tweet_id") continue;
    }
    const auto line = reader.line_number();
    if (f.size() != 9) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}:{}: expected 9 fields", path.string(), line));
    }
    TaggedShare t;
    t.share.event.tweet_id = f[0];
    t.share.event.user_id = f[1];
    t.share.outlet = f[2];
    t.share.story_id = f[3];
    t.share.position = {io::parse_double(f[4], path, line),
                        io::parse_double(f[5], path, line)};
    if (!f[6].empty()) t.doc_id = f[6];
    if (!f[7].empty()) t.main_topic = static_cast<int>(io::parse_integer(f[7], path, line));
    if (!f[8].empty()) t.main_metatopic = f[8];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace carto
