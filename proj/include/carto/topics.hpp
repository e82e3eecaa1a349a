#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "carto/shares.hpp"

namespace carto {

struct TopicEntry {
  int topic = 0;  // topic ids start at 1
  double prob = 0.0;
};

/// Sparse document-topic probabilities, one row per document. Entries within
/// a row are sorted by topic id.
class DocTopicMatrix {
 public:
  struct Triple {
    std::string doc_id;
    int topic = 0;
    double prob = 0.0;
  };

  DocTopicMatrix() = default;

  /// Documents keep the order of first appearance. Zero probabilities are
  /// dropped. Throws on duplicate (doc, topic) pairs, entries outside [0,1]
  /// or row totals above 1 + 1e-6.
  static DocTopicMatrix from_triples(std::span<const Triple> triples);

  std::size_t n_docs() const noexcept { return doc_ids_.size(); }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  std::span<const TopicEntry> row(std::size_t i) const;
  double row_total(std::size_t i) const;
  std::optional<std::size_t> doc_index(const std::string& id) const;
  std::size_t nnz() const noexcept { return entries_.size(); }
  /// Sorted distinct topic ids with at least one nonzero entry.
  std::vector<int> topic_ids() const;

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<TopicEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

class MetatopicMap {
 public:
  MetatopicMap() = default;
  explicit MetatopicMap(std::map<int, std::string> topic_to_label);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> label_of(int topic) const;
  const std::map<int, std::string>& mapping() const noexcept { return map_; }

 private:
  std::map<int, std::string> map_;
  std::vector<std::string> labels_;  // sorted
  std::unordered_map<int, std::size_t> topic_label_;
};

struct MetatopicEntry {
  std::size_t label = 0;  // index into labels
  double prob = 0.0;
};

struct MetatopicMatrix {
  std::vector<std::string> doc_ids;
  std::vector<std::string> labels;
  std::vector<std::size_t> row_ptr{0};
  std::vector<MetatopicEntry> entries;

  std::size_t n_docs() const noexcept { return doc_ids.size(); }
  std::span<const MetatopicEntry> row(std::size_t i) const;
  double row_total(std::size_t i) const;
};

/// Sums topic columns into their metatopics. Throws Validation listing
/// topics the map does not cover.
MetatopicMatrix metatopic_matrix(const DocTopicMatrix& m, const MetatopicMap& map);

inline constexpr double kMainTopicThreshold = 0.5;

/// Argmax topic when its probability is strictly above `threshold`; ties go
/// to the lowest topic id.
std::optional<int> main_topic(std::span<const TopicEntry> row,
                              double threshold = kMainTopicThreshold);
std::optional<std::size_t> main_metatopic(std::span<const MetatopicEntry> row,
                                          double threshold = kMainTopicThreshold);

/// Fraction of documents that receive a main assignment. Empty rows count
/// as unassigned.
double assignment_coverage(const DocTopicMatrix& m, double threshold);
double assignment_coverage(const MetatopicMatrix& m, double threshold);

DocTopicMatrix load_doc_topics(const std::filesystem::path& path);
MetatopicMap load_metatopic_map(const std::filesystem::path& path);

/// story_id -> doc_id. Throws Validation when a story maps to two documents
/// or a document is claimed by two stories.
std::unordered_map<std::string, std::string> load_story_doc_links(
    const std::filesystem::path& path);
std::unordered_map<std::string, std::string> make_story_doc_links(
    std::span<const std::pair<std::string, std::string>> pairs);

struct TaggedShare {
  PositionedShare share;
  std::optional<std::string> doc_id;
  std::optional<int> main_topic;
  std::optional<std::string> main_metatopic;
};

struct TaggingReport {
  std::size_t shares = 0;
  std::size_t with_document = 0;
  std::size_t with_topic = 0;
  std::size_t with_metatopic = 0;
  std::size_t missing_documents = 0;  // linked doc absent from the matrix
};

std::vector<TaggedShare> tag_shares(
    const std::vector<PositionedShare>& shares,
    const std::unordered_map<std::string, std::string>& story_docs,
    const DocTopicMatrix& m, const MetatopicMatrix& mt,
    double threshold = kMainTopicThreshold, TaggingReport* report = nullptr);

struct ShareFilter {
  std::optional<std::string> outlet;
  std::optional<std::string> metatopic;
  std::optional<int> topic;
};

std::vector<Eigen::Vector2d> filter_positions(const std::vector<TaggedShare>& shares,
                                              const ShareFilter& filter);

void write_tagged_shares(const std::vector<TaggedShare>& shares,
                         const std::filesystem::path& path);
std::vector<TaggedShare> read_tagged_shares(const std::filesystem::path& path);

}  // namespace carto
