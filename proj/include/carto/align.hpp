#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carto/ingest.hpp"

namespace carto {

using ScoreMap = std::map<std::string, double>;
using PartyPositions = std::map<std::string, Eigen::Vector2d>;

/// A parliamentary group made of several survey parties (e.g. a joint
/// faction whose members are scored separately).
struct PartyUnion {
  std::string name;
  std::vector<std::string> members;
};

/// How item party labels are grouped for party means. Members of a union
/// are pooled under the union name unless the union is listed in `split`.
struct PartyGrouping {
  std::vector<PartyUnion> unions;
  std::vector<std::string> split;

  std::string group_of(const std::string& party) const;
};

/// Items and users placed in a two-dimensional plane, rows aligned with the
/// id vectors.
struct PlanarEmbedding {
  std::vector<std::string> user_ids;
  Eigen::MatrixX2d user_coords;
  std::vector<std::string> item_ids;
  Eigen::MatrixX2d item_coords;
};

Eigen::Vector2d rotate(const Eigen::Vector2d& p, double angle_deg);
Eigen::MatrixX2d rotate(const Eigen::MatrixX2d& points, double angle_deg);

/// Arithmetic mean of member item coordinates per party group.
PartyPositions party_positions(const std::vector<std::string>& item_ids,
                               const Eigen::MatrixX2d& item_coords,
                               const PoliticianMeta& meta,
                               const PartyGrouping& grouping = {});

struct RotationRecord {
  double angle_deg = 0.0;
  double pearson_x = 0.0;
  double pearson_y = 0.0;
  double sum = 0.0;
};

struct RotationScan {
  std::string issue;
  std::vector<std::string> parties;  // parties entering the correlations
  std::vector<RotationRecord> records;  // grid angles
  std::optional<RotationRecord> refined;
  double best_angle_deg = 0.0;
  double best_sum = 0.0;
  double best_pearson_x = 0.0;
  double best_pearson_y = 0.0;
};

struct ScanOptions {
  double step_deg = 1.0;
  bool refine = true;
};

/// Signed Pearson correlations of rotated party x (y) coordinates with the
/// x (y) scores at one angle. Uses parties common to all three inputs.
RotationRecord evaluate_rotation(const PartyPositions& positions,
                                 const ScoreMap& x_scores,
                                 const ScoreMap& y_scores, double angle_deg,
                                 const std::string& issue = "");

/// Rotates the party means through [0, 360) and records the correlation sum
/// at every step; optionally refines the grid maximum by golden-section
/// search within one step.
RotationScan rotation_scan(const PartyPositions& positions,
                           const ScoreMap& x_scores, const ScoreMap& y_scores,
                           const std::string& issue,
                           const ScanOptions& options = {});

/// Reflection y -> -y.
PartyPositions mirror_y(const PartyPositions& positions);
PlanarEmbedding mirror_y(const PlanarEmbedding& embedding);

/// Rotations cannot undo a reflection, so the scan is run on the party
/// means as given and on their mirror image; the handedness with the larger
/// best correlation sum over all issues wins (ties keep the input).
struct HandedScans {
  bool mirrored = false;
  double best_as_is = 0.0;
  double best_mirrored = 0.0;
  std::vector<RotationScan> scans;  // for the chosen handedness, input order
};
HandedScans scan_issues(const PartyPositions& positions, const ScoreMap& x_scores,
                        const std::vector<std::pair<std::string, ScoreMap>>& y_issues,
                        const ScanOptions& options = {});

struct IssueSelection {
  std::vector<std::string> issues;
  std::vector<double> angles_deg;
  std::vector<std::string> below_cutoff;
  std::vector<std::string> outside_window;
  bool fallback = false;
  std::vector<std::string> warnings;
};

/// Issues whose best y-correlation reaches `cutoff` and whose best angles
/// fit into an arc of `window_deg`.
IssueSelection select_issues(const std::vector<RotationScan>& scans,
                             double cutoff = 0.8, double window_deg = 30.0);

/// Circular mean in [0, 360).
double combined_rotation(const std::vector<double>& angles_deg);

/// Signed smallest difference a - b in (-180, 180].
double angle_difference(double a_deg, double b_deg);

struct PoliticalSpace {
  std::vector<std::string> user_ids;
  Eigen::MatrixX2d user_coords;
  std::vector<std::string> item_ids;
  Eigen::MatrixX2d item_coords;
  double rotation_deg = 0.0;
  bool mirrored = false;
  Eigen::Vector2d center_offset = Eigen::Vector2d::Zero();
  std::string x_label;
  std::string y_label;
  /// Party-level correlations after all transforms.
  double x_correlation = 0.0;
  double y_correlation = 0.0;
  PartyPositions party_positions;
};

/// Rotates by `rotation_deg`, mirrors at y = 0 if the party y coordinates
/// correlate negatively with `orient_scores`, then subtracts the mean user
/// position.
PoliticalSpace finalize_space(const PlanarEmbedding& embedding,
                              const PoliticianMeta& meta, double rotation_deg,
                              const ScoreMap& x_scores,
                              const ScoreMap& orient_scores,
                              const PartyGrouping& grouping = {},
                              std::string x_label = "x",
                              std::string y_label = "y");

/// Mean of per-issue z-scored scores over the given issues, per party
/// present in all of them.
ScoreMap combined_scores(const std::vector<ScoreMap>& per_issue);

}  // namespace carto
