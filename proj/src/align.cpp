#include "carto/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/stats.hpp"

namespace carto {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double wrap_degrees(double a) {
  double r = std::fmod(a, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

struct CommonParties {
  std::vector<std::string> names;
  std::vector<Eigen::Vector2d> points;
  std::vector<double> x_scores;
  std::vector<double> y_scores;
};

CommonParties common_parties(const PartyPositions& positions,
                             const ScoreMap& x_scores, const ScoreMap& y_scores) {
  CommonParties c;
  for (const auto& [party, point] : positions) {
    const auto xi = x_scores.find(party);
    const auto yi = y_scores.find(party);
    if (xi == x_scores.end() || yi == y_scores.end()) continue;
    c.names.push_back(party);
    c.points.push_back(point);
    c.x_scores.push_back(xi->second);
    c.y_scores.push_back(yi->second);
  }
  return c;
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

RotationRecord evaluate(const CommonParties& c, double angle_deg) {
  std::vector<double> xs, ys;
  xs.reserve(c.points.size());
  ys.reserve(c.points.size());
  for (const auto& p : c.points) {
    const auto q = rotate(p, angle_deg);
    xs.push_back(q.x());
    ys.push_back(q.y());
  }
  RotationRecord rec;
  rec.angle_deg = angle_deg;
  rec.pearson_x = stats::pearson(xs, c.x_scores);
  rec.pearson_y = stats::pearson(ys, c.y_scores);
  rec.sum = rec.pearson_x + rec.pearson_y;
  return rec;
}

void check_scan_inputs(const CommonParties& c, const std::string& issue) {
  if (c.names.size() < 3) {
    throw Error(ErrorCode::Scan,
                fmt::format("issue {}: only {} parties have both positions and "
                            "scores (need 3)", issue, c.names.size()));
  }
  if (is_constant(c.x_scores) || is_constant(c.y_scores)) {
    throw Error(ErrorCode::Scan,
                fmt::format("issue {}: constant score vector, correlation "
                            "undefined", issue));
  }
}

}  // namespace

std::string PartyGrouping::group_of(const std::string& party) const {
  for (const auto& u : unions) {
    if (std::find(u.members.begin(), u.members.end(), party) == u.members.end()) {
      continue;
    }
    if (std::find(split.begin(), split.end(), u.name) != split.end()) return party;
    return u.name;
  }
  return party;
}

Eigen::Vector2d rotate(const Eigen::Vector2d& p, double angle_deg) {
  const double c = std::cos(angle_deg * kDegToRad);
  const double s = std::sin(angle_deg * kDegToRad);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

Eigen::MatrixX2d rotate(const Eigen::MatrixX2d& points, double angle_deg) {
  const double c = std::cos(angle_deg * kDegToRad);
  const double s = std::sin(angle_deg * kDegToRad);
  Eigen::MatrixX2d out(points.rows(), 2);
  out.col(0) = c * points.col(0) - s * points.col(1);
  out.col(1) = s * points.col(0) + c * points.col(1);
  return out;
}

PartyPositions party_positions(const std::vector<std::string>& item_ids,
                               const Eigen::MatrixX2d& item_coords,
                               const PoliticianMeta& meta,
                               const PartyGrouping& grouping) {
  std::map<std::string, std::pair<Eigen::Vector2d, std::size_t>> acc;
  for (std::size_t j = 0; j < item_ids.size(); ++j) {
    const auto group = grouping.group_of(meta.at(item_ids[j]).party);
    auto& [sum, count] = acc.try_emplace(group, Eigen::Vector2d::Zero(), 0).first->second;
    sum += item_coords.row(static_cast<Eigen::Index>(j)).transpose();
    ++count;
  }
  PartyPositions out;
  for (const auto& [group, entry] : acc) {
    out.emplace(group, entry.first / static_cast<double>(entry.second));
  }
  return out;
}

RotationRecord evaluate_rotation(const PartyPositions& positions,
                                 const ScoreMap& x_scores,
                                 const ScoreMap& y_scores, double angle_deg,
                                 const std::string& issue) {
  const auto c = common_parties(positions, x_scores, y_scores);
  check_scan_inputs(c, issue);
  return evaluate(c, angle_deg);
}

RotationScan rotation_scan(const PartyPositions& positions,
                           const ScoreMap& x_scores, const ScoreMap& y_scores,
                           const std::string& issue, const ScanOptions& options) {
  const double steps = 360.0 / options.step_deg;
  if (!(options.step_deg > 0.0) || std::abs(steps - std::round(steps)) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("step {} does not divide 360", options.step_deg));
  }
  const auto c = common_parties(positions, x_scores, y_scores);
  check_scan_inputs(c, issue);
  for (const auto& [party, score] : y_scores) {
    if (!positions.contains(party)) {
      spdlog::warn("issue {}: party {} is scored but has no position; excluded",
                   issue, party);
    }
  }

  RotationScan scan;
  scan.issue = issue;
  scan.parties = c.names;
  const auto n = static_cast<long>(std::llround(steps));
  scan.records.reserve(static_cast<std::size_t>(n));
  std::size_t best = 0;
  for (long k = 0; k < n; ++k) {
    scan.records.push_back(evaluate(c, static_cast<double>(k) * options.step_deg));
    if (std::isnan(scan.records.back().sum)) {
      throw Error(ErrorCode::Scan,
                  fmt::format("issue {}: party coordinates are constant", issue));
    }
    if (scan.records.back().sum > scan.records[best].sum) best = scan.records.size() - 1;
  }
  RotationRecord chosen = scan.records[best];

  if (options.refine) {
    // Golden-section search for the maximum on [a - step, a + step].
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = chosen.angle_deg - options.step_deg;
    double hi = chosen.angle_deg + options.step_deg;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = evaluate(c, x1).sum;
    double f2 = evaluate(c, x2).sum;
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = evaluate(c, x2).sum;
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = evaluate(c, x1).sum;
      }
    }
    auto rec = evaluate(c, wrap_degrees(0.5 * (lo + hi)));
    if (rec.sum > chosen.sum) {
      scan.refined = rec;
      chosen = rec;
    }
  }
  scan.best_angle_deg = chosen.angle_deg;
  scan.best_sum = chosen.sum;
  scan.best_pearson_x = chosen.pearson_x;
  scan.best_pearson_y = chosen.pearson_y;
  return scan;
}

double angle_difference(double a_deg, double b_deg) {
  double d = std::fmod(a_deg - b_deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

PartyPositions mirror_y(const PartyPositions& positions) {
  PartyPositions out = positions;
  for (auto& [party, p] : out) p.y() = -p.y();
  return out;
}

PlanarEmbedding mirror_y(const PlanarEmbedding& embedding) {
  PlanarEmbedding out = embedding;
  out.user_coords.col(1) *= -1.0;
  out.item_coords.col(1) *= -1.0;
  return out;
}

HandedScans scan_issues(const PartyPositions& positions, const ScoreMap& x_scores,
                        const std::vector<std::pair<std::string, ScoreMap>>& y_issues,
                        const ScanOptions& options) {
  if (y_issues.empty()) throw Error(ErrorCode::InvalidArgument, "no issues to scan");
  const PartyPositions flipped = mirror_y(positions);
  std::vector<RotationScan> as_is, mirrored;
  HandedScans out;
  out.best_as_is = -INFINITY;
  out.best_mirrored = -INFINITY;
  for (const auto& [issue, scores] : y_issues) {
    as_is.push_back(rotation_scan(positions, x_scores, scores, issue, options));
    mirrored.push_back(rotation_scan(flipped, x_scores, scores, issue, options));
    out.best_as_is = std::max(out.best_as_is, as_is.back().best_sum);
    out.best_mirrored = std::max(out.best_mirrored, mirrored.back().best_sum);
  }
  out.mirrored = out.best_mirrored > out.best_as_is;
  out.scans = out.mirrored ? std::move(mirrored) : std::move(as_is);
  if (out.mirrored) {
    spdlog::info("party means are mirrored relative to the survey scores "
                 "(best sum {:.4f} vs {:.4f}); scanning the reflected plane",
                 out.best_mirrored, out.best_as_is);
  }
  return out;
}

IssueSelection select_issues(const std::vector<RotationScan>& scans,
                             double cutoff, double window_deg) {
  if (scans.empty()) {
    throw Error(ErrorCode::InvalidArgument, "select_issues: no scans given");
  }
  IssueSelection sel;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    if (scans[i].best_pearson_y >= cutoff) {
      candidates.push_back(i);
    } else {
      sel.below_cutoff.push_back(scans[i].issue);
    }
  }

  if (candidates.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scans.size(); ++i) {
      if (scans[i].best_sum > scans[best].best_sum) best = i;
    }
    sel.fallback = true;
    sel.issues.push_back(scans[best].issue);
    sel.angles_deg.push_back(scans[best].best_angle_deg);
    sel.warnings.push_back(fmt::format(
        "no issue reaches the correlation cutoff {}; falling back to the single "
        "best issue '{}' (y correlation {:.3f})",
        cutoff, scans[best].issue, scans[best].best_pearson_y));
    spdlog::warn(sel.warnings.back());
    return sel;
  }

  // Largest set of candidate angles inside one arc of width window_deg.
  std::vector<std::size_t> best_set;
  double best_total = -1e300;
  for (auto start : candidates) {
    std::vector<std::size_t> set;
    double total = 0.0;
    for (auto j : candidates) {
      const double ccw = wrap_degrees(scans[j].best_angle_deg - scans[start].best_angle_deg);
      if (ccw <= window_deg + 1e-12) {
        set.push_back(j);
        total += scans[j].best_sum;
      }
    }
    if (set.size() > best_set.size() ||
        (set.size() == best_set.size() && total > best_total)) {
      best_set = std::move(set);
      best_total = total;
    }
  }
  std::sort(best_set.begin(), best_set.end());
  for (auto j : candidates) {
    if (std::binary_search(best_set.begin(), best_set.end(), j)) {
      sel.issues.push_back(scans[j].issue);
      sel.angles_deg.push_back(scans[j].best_angle_deg);
    } else {
      sel.outside_window.push_back(scans[j].issue);
      sel.warnings.push_back(fmt::format(
          "issue '{}' passes the cutoff but its best angle {:.2f} lies outside "
          "the {} degree window; excluded",
          scans[j].issue, scans[j].best_angle_deg, window_deg));
      spdlog::warn(sel.warnings.back());
    }
  }
  return sel;
}

double combined_rotation(const std::vector<double>& angles_deg) {
  if (angles_deg.empty()) {
    throw Error(ErrorCode::InvalidArgument, "combined_rotation: no angles");
  }
  double sx = 0.0, sy = 0.0;
  for (double a : angles_deg) {
    sx += std::cos(a * kDegToRad);
    sy += std::sin(a * kDegToRad);
  }
  const double resultant = std::hypot(sx, sy) / static_cast<double>(angles_deg.size());
  if (resultant < 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                "circular mean undefined: angles cancel out");
  }
  return wrap_degrees(std::atan2(sy, sx) / kDegToRad);
}

PoliticalSpace finalize_space(const PlanarEmbedding& embedding,
                              const PoliticianMeta& meta, double rotation_deg,
                              const ScoreMap& x_scores,
                              const ScoreMap& orient_scores,
                              const PartyGrouping& grouping, std::string x_label,
                              std::string y_label) {
  PoliticalSpace space;
  space.user_ids = embedding.user_ids;
  space.item_ids = embedding.item_ids;
  space.rotation_deg = wrap_degrees(rotation_deg);
  space.user_coords = rotate(embedding.user_coords, space.rotation_deg);
  space.item_coords = rotate(embedding.item_coords, space.rotation_deg);
  space.x_label = std::move(x_label);
  space.y_label = std::move(y_label);

  auto parties = party_positions(space.item_ids, space.item_coords, meta, grouping);
  std::vector<double> ys, scores;
  for (const auto& [party, point] : parties) {
    const auto it = orient_scores.find(party);
    if (it == orient_scores.end()) continue;
    ys.push_back(point.y());
    scores.push_back(it->second);
  }
  const double r = stats::pearson(ys, scores);
  if (std::isnan(r)) {
    spdlog::warn("orientation correlation undefined; the space is not mirrored");
  } else if (r < 0.0) {
    space.mirrored = true;
    space.user_coords.col(1) *= -1.0;
    space.item_coords.col(1) *= -1.0;
  }

  if (space.user_coords.rows() > 0) {
    space.center_offset = space.user_coords.colwise().mean().transpose();
  }
  space.user_coords.rowwise() -= space.center_offset.transpose();
  space.item_coords.rowwise() -= space.center_offset.transpose();

  space.party_positions = party_positions(space.item_ids, space.item_coords, meta, grouping);
  std::vector<double> px, sx, py, sy;
  for (const auto& [party, point] : space.party_positions) {
    if (const auto it = x_scores.find(party); it != x_scores.end()) {
      px.push_back(point.x());
      sx.push_back(it->second);
    }
    if (const auto it = orient_scores.find(party); it != orient_scores.end()) {
      py.push_back(point.y());
      sy.push_back(it->second);
    }
  }
  space.x_correlation = stats::pearson(px, sx);
  space.y_correlation = stats::pearson(py, sy);
  return space;
}

ScoreMap combined_scores(const std::vector<ScoreMap>& per_issue) {
  if (per_issue.empty()) return {};
  std::vector<ScoreMap> z;
  for (const auto& scores : per_issue) {
    std::vector<double> v;
    for (const auto& [party, s] : scores) v.push_back(s);
    const double m = stats::mean(v);
    const double sd = std::sqrt(stats::sample_variance(v));
    ScoreMap zs;
    for (const auto& [party, s] : scores) zs[party] = sd > 0.0 ? (s - m) / sd : 0.0;
    z.push_back(std::move(zs));
  }
  ScoreMap out;
  for (const auto& [party, first] : z.front()) {
    double sum = 0.0;
    bool everywhere = true;
    for (const auto& zs : z) {
      const auto it = zs.find(party);
      if (it == zs.end()) {
        everywhere = false;
        break;
      }
      sum += it->second;
    }
    if (everywhere) out[party] = sum / static_cast<double>(z.size());
  }
  return out;
}

}  // namespace carto
