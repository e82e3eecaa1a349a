#include "carto/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/io.hpp"
#include "carto/render.hpp"
#include "carto/stats.hpp"
#include "carto/url.hpp"

namespace carto::pipeline {

namespace {

using Json = nlohmann::ordered_json;

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  try {
    return Json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<std::string> dim_header(Eigen::Index n) {
  std::vector<std::string> h{"id"};
  for (Eigen::Index k = 0; k < n; ++k) h.push_back(fmt::format("dim{}", k + 1));
  return h;
}

struct Positions {
  std::vector<std::string> ids;
  Eigen::MatrixX2d coords;
};

Positions read_positions(const fs::path& path, std::size_t x_col) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  Positions out;
  std::vector<Eigen::Vector2d> pts;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      continue;  // header
    }
    if (f.size() < x_col + 2) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: too few fields", path.string(),
                                                reader.line_number()));
    }
    out.ids.push_back(f[0]);
    pts.emplace_back(io::parse_double(f[x_col], path, reader.line_number()),
                     io::parse_double(f[x_col + 1], path, reader.line_number()));
  }
  out.coords.resize(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.coords.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return out;
}

std::vector<Eigen::Vector2d> rows_of(const Eigen::MatrixX2d& m) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  return out;
}

Json grid_json(const DensityGrid& g) {
  return {{"n_points", g.n_points},
          {"estimator", to_string(g.estimator)},
          {"bandwidth", {g.bandwidth.x(), g.bandwidth.y()}},
          {"modes", find_modes(g, 0.1, kModeProminence).size()}};
}

}  // namespace

std::string slug(std::string_view name) {
  std::string s;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    s.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_');
  }
  return s.empty() ? "_" : s;
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_coordinates(const fs::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool first = true;
  while (reader.next(f)) {
    if (first) {
      first = false;
      if (f.size() < 2 || f[0] != "id") {
        throw Error(ErrorCode::Parse, path.string() + ": expected header id,dim1,...");
      }
      width = f.size() - 1;
      continue;
    }
    if (f.size() != width + 1) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected {} fields", path.string(),
                                                reader.line_number(), width + 1));
    }
    ids.push_back(f[0]);
    std::vector<double> r(width);
    for (std::size_t k = 0; k < width; ++k) {
      r[k] = io::parse_double(f[k + 1], path, reader.line_number());
    }
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return {std::move(ids), std::move(m)};
}

void write_coordinates(const fs::path& path, const std::vector<std::string>& ids,
                       const Eigen::MatrixXd& coords, const std::vector<std::string>& header) {
  auto out = io::open_output(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << io::csv_field(ids[i]);
    for (Eigen::Index k = 0; k < coords.cols(); ++k) {
      out << ',' << io::format_double(coords(static_cast<Eigen::Index>(i), k));
    }
    out << '\n';
  }
}

EmbedResult run_embed(const EmbedParams& p) {
  if (p.min_follow < 1) throw Error(ErrorCode::InvalidArgument, "min_follow must be >= 1");
  LoadOptions lo;
  lo.strict = p.strict;
  auto loaded = load_graph(p.edges, p.meta, lo);
  const auto graph = filter_min_degree(loaded.graph, p.min_follow);
  spdlog::info("loaded {} users, {} items, {} edges; {} users follow >= {} items",
               loaded.graph.n_users(), loaded.graph.n_items(), loaded.graph.n_edges(),
               graph.n_users(), p.min_follow);
  fs::create_directories(p.out_dir);
  write_index_maps(graph, p.out_dir);

  auto ca = correspondence_analysis(graph, p.n_dims, p.ca);
  canonicalize_signs(ca, loaded.meta);
  auto report = popularity_screen(ca, loaded.meta, p.popularity_threshold);
  party_spread_screen(report, ca, loaded.meta, p.variance_threshold);

  {
    auto out = io::open_output(p.out_dir / "masses.csv");
    out << "kind,id,mass\n";
    for (std::size_t i = 0; i < ca.user_ids.size(); ++i) {
      out << "user," << io::csv_field(ca.user_ids[i]) << ','
          << io::format_double(ca.row_masses(static_cast<Eigen::Index>(i))) << '\n';
    }
    for (std::size_t j = 0; j < ca.item_ids.size(); ++j) {
      out << "item," << io::csv_field(ca.item_ids[j]) << ','
          << io::format_double(ca.col_masses(static_cast<Eigen::Index>(j))) << '\n';
    }
  }
  write_coordinates(p.out_dir / "user_coords.csv", ca.user_ids, ca.user_coords,
                    dim_header(ca.n_dims()));
  write_coordinates(p.out_dir / "item_coords.csv", ca.item_ids, ca.item_coords,
                    dim_header(ca.n_dims()));

  Json sv;
  sv["singular_values"] = std::vector<double>(ca.singular_values.begin(), ca.singular_values.end());
  sv["variance_share"] = std::vector<double>(ca.variance_share.begin(), ca.variance_share.end());
  sv["total_inertia"] = ca.total_inertia;
  sv["coordinates"] = "standard";
  sv["solver"] = {{"restarts", ca.solver_restarts},
                  {"matvecs", ca.solver_matvecs},
                  {"relative_residual", ca.solver_residual},
                  {"tolerance", p.ca.tol},
                  {"seed", p.ca.seed}};
  sv["input"] = {{"users_loaded", loaded.graph.n_users()},
                 {"edges_loaded", loaded.graph.n_edges()},
                 {"duplicate_edges", loaded.report.duplicate_edges},
                 {"min_follow", p.min_follow},
                 {"users_kept", graph.n_users()},
                 {"items", graph.n_items()}};
  sv["dropped_users"] = ca.dropped_users;
  sv["dropped_items"] = ca.dropped_items;
  write_json(p.out_dir / "singular_values.json", sv);

  Json rep;
  rep["popularity_threshold"] = report.popularity_threshold;
  rep["variance_threshold"] = report.variance_threshold;
  rep["dims"] = Json::array();
  for (const auto& d : report.dims) {
    Json pv = Json::object();
    for (const auto& [party, v] : d.party_variance) pv[party] = v;
    rep["dims"].push_back({{"dim", d.index + 1},
                           {"spearman_vs_degree", d.spearman_vs_degree},
                           {"pearson_vs_degree", d.pearson_vs_degree},
                           {"popularity_flagged", d.popularity_flagged},
                           {"party_variance", pv},
                           {"parties_above_threshold", d.parties_above_threshold},
                           {"spread_flagged", d.spread_flagged}});
  }
  rep["warnings"] = report.warnings;
  EmbedResult result;
  try {
    result.selected = select_dimensions(report);
  } catch (const Error&) {
    rep["selected"] = nullptr;
    write_json(p.out_dir / "screen_report.json", rep);
    throw;
  }
  rep["selected"] = {result.selected.first + 1, result.selected.second + 1};
  write_json(p.out_dir / "screen_report.json", rep);

  result.users_loaded = loaded.graph.n_users();
  result.users_kept = graph.n_users();
  result.items = graph.n_items();
  result.edges = graph.n_edges();
  result.singular_values = ca.singular_values;
  result.screen = std::move(report);
  return result;
}

AlignResult run_align(const AlignParams& p) {
  const auto [uids, ucoords] = read_coordinates(p.embed_dir / "user_coords.csv");
  const auto [iids, icoords] = read_coordinates(p.embed_dir / "item_coords.csv");
  const Json report = read_json(p.embed_dir / "screen_report.json");
  if (!report.contains("selected") || !report["selected"].is_array() ||
      report["selected"].size() != 2) {
    throw Error(ErrorCode::Selection, "screen report has no selected dimensions");
  }
  const auto d1 = report["selected"][0].get<Eigen::Index>() - 1;
  const auto d2 = report["selected"][1].get<Eigen::Index>() - 1;
  if (d1 < 0 || d2 < 0 || d1 >= ucoords.cols() || d2 >= ucoords.cols() ||
      d1 >= icoords.cols() || d2 >= icoords.cols()) {
    throw Error(ErrorCode::Validation, "selected dimensions out of range");
  }

  PlanarEmbedding emb;
  emb.user_ids = uids;
  emb.item_ids = iids;
  emb.user_coords.resize(ucoords.rows(), 2);
  emb.user_coords << ucoords.col(d1), ucoords.col(d2);
  emb.item_coords.resize(icoords.rows(), 2);
  emb.item_coords << icoords.col(d1), icoords.col(d2);

  const auto meta = load_meta(p.meta);
  const auto scores = load_party_scores(p.party_scores, p.x_issue);
  const ScoreMap x_scores = [&] {
    const auto m = scores.scores(p.x_issue);
    return ScoreMap(m.begin(), m.end());
  }();
  std::vector<std::string> y_names = p.y_issues;
  if (y_names.empty()) {
    for (const auto& issue : scores.issues()) {
      if (issue != p.x_issue) y_names.push_back(issue);
    }
  }
  std::vector<std::pair<std::string, ScoreMap>> y_issues;
  for (const auto& name : y_names) {
    if (!scores.has_issue(name)) {
      throw Error(ErrorCode::Validation, fmt::format("issue '{}' not in the score table", name));
    }
    const auto m = scores.scores(name);
    y_issues.emplace_back(name, ScoreMap(m.begin(), m.end()));
  }

  PartyGrouping grouping{p.unions, p.split};
  const auto positions = party_positions(emb.item_ids, emb.item_coords, meta, grouping);

  AlignResult r;
  r.scans = scan_issues(positions, x_scores, y_issues, ScanOptions{p.step_deg, p.refine});
  r.selection = select_issues(r.scans.scans, p.cutoff, p.window_deg);
  for (const auto& w : r.selection.warnings) spdlog::warn("{}", w);
  r.rotation_deg = combined_rotation(r.selection.angles_deg);

  std::vector<ScoreMap> selected_scores;
  for (const auto& issue : r.selection.issues) {
    for (const auto& [name, s] : y_issues) {
      if (name == issue) selected_scores.push_back(s);
    }
  }
  const ScoreMap orient = combined_scores(selected_scores);
  const std::string y_label = fmt::format("{}", fmt::join(r.selection.issues, "/"));
  const PlanarEmbedding base = r.scans.mirrored ? mirror_y(emb) : emb;
  r.space = finalize_space(base, meta, r.rotation_deg, x_scores, orient, grouping, p.x_issue,
                           y_label);

  for (const auto& [name, s] : y_issues) {
    std::vector<double> py, sy;
    for (const auto& [party, pos] : r.space.party_positions) {
      if (const auto it = s.find(party); it != s.end()) {
        py.push_back(pos.y());
        sy.push_back(it->second);
      }
    }
    r.issue_correlations.emplace_back(name, stats::pearson(py, sy));
  }

  fs::create_directories(p.out_dir);
  Json scans = Json::array();
  for (const auto& s : r.scans.scans) {
    Json curve = Json::array();
    for (const auto& rec : s.records) curve.push_back(rec.sum);
    Json js{{"issue", s.issue},
            {"parties", s.parties},
            {"best_angle_deg", s.best_angle_deg},
            {"best_sum", s.best_sum},
            {"best_pearson_x", s.best_pearson_x},
            {"best_pearson_y", s.best_pearson_y},
            {"step_deg", p.step_deg},
            {"sum_by_angle", curve}};
    js["refined"] = s.refined ? Json{{"angle_deg", s.refined->angle_deg}, {"sum", s.refined->sum}}
                              : Json(nullptr);
    scans.push_back(std::move(js));
  }
  write_json(p.out_dir / "scans.json",
             Json{{"x_issue", p.x_issue},
                  {"mirrored_before_scan", r.scans.mirrored},
                  {"best_sum_as_is", r.scans.best_as_is},
                  {"best_sum_mirrored", r.scans.best_mirrored},
                  {"scans", scans}});

  Json tr;
  tr["dims"] = {d1 + 1, d2 + 1};
  tr["mirrored_before_scan"] = r.scans.mirrored;
  tr["rotation_deg"] = r.rotation_deg;
  tr["mirrored"] = r.space.mirrored;
  tr["center_offset"] = {r.space.center_offset.x(), r.space.center_offset.y()};
  tr["order"] = "pre-mirror, rotate, mirror, center";
  tr["x_issue"] = p.x_issue;
  tr["issues"] = r.selection.issues;
  tr["issue_angles_deg"] = r.selection.angles_deg;
  tr["below_cutoff"] = r.selection.below_cutoff;
  tr["outside_window"] = r.selection.outside_window;
  tr["fallback"] = r.selection.fallback;
  tr["cutoff"] = p.cutoff;
  tr["window_deg"] = p.window_deg;
  tr["x_label"] = r.space.x_label;
  tr["y_label"] = r.space.y_label;
  tr["x_correlation"] = r.space.x_correlation;
  tr["y_correlation"] = r.space.y_correlation;
  Json ic = Json::object();
  for (const auto& [name, c] : r.issue_correlations) ic[name] = c;
  tr["issue_correlations"] = ic;
  tr["warnings"] = r.selection.warnings;
  write_json(p.out_dir / "transform.json", tr);

  write_coordinates(p.out_dir / "user_positions.csv", r.space.user_ids, r.space.user_coords,
                    {"user_id", "x", "y"});
  {
    auto out = io::open_output(p.out_dir / "item_positions.csv");
    out << "item_id,party,x,y\n";
    for (std::size_t j = 0; j < r.space.item_ids.size(); ++j) {
      const auto* rec = meta.find(r.space.item_ids[j]);
      const auto row = static_cast<Eigen::Index>(j);
      out << io::csv_field(r.space.item_ids[j]) << ','
          << io::csv_field(rec ? grouping.group_of(rec->party) : "") << ','
          << io::format_double(r.space.item_coords(row, 0)) << ','
          << io::format_double(r.space.item_coords(row, 1)) << '\n';
    }
  }
  {
    auto out = io::open_output(p.out_dir / "party_positions.csv");
    out << "party,x,y\n";
    for (const auto& [party, pos] : r.space.party_positions) {
      out << io::csv_field(party) << ',' << io::format_double(pos.x()) << ','
          << io::format_double(pos.y()) << '\n';
    }
  }
  spdlog::info("rotation {:.3f} deg over issues [{}]; x correlation {:.3f}, y correlation {:.3f}",
               r.rotation_deg, fmt::join(r.selection.issues, ", "), r.space.x_correlation,
               r.space.y_correlation);
  return r;
}

MapResult run_map(const MapParams& p) {
  const auto users = read_positions(p.align_dir / "user_positions.csv", 1);
  PoliticalSpace space;
  space.user_ids = users.ids;
  space.user_coords = users.coords;

  auto events = load_share_events(p.shares, p.window);
  std::shared_ptr<RedirectSource> source;
  if (p.online) {
    source = std::make_shared<HttpRedirectSource>(p.http_timeout_s);
  } else if (p.redirects) {
    source = std::make_shared<StaticRedirectMap>(*p.redirects);
  } else {
    source = std::make_shared<StaticRedirectMap>();
  }
  ResolverOptions ro;
  ro.max_hops = p.max_hops;
  ro.max_in_flight = p.max_in_flight;
  UrlResolver resolver(source, ro);
  resolve_events(events, resolver);

  const auto outlets = load_outlets(p.outlets);
  const auto blocked = p.blocklist ? load_blocklist(*p.blocklist) : std::set<std::string>{};
  const auto joined = join_shares(events, space, outlets, blocked, ro.canonicalization);
  const auto stories = story_stats(joined.shares);

  fs::create_directories(p.out_dir);
  write_positioned_shares(joined.shares, p.out_dir / "positioned_shares.csv");
  write_story_stats(stories, p.out_dir / "story_stats.csv");
  {
    std::set<std::string> raws;
    for (const auto& e : events) raws.insert(e.raw_url);
    auto out = io::open_output(p.out_dir / "resolved_urls.csv");
    out << "raw,resolved,ok,hops,error\n";
    for (const auto& raw : raws) {
      const auto r = resolver.resolve(raw);
      out << io::csv_field(raw) << ',' << io::csv_field(r.url) << ',' << (r.resolved ? 1 : 0)
          << ',' << r.hops << ',' << io::csv_field(r.error) << '\n';
    }
  }
  const auto& c = joined.coverage;
  Json per = Json::object();
  for (const auto& [outlet, oc] : c.per_outlet) {
    const auto denom = oc.positioned + oc.unembedded;
    per[outlet] = {{"positioned", oc.positioned},
                   {"unembedded", oc.unembedded},
                   {"coverage", denom ? static_cast<double>(oc.positioned) / denom : 0.0}};
  }
  write_json(p.out_dir / "coverage.json",
             Json{{"total_events", c.total_events},
                  {"blocked", c.blocked},
                  {"no_outlet", c.no_outlet},
                  {"positioned", c.positioned},
                  {"unembedded", c.unembedded},
                  {"coverage", c.coverage()},
                  {"resolved", c.resolved},
                  {"unresolved", c.unresolved},
                  {"stories", stories.size()},
                  {"per_outlet", per}});
  spdlog::info("{} events: {} positioned, {} unembedded, {} blocked, {} without outlet",
               c.total_events, c.positioned, c.unembedded, c.blocked, c.no_outlet);
  return {c, stories.size()};
}

TopicsResult run_topics(const TopicsParams& p) {
  const auto shares = read_positioned_shares(p.map_dir / "positioned_shares.csv");
  const auto m = load_doc_topics(p.doc_topics);
  const auto map = load_metatopic_map(p.metatopic_map);
  const auto mt = metatopic_matrix(m, map);
  const auto links = load_story_doc_links(p.story_docs);
  TopicsResult r;
  const auto tagged = tag_shares(shares, links, m, mt, p.threshold, &r.tagging);
  r.topic_coverage = assignment_coverage(m, p.threshold);
  r.metatopic_coverage = assignment_coverage(mt, p.threshold);

  fs::create_directories(p.out_dir);
  write_tagged_shares(tagged, p.out_dir / "tagged_shares.csv");
  {
    auto out = io::open_output(p.out_dir / "metatopic_matrix.csv");
    out << "doc_id,metatopic,prob\n";
    for (std::size_t i = 0; i < mt.n_docs(); ++i) {
      for (const auto& e : mt.row(i)) {
        out << io::csv_field(mt.doc_ids[i]) << ',' << io::csv_field(mt.labels[e.label]) << ','
            << io::format_double(e.prob) << '\n';
      }
    }
  }
  Json cov_t = Json::object();
  Json cov_m = Json::object();
  for (double t : {0.3, 0.5, 0.7}) {
    cov_t[fmt::format("{}", t)] = assignment_coverage(m, t);
    cov_m[fmt::format("{}", t)] = assignment_coverage(mt, t);
  }
  std::map<std::string, std::size_t> by_meta;
  std::map<std::string, std::map<std::string, std::size_t>> by_outlet;
  for (const auto& t : tagged) {
    const std::string label = t.main_metatopic.value_or("");
    if (!label.empty()) ++by_meta[label];
    ++by_outlet[t.share.outlet][label.empty() ? "(none)" : label];
  }
  write_json(p.out_dir / "topic_summary.json",
             Json{{"threshold", p.threshold},
                  {"documents", m.n_docs()},
                  {"topic_coverage", r.topic_coverage},
                  {"metatopic_coverage", r.metatopic_coverage},
                  {"topic_coverage_by_threshold", cov_t},
                  {"metatopic_coverage_by_threshold", cov_m},
                  {"shares", r.tagging.shares},
                  {"shares_with_document", r.tagging.with_document},
                  {"shares_with_topic", r.tagging.with_topic},
                  {"shares_with_metatopic", r.tagging.with_metatopic},
                  {"shares_missing_document", r.tagging.missing_documents},
                  {"shares_by_metatopic", by_meta},
                  {"shares_by_outlet_metatopic", by_outlet}});
  spdlog::info("{} documents; main topic for {:.1f}%, main metatopic for {:.1f}% at {}",
               m.n_docs(), 100 * r.topic_coverage, 100 * r.metatopic_coverage, p.threshold);
  return r;
}

DensityResult run_density(const DensityParams& p) {
  const auto users = read_positions(p.align_dir / "user_positions.csv", 1);
  const auto parties = read_positions(p.align_dir / "party_positions.csv", 1);
  const Json transform = read_json(p.align_dir / "transform.json");
  std::vector<Overlay> overlays;
  for (std::size_t i = 0; i < parties.ids.size(); ++i) {
    overlays.push_back({parties.ids[i], parties.coords.row(static_cast<Eigen::Index>(i)).transpose()});
  }

  std::vector<TaggedShare> shares;
  bool tagged = false;
  if (fs::exists(p.shares_dir / "tagged_shares.csv")) {
    shares = read_tagged_shares(p.shares_dir / "tagged_shares.csv");
    tagged = true;
  } else {
    for (auto& s : read_positioned_shares(p.shares_dir / "positioned_shares.csv")) {
      shares.push_back({std::move(s), std::nullopt, std::nullopt, std::nullopt});
    }
  }

  fs::create_directories(p.out_dir);
  DensityResult result;
  Json summary = Json::object();

  const auto user_points = rows_of(users.coords);
  DensityOptions base;
  base.bounds = auto_bounds(std::span<const Eigen::Vector2d>(user_points));
  base.nx = p.nx;
  base.ny = p.ny;
  base.bandwidth = p.bandwidth;
  base.estimator = p.estimator;
  base.exec = p.exec;
  DensityGrid user_grid = density2d(user_points, base);
  user_grid.overlays = overlays;

  RenderStyle style;
  style.x_label = transform.value("x_label", std::string("x"));
  style.y_label = transform.value("y_label", std::string("y"));

  const auto emit = [&](const std::string& name, const DensityGrid& g) {
    export_grid(g, p.out_dir / (name + ".csv"), p.out_dir / (name + ".json"));
    result.grids.push_back(name);
    summary[name] = grid_json(g);
  };
  // Empty sets give an all-zero grid; degenerate ones borrow the user bandwidth.
  const auto grid_for = [&](const std::vector<Eigen::Vector2d>& pts) {
    if (pts.empty()) {
      DensityGrid g;
      g.bounds = *base.bounds;
      g.nx = base.nx;
      g.ny = base.ny;
      g.estimator = base.estimator;
      g.values.assign(g.nx * g.ny, 0.0);
      std::tie(g.marginal_x, g.marginal_y) = marginals(g);
      g.overlays = overlays;
      return g;
    }
    DensityOptions o = base;
    if (o.estimator == Estimator::Kde && !o.bandwidth) {
      const Eigen::Vector2d h = scott_bandwidth(pts);
      o.bandwidth = (h.x() > 0.0 && h.y() > 0.0) ? h : user_grid.bandwidth;
    }
    DensityGrid g = density2d(pts, o);
    g.overlays = overlays;
    return g;
  };

  emit("users", user_grid);
  style.palette = Palette::Green;
  style.title = "users";
  render(user_grid, style, p.out_dir / "users.svg");
  result.figures.push_back("users.svg");

  std::map<std::string, std::size_t> outlet_counts;
  for (const auto& t : shares) ++outlet_counts[t.share.outlet];
  std::vector<std::string> outlets = p.outlets;
  if (outlets.empty()) {
    std::vector<std::pair<std::string, std::size_t>> ranked(outlet_counts.begin(),
                                                            outlet_counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t k = 0; k < std::min(p.max_outlets, ranked.size()); ++k) {
      outlets.push_back(ranked[k].first);
    }
  }

  for (const auto& outlet : outlets) {
    if (!outlet_counts.contains(outlet)) spdlog::warn("outlet '{}' has no positioned shares", outlet);
    std::vector<PositionedShare> subset;
    for (const auto& t : shares) {
      if (t.share.outlet == outlet) subset.push_back(t.share);
    }
    const auto stats = story_stats(subset);
    std::vector<Eigen::Vector2d> share_pts, story_pts;
    for (const auto& s : subset) share_pts.push_back(s.position);
    for (const auto& s : stats) story_pts.push_back(s.mean_position);
    const std::string base_name = "outlet_" + slug(outlet);
    const auto g_sh = grid_for(share_pts);
    const auto g_st = grid_for(story_pts);
    emit(base_name + "_shares", g_sh);
    emit(base_name + "_stories", g_st);
    RenderStyle s = style;
    s.palette = Palette::Blue;
    s.title = outlet;
    std::vector<Panel> panels{{g_sh, fmt::format("shares (n={})", share_pts.size()), {}},
                              {g_st, fmt::format("story means (n={})", story_pts.size()), {}}};
    render_panels(panels, 1, 2, s, p.out_dir / (base_name + ".svg"));
    result.figures.push_back(base_name + ".svg");
  }

  if (tagged) {
    std::map<std::string, std::size_t> meta_counts;
    std::map<int, std::size_t> topic_counts;
    for (const auto& t : shares) {
      if (t.main_metatopic) ++meta_counts[*t.main_metatopic];
      if (t.main_topic) ++topic_counts[*t.main_topic];
    }
    std::vector<std::string> metas = p.metatopics;
    if (metas.empty()) {
      std::vector<std::pair<std::string, std::size_t>> ranked(meta_counts.begin(),
                                                              meta_counts.end());
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      for (std::size_t k = 0; k < std::min<std::size_t>(2, ranked.size()); ++k) {
        metas.push_back(ranked[k].first);
      }
    }
    const std::size_t n_rows = std::min<std::size_t>(2, outlets.size());
    if (n_rows > 0 && !metas.empty()) {
      std::vector<Panel> panels;
      for (std::size_t r = 0; r < n_rows; ++r) {
        for (const auto& meta : metas) {
          const auto pts = filter_positions(shares, {outlets[r], meta, std::nullopt});
          const auto g = grid_for(pts);
          emit(fmt::format("om_{}_{}", slug(outlets[r]), slug(meta)), g);
          panels.push_back({g, fmt::format("{} / {} (n={})", outlets[r], meta, pts.size()), {}});
        }
      }
      RenderStyle s = style;
      s.palette = Palette::Blue;
      s.title = "outlets by metatopic";
      render_panels(panels, n_rows, metas.size(), s, p.out_dir / "outlets_by_metatopic.svg");
      result.figures.push_back("outlets_by_metatopic.svg");
    }

    std::optional<int> topic = p.topic;
    if (!topic && !topic_counts.empty()) {
      topic = std::max_element(topic_counts.begin(), topic_counts.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; })
                  ->first;
    }
    if (topic) {
      std::map<std::string, std::size_t> labels;
      for (const auto& t : shares) {
        if (t.main_topic == topic && t.main_metatopic) ++labels[*t.main_metatopic];
      }
      if (labels.empty()) {
        spdlog::warn("topic {} has no tagged shares", *topic);
      } else {
        const std::string meta =
            std::max_element(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
              return a.second < b.second;
            })->first;
        const auto tp = filter_positions(shares, {std::nullopt, std::nullopt, topic});
        const auto mp = filter_positions(shares, {std::nullopt, meta, std::nullopt});
        const auto gt = grid_for(tp);
        const auto gm = grid_for(mp);
        emit(fmt::format("topic_{}", *topic), gt);
        emit("metatopic_" + slug(meta), gm);
        RenderStyle s = style;
        s.palette = Palette::Red;
        s.title = "topic versus metatopic";
        render_panels({{gt, fmt::format("topic {} (n={})", *topic, tp.size()), {}},
                       {gm, fmt::format("{} (n={})", meta, mp.size()), {}}},
                      1, 2, s, p.out_dir / "topic_vs_metatopic.svg");
        result.figures.push_back("topic_vs_metatopic.svg");
      }
    }
  }

  write_json(p.out_dir / "density_summary.json",
             Json{{"bounds",
                   {base.bounds->x_min, base.bounds->x_max, base.bounds->y_min, base.bounds->y_max}},
                  {"nx", p.nx},
                  {"ny", p.ny},
                  {"bandwidth_rule", p.bandwidth ? "fixed" : "scott"},
                  {"grids", summary},
                  {"figures", result.figures}});
  return result;
}

WorldSummary run_synth(const SynthParams& p) {
  auto s = write_world(p.world, p.out_dir);
  spdlog::info("synthetic world: {} users, {} items, {} edges, {} share events, {} stories",
               s.n_users, s.n_items, s.n_edges, s.n_events, s.n_stories);
  return s;
}

void run_all(const FullRunParams& p) {
  const auto& w = p.world_dir;
  EmbedParams ep;
  ep.edges = w / "edges.tsv";
  ep.meta = w / "meta.csv";
  ep.out_dir = p.out_dir / "embed";
  ep.n_dims = p.n_dims;
  ep.min_follow = p.min_follow;
  ep.ca.exec = p.exec;
  ep.ca.seed = p.seed;
  run_embed(ep);

  AlignParams ap;
  ap.embed_dir = ep.out_dir;
  ap.meta = ep.meta;
  ap.party_scores = w / "party_scores.csv";
  ap.out_dir = p.out_dir / "align";
  ap.x_issue = world_issues().front();
  run_align(ap);

  MapParams mp;
  mp.align_dir = ap.out_dir;
  mp.shares = w / "shares.jsonl";
  mp.outlets = w / "outlets.csv";
  mp.redirects = w / "redirects.csv";
  mp.blocklist = w / "blocklist.csv";
  mp.out_dir = p.out_dir / "map";
  run_map(mp);

  TopicsParams tp;
  tp.map_dir = mp.out_dir;
  tp.doc_topics = w / "doc_topics.csv";
  tp.metatopic_map = w / "metatopics.csv";
  tp.story_docs = w / "story_docs.csv";
  tp.out_dir = p.out_dir / "topics";
  run_topics(tp);

  DensityParams dp;
  dp.align_dir = ap.out_dir;
  dp.shares_dir = tp.out_dir;
  dp.out_dir = p.out_dir / "density";
  dp.exec = p.exec;
  run_density(dp);
}

}  // namespace carto::pipeline
