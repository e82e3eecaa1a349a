#include "carto/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

constexpr double kTruncation = 9.0;
constexpr std::size_t kPointChunk = 8192;

// Upper tail of the standard normal.
double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Standard normal mass on [a, b], computed from the tails to avoid
// cancellation away from the centre.
double interval_mass(double a, double b) {
  if (a >= 0.0) return upper_tail(a) - upper_tail(b);
  if (b <= 0.0) return upper_tail(-b) - upper_tail(-a);
  return 1.0 - upper_tail(-a) - upper_tail(b);
}

struct Window {
  std::size_t lo = 0;
  std::size_t len = 0;
};

Window kernel_window(double c, double h, double lo, double w, std::size_t n) {
  const double a = (c - kTruncation * h - lo) / w;
  const double b = (c + kTruncation * h - lo) / w;
  if (b < 0.0 || a >= static_cast<double>(n)) return {};
  const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(a)));
  const auto last = std::min(n, static_cast<std::size_t>(std::floor(b)) + 1);
  if (first >= last) return {};
  return {first, last - first};
}

void fill_kernel(double c, double h, double lo, double w, Window win, double* out) {
  for (std::size_t k = 0; k < win.len; ++k) {
    const double e0 = lo + static_cast<double>(win.lo + k) * w;
    out[k] = interval_mass((e0 - c) / h, (e0 + w - c) / h);
  }
}

void check_grid_shape(const DensityOptions& o) {
  if (o.nx == 0 || o.ny == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
}

void check_bounds(const Bounds& b) {
  if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min) || !std::isfinite(b.x_min) ||
      !std::isfinite(b.x_max) || !std::isfinite(b.y_min) || !std::isfinite(b.y_max)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("invalid bounds [{}, {}] x [{}, {}]", b.x_min, b.x_max,
                            b.y_min, b.y_max));
  }
}

void kde_accumulate(std::span<const Eigen::Vector2d> points, const Eigen::Vector2d& h,
                    DensityGrid& g, kernels::Exec exec) {
  const double dx = g.cell_width();
  const double dy = g.cell_height();
  std::vector<std::size_t> x_lo, x_len, x_off, y_lo, y_len, y_off;
  std::vector<double> wx, wy;
  for (std::size_t begin = 0; begin < points.size(); begin += kPointChunk) {
    const std::size_t end = std::min(points.size(), begin + kPointChunk);
    const std::size_t m = end - begin;
    x_lo.assign(m, 0); x_len.assign(m, 0); x_off.assign(m, 0);
    y_lo.assign(m, 0); y_len.assign(m, 0); y_off.assign(m, 0);
    std::size_t nwx = 0;
    std::size_t nwy = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& p = points[begin + k];
      auto wxw = kernel_window(p.x(), h.x(), g.bounds.x_min, dx, g.nx);
      auto wyw = kernel_window(p.y(), h.y(), g.bounds.y_min, dy, g.ny);
      if (wxw.len == 0 || wyw.len == 0) wxw = wyw = {};
      x_lo[k] = wxw.lo; x_len[k] = wxw.len; x_off[k] = nwx; nwx += wxw.len;
      y_lo[k] = wyw.lo; y_len[k] = wyw.len; y_off[k] = nwy; nwy += wyw.len;
    }
    wx.assign(nwx, 0.0);
    wy.assign(nwy, 0.0);
    const auto fill = [&](std::size_t k) {
      const auto& p = points[begin + k];
      fill_kernel(p.x(), h.x(), g.bounds.x_min, dx, {x_lo[k], x_len[k]}, wx.data() + x_off[k]);
      fill_kernel(p.y(), h.y(), g.bounds.y_min, dy, {y_lo[k], y_len[k]}, wy.data() + y_off[k]);
    };
    if (exec == kernels::Exec::Serial) {
      for (std::size_t k = 0; k < m; ++k) fill(k);
    } else {
#pragma omp parallel for schedule(static)
      for (std::size_t k = 0; k < m; ++k) fill(k);
    }
    kernels::SeparableWeights w{g.nx, g.ny, x_lo, x_len, x_off, y_lo, y_len, y_off, wx, wy};
    kernels::accumulate_separable(w, g.values, exec);
  }
}

}  // namespace

std::string_view to_string(Estimator e) noexcept {
  return e == Estimator::Kde ? "kde" : "histogram";
}

Estimator estimator_from_string(std::string_view s) {
  if (s == "kde") return Estimator::Kde;
  if (s == "histogram") return Estimator::Histogram;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown estimator '{}'", s));
}

double DensityGrid::total_mass() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * cell_area();
}

Bounds auto_bounds(std::span<const std::vector<Eigen::Vector2d>> sets, double padding,
                   double fallback) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& set : sets) {
    for (const auto& p : set) {
      x0 = std::min(x0, p.x()); x1 = std::max(x1, p.x());
      y0 = std::min(y0, p.y()); y1 = std::max(y1, p.y());
    }
  }
  if (!(x0 <= x1)) throw Error(ErrorCode::InvalidArgument, "no points to bound");
  const double px = x1 > x0 ? padding * (x1 - x0) : fallback;
  const double py = y1 > y0 ? padding * (y1 - y0) : fallback;
  return {x0 - px, x1 + px, y0 - py, y1 + py};
}

Bounds auto_bounds(std::span<const Eigen::Vector2d> points, double padding,
                   double fallback) {
  std::vector<std::vector<Eigen::Vector2d>> one{{points.begin(), points.end()}};
  return auto_bounds(std::span<const std::vector<Eigen::Vector2d>>(one), padding, fallback);
}

Eigen::Vector2d scott_bandwidth(std::span<const Eigen::Vector2d> points) {
  const auto n = static_cast<double>(points.size());
  if (points.size() < 2) return Eigen::Vector2d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;
  Eigen::Vector2d ss = Eigen::Vector2d::Zero();
  for (const auto& p : points) ss += (p - mean).cwiseAbs2();
  const Eigen::Vector2d sd = (ss / (n - 1.0)).cwiseSqrt();
  return sd * std::pow(n, -1.0 / 6.0);
}

std::vector<double> cell_kernel_mass(double center, double h, double lo, double w,
                                     std::size_t n) {
  std::vector<double> out(n, 0.0);
  const auto win = kernel_window(center, h, lo, w, n);
  fill_kernel(center, h, lo, w, win, out.data() + win.lo);
  return out;
}

DensityGrid density2d(std::span<const Eigen::Vector2d> points, const DensityOptions& o) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "density of an empty point set");
  check_grid_shape(o);
  DensityGrid g;
  g.nx = o.nx;
  g.ny = o.ny;
  g.estimator = o.estimator;
  g.n_points = points.size();

  Eigen::Vector2d h = Eigen::Vector2d::Zero();
  if (o.estimator == Estimator::Kde) {
    h = o.bandwidth ? *o.bandwidth : scott_bandwidth(points);
    if (!(h.x() > 0.0) || !(h.y() > 0.0) || !h.allFinite()) {
      throw Error(ErrorCode::DegenerateInput,
                  fmt::format("kernel bandwidth ({}, {}) must be positive; a single "
                              "distinct point needs an explicit bandwidth",
                              h.x(), h.y()));
    }
    g.bandwidth = h;
  }

  if (o.bounds) {
    g.bounds = *o.bounds;
  } else {
    g.bounds = auto_bounds(points, 0.05, o.estimator == Estimator::Kde ? 3.0 * h.maxCoeff() : 1.0);
  }
  check_bounds(g.bounds);
  for (const auto& p : points) {
    if (!g.bounds.contains(p)) ++g.n_outside;
  }
  if (o.bounds) {
    const double inside = static_cast<double>(g.n_points - g.n_outside) / g.n_points;
    if (inside < o.min_inside) {
      throw Error(ErrorCode::Validation,
                  fmt::format("only {:.4f} of the points fall inside the density bounds "
                              "(required {})", inside, o.min_inside));
    }
  }

  g.values.assign(g.nx * g.ny, 0.0);
  if (o.estimator == Estimator::Kde) {
    kde_accumulate(points, h, g, o.exec);
    const double total = std::accumulate(g.values.begin(), g.values.end(), 0.0);
    if (!(total > 0.0)) {
      throw Error(ErrorCode::DegenerateInput, "no kernel mass falls inside the grid");
    }
    const double scale = 1.0 / (total * g.cell_area());
    for (double& v : g.values) v *= scale;
  } else {
    std::size_t inside = 0;
    for (const auto& p : points) {
      if (!g.bounds.contains(p)) continue;
      const auto ix = std::min(
          g.nx - 1, static_cast<std::size_t>((p.x() - g.bounds.x_min) / g.cell_width()));
      const auto iy = std::min(
          g.ny - 1, static_cast<std::size_t>((p.y() - g.bounds.y_min) / g.cell_height()));
      g.values[iy * g.nx + ix] += 1.0;
      ++inside;
    }
    if (inside == 0) throw Error(ErrorCode::DegenerateInput, "no points inside the grid");
    const double scale = 1.0 / (static_cast<double>(inside) * g.cell_area());
    for (double& v : g.values) v *= scale;
  }
  std::tie(g.marginal_x, g.marginal_y) = marginals(g);
  return g;
}

std::pair<std::vector<double>, std::vector<double>> marginals(const DensityGrid& g) {
  std::vector<double> mx(g.nx, 0.0);
  std::vector<double> my(g.ny, 0.0);
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const double v = g.values[iy * g.nx + ix];
      mx[ix] += v;
      my[iy] += v;
    }
  }
  for (double& v : mx) v *= g.cell_height();
  for (double& v : my) v *= g.cell_width();
  return {std::move(mx), std::move(my)};
}

std::vector<Mode> find_modes(const DensityGrid& g, double min_relative, double min_prominence) {
  const double peak = g.values.empty() ? 0.0 : *std::max_element(g.values.begin(), g.values.end());
  std::vector<Mode> modes;
  if (!(peak > 0.0)) return modes;
  const auto nx = static_cast<long>(g.nx);
  const auto ny = static_cast<long>(g.ny);
  const auto n = static_cast<std::size_t>(nx * ny);
  // Strict total order on cells: higher value first, then earlier in raster
  // order, so plateaus keep only their first cell.
  const auto above = [&](std::size_t a, std::size_t b) {
    return g.values[a] > g.values[b] || (g.values[a] == g.values[b] && a < b);
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), above);

  // Flood the surface from the top. A cell with no flooded neighbour is a
  // strict local maximum and starts a component. When components meet, the
  // one with the lower summit ends there, and its prominence is the drop
  // from the summit to that saddle relative to the summit.
  constexpr std::size_t kDry = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(n, kDry);
  std::vector<std::size_t> summit(n, kDry);
  std::vector<double> prominence(n, 0.0);
  const auto find = [&](std::size_t c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };
  std::vector<std::size_t> roots;
  for (const std::size_t c : order) {
    const long ix = static_cast<long>(c) % nx;
    const long iy = static_cast<long>(c) / nx;
    roots.clear();
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const long jx = ix + dx;
        const long jy = iy + dy;
        if ((dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
        const auto j = static_cast<std::size_t>(jy * nx + jx);
        if (parent[j] == kDry) continue;
        const auto r = find(j);
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
      }
    }
    if (roots.empty()) {
      parent[c] = c;
      summit[c] = c;
      prominence[c] = 1.0;
      continue;
    }
    std::size_t keep = roots.front();
    for (const auto r : roots) {
      if (above(summit[r], summit[keep])) keep = r;
    }
    for (const auto r : roots) {
      if (r == keep) continue;
      const double top = g.values[summit[r]];
      prominence[summit[r]] = top > 0.0 ? (top - g.values[c]) / top : 0.0;
      parent[r] = keep;
    }
    parent[c] = keep;
  }

  for (const std::size_t c : order) {
    const double v = g.values[c];
    if (v < min_relative * peak || v <= 0.0) break;
    if (summit[c] != c || prominence[c] < min_prominence) continue;
    modes.push_back({c % g.nx, c / g.nx, v, prominence[c]});
  }
  return modes;
}

void export_grid(const DensityGrid& g, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
  {
    auto out = io::open_output(csv_path);
    out << "x,y,value\n";
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
      for (std::size_t ix = 0; ix < g.nx; ++ix) {
        out << io::format_double(g.x_center(ix)) << ',' << io::format_double(g.y_center(iy))
            << ',' << io::format_double(g.at(ix, iy)) << '\n';
      }
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + csv_path.string());
  }
  nlohmann::ordered_json meta;
  meta["values"] = csv_path.filename().string();
  meta["estimator"] = to_string(g.estimator);
  meta["bounds"] = {{"x_min", g.bounds.x_min}, {"x_max", g.bounds.x_max},
                    {"y_min", g.bounds.y_min}, {"y_max", g.bounds.y_max}};
  meta["nx"] = g.nx;
  meta["ny"] = g.ny;
  meta["bandwidth"] = {g.bandwidth.x(), g.bandwidth.y()};
  meta["bandwidth_rule"] = g.estimator == Estimator::Kde ? "gaussian, cell-averaged" : "none";
  meta["n_points"] = g.n_points;
  meta["n_outside"] = g.n_outside;
  auto overlays = nlohmann::ordered_json::array();
  for (const auto& o : g.overlays) {
    overlays.push_back({{"label", o.label}, {"x", o.position.x()}, {"y", o.position.y()}});
  }
  meta["overlays"] = std::move(overlays);
  io::write_text(json_path, meta.dump(2) + "\n");
}

DensityGrid import_grid(const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(json_path));
    DensityGrid g;
    g.estimator = estimator_from_string(meta.at("estimator").get<std::string>());
    const auto& b = meta.at("bounds");
    g.bounds = {b.at("x_min").get<double>(), b.at("x_max").get<double>(),
                b.at("y_min").get<double>(), b.at("y_max").get<double>()};
    g.nx = meta.at("nx").get<std::size_t>();
    g.ny = meta.at("ny").get<std::size_t>();
    g.bandwidth = {meta.at("bandwidth").at(0).get<double>(),
                   meta.at("bandwidth").at(1).get<double>()};
    g.n_points = meta.at("n_points").get<std::size_t>();
    g.n_outside = meta.value("n_outside", std::size_t{0});
    for (const auto& o : meta.at("overlays")) {
      g.overlays.push_back({o.at("label").get<std::string>(),
                            {o.at("x").get<double>(), o.at("y").get<double>()}});
    }
    io::CsvReader reader(csv_path);
    std::vector<std::string> f;
    bool first = true;
    g.values.reserve(g.nx * g.ny);
    while (reader.next(f)) {
      if (first) {
        first = false;
        if (!f.empty() && f[0] == "x") continue;
      }
      if (f.size() != 3) {
        throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected x,y,value",
                                                  csv_path.string(), reader.line_number()));
      }
      g.values.push_back(io::parse_double(f[2], csv_path, reader.line_number()));
    }
    if (g.values.size() != g.nx * g.ny) {
      throw Error(ErrorCode::Parse,
                  fmt::format("{}: {} values for a {}x{} grid", csv_path.string(),
                              g.values.size(), g.nx, g.ny));
    }
    std::tie(g.marginal_x, g.marginal_y) = marginals(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, fmt::format("{}: {}", json_path.string(), e.what()));
  }
}

}  // namespace carto
