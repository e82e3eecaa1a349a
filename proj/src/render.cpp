#include "carto/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

using Rgb = std::array<int, 3>;

Rgb base_colour(Palette p) {
  switch (p) {
    case Palette::Green: return {27, 120, 55};
    case Palette::Blue: return {33, 102, 172};
    case Palette::Red: return {178, 24, 43};
    case Palette::Grey: return {64, 64, 64};
  }
  return {0, 0, 0};
}

std::string level_colour(Palette p, int level, int levels) {
  const Rgb base = base_colour(p);
  const double t = static_cast<double>(level) / (levels - 1);
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<int>(std::lround(255.0 * (1.0 - t) + base[k] * t));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
}

std::string escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

struct Frame {
  double x = 0;  // top-left of the density area
  double y = 0;
  double w = 0;
  double h = 0;
};

int panel_width(const RenderStyle& s) {
  return s.margin * 2 + s.plot_width + s.marginal_size;
}
int panel_height(const RenderStyle& s) {
  return s.margin * 2 + s.plot_height + s.marginal_size;
}

void draw_cells(std::string& out, const DensityGrid& g, const RenderStyle& s, const Frame& f) {
  const double peak = g.values.empty() ? 0.0 : *std::max_element(g.values.begin(), g.values.end());
  if (!(peak > 0.0)) return;
  const double cw = f.w / g.nx;
  const double ch = f.h / g.ny;
  const int levels = std::max(2, s.levels);
  out += "<g class=\"density\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    const double top = f.y + f.h - static_cast<double>(iy + 1) * ch;
    std::size_t ix = 0;
    while (ix < g.nx) {
      const int level = std::min(levels - 1,
          static_cast<int>(std::floor(g.at(ix, iy) / peak * (levels - 1) + 0.5)));
      std::size_t run = ix + 1;
      while (run < g.nx &&
             std::min(levels - 1, static_cast<int>(std::floor(
                 g.at(run, iy) / peak * (levels - 1) + 0.5))) == level) {
        ++run;
      }
      if (level > 0) {
        out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                           num(f.x + ix * cw), num(top), num((run - ix) * cw), num(ch),
                           level_colour(s.palette, level, levels));
      }
      ix = run;
    }
  }
  out += "</g>\n";
}

void draw_marginals(std::string& out, const DensityGrid& g, const RenderStyle& s,
                    const Frame& f) {
  if (s.marginal_size <= 0) return;
  const std::string colour = level_colour(s.palette, 1, 2);
  const double gap = 4.0;
  const double size = s.marginal_size - gap;
  const double mx = g.marginal_x.empty() ? 0.0
                    : *std::max_element(g.marginal_x.begin(), g.marginal_x.end());
  const double my = g.marginal_y.empty() ? 0.0
                    : *std::max_element(g.marginal_y.begin(), g.marginal_y.end());
  if (mx > 0.0) {
    std::string pts;
    const double base = f.y - gap;
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const double x = f.x + (ix + 0.5) * f.w / g.nx;
      pts += fmt::format("{},{} ", num(x), num(base - g.marginal_x[ix] / mx * size));
    }
    pts.pop_back();
    out += fmt::format("<polyline class=\"marginal-x\" fill=\"none\" stroke=\"{}\" "
                       "stroke-width=\"1.5\" points=\"{}\"/>\n", colour, pts);
  }
  if (my > 0.0) {
    std::string pts;
    const double base = f.x + f.w + gap;
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
      const double y = f.y + f.h - (iy + 0.5) * f.h / g.ny;
      pts += fmt::format("{},{} ", num(base + g.marginal_y[iy] / my * size), num(y));
    }
    pts.pop_back();
    out += fmt::format("<polyline class=\"marginal-y\" fill=\"none\" stroke=\"{}\" "
                       "stroke-width=\"1.5\" points=\"{}\"/>\n", colour, pts);
  }
}

void draw_axes(std::string& out, const DensityGrid& g, const RenderStyle& s, const Frame& f) {
  out += fmt::format("<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
                     "fill=\"none\" stroke=\"#000000\"/>\n",
                     num(f.x), num(f.y), num(f.w), num(f.h));
  constexpr int kTicks = 5;
  for (int k = 0; k < kTicks; ++k) {
    const double t = static_cast<double>(k) / (kTicks - 1);
    const double x = f.x + t * f.w;
    const double y = f.y + f.h - t * f.h;
    const double vx = g.bounds.x_min + t * (g.bounds.x_max - g.bounds.x_min);
    const double vy = g.bounds.y_min + t * (g.bounds.y_max - g.bounds.y_min);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>\n",
                       num(x), num(f.y + f.h), num(f.y + f.h + 4));
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
                       num(x), num(f.y + f.h + 16), num(vx));
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>\n",
                       num(f.x - 4), num(y), num(f.x));
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                       num(f.x - 6), num(y + 3), num(vy));
  }
  if (!s.x_label.empty()) {
    out += fmt::format("<text class=\"x-label\" x=\"{}\" y=\"{}\" font-size=\"12\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       num(f.x + f.w / 2), num(f.y + f.h + 34), escape(s.x_label));
  }
  if (!s.y_label.empty()) {
    const double lx = f.x - 40;
    const double ly = f.y + f.h / 2;
    out += fmt::format("<text class=\"y-label\" x=\"{0}\" y=\"{1}\" font-size=\"12\" "
                       "text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">{2}</text>\n",
                       num(lx), num(ly), escape(s.y_label));
  }
}

double to_px(double v, double lo, double hi, double origin, double extent) {
  return origin + (v - lo) / (hi - lo) * extent;
}

void draw_points(std::string& out, const DensityGrid& g, const Frame& f,
                 const std::vector<Eigen::Vector2d>& markers) {
  const auto& b = g.bounds;
  auto px = [&](const Eigen::Vector2d& p) {
    return std::pair{to_px(p.x(), b.x_min, b.x_max, f.x, f.w),
                     f.y + f.h - to_px(p.y(), b.y_min, b.y_max, 0.0, f.h)};
  };
  if (!markers.empty()) {
    out += "<g class=\"markers\" stroke=\"#2166ac\" stroke-width=\"1\">\n";
    for (const auto& m : markers) {
      if (!b.contains(m)) continue;
      const auto [x, y] = px(m);
      out += fmt::format("<path d=\"M{} {}L{} {}M{} {}L{} {}\"/>\n", num(x - 3), num(y - 3),
                         num(x + 3), num(y + 3), num(x - 3), num(y + 3), num(x + 3), num(y - 3));
    }
    out += "</g>\n";
  }
  if (!g.overlays.empty()) {
    out += "<g class=\"overlays\">\n";
    for (const auto& o : g.overlays) {
      if (!b.contains(o.position)) continue;
      const auto [x, y] = px(o.position);
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#ffffff\" "
                         "stroke=\"#000000\"/>\n", num(x), num(y));
      out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n",
                         num(x + 6), num(y - 6), escape(o.label));
    }
    out += "</g>\n";
  }
}

void draw_panel(std::string& out, const Panel& p, const RenderStyle& s, std::size_t row,
                std::size_t col) {
  const double ox = static_cast<double>(col) * panel_width(s);
  const double oy = static_cast<double>(row) * panel_height(s);
  const Frame f{ox + s.margin, oy + s.margin + s.marginal_size,
                static_cast<double>(s.plot_width), static_cast<double>(s.plot_height)};
  out += fmt::format("<g class=\"panel\" data-row=\"{}\" data-col=\"{}\">\n", row, col);
  if (!p.title.empty()) {
    out += fmt::format("<text class=\"panel-title\" x=\"{}\" y=\"{}\" font-size=\"13\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       num(f.x + f.w / 2), num(oy + 20), escape(p.title));
  }
  draw_cells(out, p.grid, s, f);
  draw_marginals(out, p.grid, s, f);
  draw_axes(out, p.grid, s, f);
  draw_points(out, p.grid, f, p.markers);
  out += "</g>\n";
}

std::string document(const std::vector<Panel>& panels, std::size_t rows, std::size_t cols,
                     const RenderStyle& s) {
  if (rows == 0 || cols == 0 || panels.size() > rows * cols) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} panels do not fit a {}x{} layout", panels.size(), rows, cols));
  }
  if (s.plot_width <= 0 || s.plot_height <= 0 || s.levels < 2) {
    throw Error(ErrorCode::InvalidArgument, "invalid render style");
  }
  const int title_h = s.title.empty() ? 0 : 28;
  const auto width = static_cast<long>(cols) * panel_width(s);
  const auto height = static_cast<long>(rows) * panel_height(s) + title_h;
  std::string out;
  out += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                     "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" "
                     "data-rows=\"{2}\" data-cols=\"{3}\">\n", width, height, rows, cols);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
  if (title_h > 0) {
    out += fmt::format("<text class=\"figure-title\" x=\"{}\" y=\"20\" font-size=\"15\" "
                       "text-anchor=\"middle\">{}</text>\n", width / 2, escape(s.title));
  }
  out += fmt::format("<g transform=\"translate(0 {})\">\n", title_h);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    draw_panel(out, panels[i], s, i / cols, i % cols);
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace

Palette palette_from_string(std::string_view s) {
  if (s == "green") return Palette::Green;
  if (s == "blue") return Palette::Blue;
  if (s == "red") return Palette::Red;
  if (s == "grey" || s == "gray") return Palette::Grey;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown palette '{}'", s));
}

std::string render_svg(const DensityGrid& grid, const RenderStyle& style) {
  std::vector<Panel> one{{grid, "", {}}};
  return document(one, 1, 1, style);
}

std::string render_panels_svg(const std::vector<Panel>& panels, std::size_t rows,
                              std::size_t cols, const RenderStyle& style) {
  return document(panels, rows, cols, style);
}

void render(const DensityGrid& grid, const RenderStyle& style,
            const std::filesystem::path& out_path) {
  io::write_text(out_path, render_svg(grid, style));
}

void render_panels(const std::vector<Panel>& panels, std::size_t rows, std::size_t cols,
                   const RenderStyle& style, const std::filesystem::path& out_path) {
  io::write_text(out_path, render_panels_svg(panels, rows, cols, style));
}

}  // namespace carto
