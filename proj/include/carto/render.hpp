#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carto/density.hpp"

namespace carto {

enum class Palette { Green, Blue, Red, Grey };
Palette palette_from_string(std::string_view s);

struct RenderStyle {
  int plot_width = 360;   // pixels of the density area
  int plot_height = 360;
  int margin = 56;
  int marginal_size = 56;  // height of the marginal strips, 0 disables them
  int levels = 9;          // colour levels including the blank background
  Palette palette = Palette::Green;
  std::string title;
  std::string x_label;
  std::string y_label;
};

struct Panel {
  DensityGrid grid;
  std::string title;
  std::vector<Eigen::Vector2d> markers;  // drawn as small crosses
};

/// SVG document for one density grid with marginals and overlay points.
/// Output depends only on the inputs.
std::string render_svg(const DensityGrid& grid, const RenderStyle& style);

/// Grid of panels laid out row-major; each panel is a
/// `<g class="panel" data-row=".." data-col="..">` element.
std::string render_panels_svg(const std::vector<Panel>& panels, std::size_t rows,
                              std::size_t cols, const RenderStyle& style);

void render(const DensityGrid& grid, const RenderStyle& style,
            const std::filesystem::path& out_path);
void render_panels(const std::vector<Panel>& panels, std::size_t rows, std::size_t cols,
                   const RenderStyle& style, const std::filesystem::path& out_path);

}  // namespace carto
