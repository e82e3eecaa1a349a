#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "carto/kernels.hpp"

namespace carto {

struct Bounds {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  bool contains(const Eigen::Vector2d& p) const noexcept {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

/// Bounding box of the points (or several point sets) padded by `padding`
/// times the extent on each side. A zero extent is padded by `fallback`.
Bounds auto_bounds(std::span<const std::vector<Eigen::Vector2d>> sets,
                   double padding = 0.05, double fallback = 1.0);
Bounds auto_bounds(std::span<const Eigen::Vector2d> points, double padding = 0.05,
                   double fallback = 1.0);

enum class Estimator { Kde, Histogram };
std::string_view to_string(Estimator e) noexcept;
Estimator estimator_from_string(std::string_view s);

struct Overlay {
  std::string label;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

/// Row-major density on an nx by ny grid: values[iy * nx + ix].
struct DensityGrid {
  Bounds bounds;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;
  Estimator estimator = Estimator::Kde;
  Eigen::Vector2d bandwidth = Eigen::Vector2d::Zero();  // zero for histograms
  std::size_t n_points = 0;
  std::size_t n_outside = 0;
  std::vector<double> marginal_x;
  std::vector<double> marginal_y;
  std::vector<Overlay> overlays;

  double cell_width() const noexcept { return (bounds.x_max - bounds.x_min) / nx; }
  double cell_height() const noexcept { return (bounds.y_max - bounds.y_min) / ny; }
  double cell_area() const noexcept { return cell_width() * cell_height(); }
  double x_center(std::size_t ix) const noexcept {
    return bounds.x_min + (static_cast<double>(ix) + 0.5) * cell_width();
  }
  double y_center(std::size_t iy) const noexcept {
    return bounds.y_min + (static_cast<double>(iy) + 0.5) * cell_height();
  }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
  double total_mass() const;
};

struct DensityOptions {
  std::optional<Bounds> bounds;  // auto when empty
  std::size_t nx = 200;
  std::size_t ny = 200;
  /// Per-axis kernel bandwidth; Scott's rule when empty.
  std::optional<Eigen::Vector2d> bandwidth;
  Estimator estimator = Estimator::Kde;
  double min_inside = 0.99;  // required share of points inside explicit bounds
  kernels::Exec exec = kernels::Exec::Parallel;
};

/// sigma * n^(-1/6) per axis, sigma the sample standard deviation.
Eigen::Vector2d scott_bandwidth(std::span<const Eigen::Vector2d> points);

/// Kernel density with cell-averaged Gaussian kernels, normalised so that
/// sum(values) * cell_area == 1. Kernels are truncated at 9 bandwidths.
DensityGrid density2d(std::span<const Eigen::Vector2d> points,
                      const DensityOptions& options = {});

/// Sums over y (resp. x) times the cell size; each integrates to 1.
std::pair<std::vector<double>, std::vector<double>> marginals(const DensityGrid& grid);

/// Mass of a unit Gaussian kernel centred at `center` falling into each of
/// the `n` cells [lo + i w, lo + (i+1) w), per unit mass.
std::vector<double> cell_kernel_mass(double center, double h, double lo, double w,
                                     std::size_t n);

struct Mode {
  std::size_t ix = 0;
  std::size_t iy = 0;
  double value = 0.0;
  /// Drop from this peak to the highest saddle leading to a higher peak,
  /// relative to the peak value; 1 for the global maximum.
  double prominence = 0.0;
};

/// Strict local maxima over the 8-neighbourhood whose value is at least
/// `min_relative` of the global maximum and whose prominence is at least
/// `min_prominence`, sorted by decreasing value.
std::vector<Mode> find_modes(const DensityGrid& grid, double min_relative = 0.1,
                             double min_prominence = 0.0);

/// Prominence separating distinct modes from ripples of an undersmoothed
/// estimate.
inline constexpr double kModeProminence = 0.25;

void export_grid(const DensityGrid& grid, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);
DensityGrid import_grid(const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path);

}  // namespace carto
