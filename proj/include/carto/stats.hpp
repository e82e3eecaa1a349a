#pragma once

#include <span>
#include <vector>

namespace carto::stats {

double mean(std::span<const double> x);

/// Unbiased (n - 1) variance; 0 for fewer than two values.
double sample_variance(std::span<const double> x);

/// NaN when either input is constant or fewer than two pairs are given.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks (ties share their mean rank).
double spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> average_ranks(std::span<const double> x);

}  // namespace carto::stats
