#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carto/ingest.hpp"
#include "carto/kernels.hpp"

namespace carto {

struct GaussianComponent {
  std::string label;  // party label of items drawn from this component
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  double weight = 1.0;
};

/// Latent-space follow model. Regular users follow item j with probability
/// logistic(alpha_j - |x_i - x_j|^exponent). A fraction of "casual" users
/// ignores distance and follows by popularity only:
/// logistic(casual_sensitivity * alpha_j + casual_offset).
struct SyntheticConfig {
  std::size_t n_users = 20000;
  std::size_t n_items = 60;
  std::vector<GaussianComponent> user_mixture;
  std::vector<GaussianComponent> item_mixture;
  double popularity_scale = 1.0;  // sd of alpha_j
  double alpha_mean = 0.0;
  double distance_exponent = 2.0;
  double casual_fraction = 0.08;
  double casual_sensitivity = 4.0;
  double casual_offset = -3.0;
  std::size_t min_follow = 3;  // only used for the sparsity warning
  std::uint64_t seed = 42;
  kernels::Exec exec = kernels::Exec::Parallel;

  /// Two clusters at (+-0.375, 0): users isotropic sd 1, items sd (0.3, 0.5).
  static SyntheticConfig two_cluster();
  /// Six parties spread over the plane; used for full-pipeline worlds.
  static SyntheticConfig six_party(std::size_t n_users, std::size_t n_items);
  /// Throws InvalidArgument when weights do not sum to 1, covariances are
  /// not positive definite, or counts are zero.
  void validate() const;
};

struct SyntheticData {
  BipartiteFollowGraph graph;
  PoliticianMeta meta;  // follower_count = generated degree
  Eigen::MatrixX2d user_positions;
  Eigen::MatrixX2d item_positions;
  Eigen::VectorXd alpha;
  std::vector<std::size_t> user_component;
  std::vector<std::size_t> item_component;
  std::vector<char> casual;
  std::vector<std::string> warnings;
};

double follow_probability(double alpha, double distance, double exponent = 2.0);

/// Items are split across item-mixture components in proportion to their
/// weights (stratified by index); users draw their component at random.
/// Every entity has its own random stream keyed by (seed, kind, index), so
/// the output does not depend on the thread count.
SyntheticData generate(const SyntheticConfig& config);

/// Counter-based seeding for per-entity streams.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t index);

struct ProcrustesResult {
  double similarity = 0.0;       // 1 - normalised residual, in [0, 1]
  Eigen::MatrixXd rotation;      // orthogonal, may include a reflection
  double scale = 1.0;
  Eigen::RowVectorXd translation;  // planted ~ scale * recovered * rotation + translation
};

/// Orthogonal Procrustes with scaling of `recovered` onto `planted`.
/// similarity = (sum of singular values of Xc^T Yc)^2 / (|Xc|^2 |Yc|^2)
/// on centred data, which is symmetric in its arguments.
ProcrustesResult procrustes_align(const Eigen::MatrixXd& recovered,
                                  const Eigen::MatrixXd& planted);

}  // namespace carto
