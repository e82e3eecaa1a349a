#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "carto/ingest.hpp"
#include "carto/kernels.hpp"

namespace carto {

struct CaOptions {
  double tol = 1e-10;
  int max_restarts = 500;
  std::uint64_t seed = 42;
  kernels::Exec exec = kernels::Exec::Parallel;
};

/// Correspondence analysis of the follow matrix. Rows and columns without
/// any entry are removed before the decomposition and listed in
/// `dropped_users` / `dropped_items`.
struct CorrespondenceDecomposition {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<std::string> dropped_users;
  std::vector<std::string> dropped_items;

  Eigen::VectorXd row_masses;       // r, sums to 1
  Eigen::VectorXd col_masses;       // c, sums to 1
  Eigen::VectorXd singular_values;  // descending
  Eigen::MatrixXd user_coords;      // standard coordinates, users x n_dims
  Eigen::MatrixXd item_coords;      // standard coordinates, items x n_dims
  Eigen::VectorXd variance_share;   // d^2 / total inertia
  double total_inertia = 0.0;

  int solver_restarts = 0;
  long solver_matvecs = 0;
  double solver_residual = 0.0;

  Eigen::Index n_dims() const noexcept { return singular_values.size(); }
  /// Coordinates scaled by the singular values.
  Eigen::MatrixXd item_principal() const;
  Eigen::MatrixXd user_principal() const;
};

/// P = A / total, S = D_r^{-1/2} (P - r c^T) D_c^{-1/2} = U D V^T,
/// user coordinates D_r^{-1/2} U, item coordinates D_c^{-1/2} V.
/// S is never formed: the solver works on the sparse matrix plus a rank-one
/// correction.
///
/// Throws DegenerateInput when the total inertia vanishes (P = r c^T) and
/// Convergence when the solver fails.
CorrespondenceDecomposition correspondence_analysis(
    const BipartiteFollowGraph& graph, Eigen::Index n_dims,
    const CaOptions& options = {});

/// Flips dimensions so that the mean item coordinate of the alphabetically
/// first party is <= 0 on each axis.
void canonicalize_signs(CorrespondenceDecomposition& decomp,
                        const PoliticianMeta& meta);

struct DimensionScreen {
  Eigen::Index index = 0;  // 0-based
  double spearman_vs_degree = 0.0;
  double pearson_vs_degree = 0.0;
  bool popularity_flagged = false;
  std::map<std::string, double> party_variance;
  std::size_t parties_above_threshold = 0;
  bool spread_flagged = false;

  bool flagged() const noexcept { return popularity_flagged || spread_flagged; }
};

struct DimensionScreenReport {
  std::vector<DimensionScreen> dims;
  double popularity_threshold = 0.5;
  double variance_threshold = 0.2;
  std::vector<std::string> warnings;
};

/// Correlates each dimension's item coordinates with follower counts and
/// flags |Spearman| >= threshold.
DimensionScreenReport popularity_screen(const CorrespondenceDecomposition& decomp,
                                        const PoliticianMeta& meta,
                                        double flag_threshold = 0.5);

/// Adds per-party coordinate variances to `report`. A dimension is flagged
/// when at least all-but-one of the parties exceed `variance_threshold`.
void party_spread_screen(DimensionScreenReport& report,
                         const CorrespondenceDecomposition& decomp,
                         const PoliticianMeta& meta,
                         double variance_threshold = 0.2);

/// Two lowest-index dimensions carrying no flag.
std::pair<Eigen::Index, Eigen::Index> select_dimensions(
    const DimensionScreenReport& report);

}  // namespace carto
