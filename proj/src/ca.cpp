#include "carto/ca.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/lanczos.hpp"
#include "carto/stats.hpp"

namespace carto {

namespace {

using kernels::Exec;

// S = Q - sqrt(r) sqrt(c)^T with q_ij = a_ij / sqrt(d_i e_j), where d and e
// are the row and column degrees.
class ResidualOperator final : public LinearOperator {
 public:
  ResidualOperator(const CsrPattern& a, const CsrPattern& at,
                   const std::vector<double>& row_deg,
                   const std::vector<double>& col_deg, double total, Exec exec)
      : a_(a), at_(at), exec_(exec) {
    inv_sqrt_d_.resize(row_deg.size());
    sqrt_r_.resize(row_deg.size());
    for (std::size_t i = 0; i < row_deg.size(); ++i) {
      inv_sqrt_d_[i] = 1.0 / std::sqrt(row_deg[i]);
      sqrt_r_[i] = std::sqrt(row_deg[i] / total);
    }
    inv_sqrt_e_.resize(col_deg.size());
    sqrt_c_.resize(col_deg.size());
    for (std::size_t j = 0; j < col_deg.size(); ++j) {
      inv_sqrt_e_[j] = 1.0 / std::sqrt(col_deg[j]);
      sqrt_c_[j] = std::sqrt(col_deg[j] / total);
    }
    scratch_rows_.resize(row_deg.size());
    scratch_cols_.resize(col_deg.size());
  }

  Eigen::Index rows() const override { return static_cast<Eigen::Index>(a_.n_rows); }
  Eigen::Index cols() const override { return static_cast<Eigen::Index>(a_.n_cols); }

  void apply(std::span<const double> x, std::span<double> y) const override {
    for (std::size_t j = 0; j < x.size(); ++j) scratch_cols_[j] = x[j] * inv_sqrt_e_[j];
    kernels::pattern_matvec(a_, scratch_cols_, y, exec_);
    const double proj = kernels::dot(sqrt_c_, x, exec_);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = y[i] * inv_sqrt_d_[i] - sqrt_r_[i] * proj;
    }
  }

  void apply_transpose(std::span<const double> x, std::span<double> y) const override {
    for (std::size_t i = 0; i < x.size(); ++i) scratch_rows_[i] = x[i] * inv_sqrt_d_[i];
    kernels::pattern_matvec(at_, scratch_rows_, y, exec_);
    const double proj = kernels::dot(sqrt_r_, x, exec_);
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] = y[j] * inv_sqrt_e_[j] - sqrt_c_[j] * proj;
    }
  }

 private:
  const CsrPattern& a_;
  const CsrPattern& at_;
  Exec exec_;
  std::vector<double> inv_sqrt_d_, sqrt_r_, inv_sqrt_e_, sqrt_c_;
  mutable std::vector<double> scratch_rows_, scratch_cols_;
};

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr double kDegenerateInertia = 1e-12;

}  // namespace

Eigen::MatrixXd CorrespondenceDecomposition::item_principal() const {
  return item_coords * singular_values.asDiagonal();
}

Eigen::MatrixXd CorrespondenceDecomposition::user_principal() const {
  return user_coords * singular_values.asDiagonal();
}

CorrespondenceDecomposition correspondence_analysis(
    const BipartiteFollowGraph& graph, Eigen::Index n_dims,
    const CaOptions& options) {
  const auto& full = graph.adjacency();
  if (full.nnz() == 0) {
    throw Error(ErrorCode::DegenerateInput, "follow matrix has no entries");
  }

  CorrespondenceDecomposition out;
  const auto col_deg_full = full.column_degrees();
  std::vector<std::uint32_t> col_map(full.n_cols, UINT32_MAX);
  std::vector<double> col_deg;
  for (std::size_t j = 0; j < full.n_cols; ++j) {
    if (col_deg_full[j] == 0) {
      out.dropped_items.push_back(graph.items()[j]);
      continue;
    }
    col_map[j] = static_cast<std::uint32_t>(out.item_ids.size());
    out.item_ids.push_back(graph.items()[j]);
    col_deg.push_back(static_cast<double>(col_deg_full[j]));
  }

  CsrPattern a;
  a.n_cols = out.item_ids.size();
  std::vector<double> row_deg;
  for (std::size_t r = 0; r < full.n_rows; ++r) {
    const auto row = full.row(r);
    if (row.empty()) {
      out.dropped_users.push_back(graph.users()[r]);
      continue;
    }
    out.user_ids.push_back(graph.users()[r]);
    row_deg.push_back(static_cast<double>(row.size()));
    for (auto c : row) a.col.push_back(col_map[c]);
    a.row_ptr.push_back(a.col.size());
  }
  a.n_rows = out.user_ids.size();
  if (!out.dropped_items.empty()) {
    spdlog::warn("correspondence analysis: dropped {} items without followers",
                 out.dropped_items.size());
  }
  if (!out.dropped_users.empty()) {
    spdlog::warn("correspondence analysis: dropped {} users without follows",
                 out.dropped_users.size());
  }

  const auto n_rows = static_cast<Eigen::Index>(a.n_rows);
  const auto n_cols = static_cast<Eigen::Index>(a.n_cols);

  const double total = static_cast<double>(a.nnz());
  out.row_masses.resize(n_rows);
  for (Eigen::Index i = 0; i < n_rows; ++i) out.row_masses(i) = row_deg[i] / total;
  out.col_masses.resize(n_cols);
  for (Eigen::Index j = 0; j < n_cols; ++j) out.col_masses(j) = col_deg[j] / total;

  // Total inertia = sum_ij p_ij^2 / (r_i c_j) - 1 = sum_edges 1 / (d_i e_j) - 1.
  CompensatedSum chi;
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    for (auto c : a.row(r)) chi.add(1.0 / (row_deg[r] * col_deg[c]));
  }
  chi.add(-1.0);
  out.total_inertia = chi.value();
  if (out.total_inertia <= kDegenerateInertia) {
    throw Error(ErrorCode::DegenerateInput,
                fmt::format("standardized residuals vanish (total inertia {:.3e}); "
                            "the follow matrix is exactly its independence model",
                            out.total_inertia));
  }

  if (n_dims < 1 || n_dims > std::min(n_rows, n_cols) - 1) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("n_dims must lie in [1, {}] for a {} x {} matrix",
                            std::min(n_rows, n_cols) - 1, n_rows, n_cols));
  }

  const CsrPattern at = a.transposed();
  ResidualOperator op(a, at, row_deg, col_deg, total, options.exec);
  SvdOptions svd_opts;
  svd_opts.rank = n_dims;
  svd_opts.tol = options.tol;
  svd_opts.max_restarts = options.max_restarts;
  svd_opts.seed = options.seed;
  svd_opts.exec = options.exec;
  const auto svd = truncated_svd(op, svd_opts);
  if (svd.values(0) * svd.values(0) <= kDegenerateInertia) {
    throw Error(ErrorCode::DegenerateInput, "leading singular value vanishes");
  }

  out.singular_values = svd.values;
  out.variance_share = svd.values.array().square() / out.total_inertia;
  out.user_coords = out.row_masses.array().rsqrt().matrix().asDiagonal() * svd.left;
  out.item_coords = out.col_masses.array().rsqrt().matrix().asDiagonal() * svd.right;
  out.solver_restarts = svd.restarts;
  out.solver_matvecs = svd.matvecs;
  out.solver_residual = svd.relative_residual;
  spdlog::info("correspondence analysis: {} x {} matrix, {} nonzeros, {} restarts, "
               "{} mat-vecs, relative residual {:.2e}",
               n_rows, n_cols, a.nnz(), svd.restarts, svd.matvecs,
               svd.relative_residual);
  return out;
}

void canonicalize_signs(CorrespondenceDecomposition& decomp,
                        const PoliticianMeta& meta) {
  std::map<std::string, std::vector<Eigen::Index>> by_party;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(decomp.item_ids.size()); ++j) {
    by_party[meta.at(decomp.item_ids[j]).party].push_back(j);
  }
  if (by_party.empty()) return;
  const auto& members = by_party.begin()->second;
  for (Eigen::Index k = 0; k < decomp.n_dims(); ++k) {
    double sum = 0.0;
    for (auto j : members) sum += decomp.item_coords(j, k);
    if (sum > 0.0) {
      decomp.item_coords.col(k) *= -1.0;
      decomp.user_coords.col(k) *= -1.0;
    }
  }
}

DimensionScreenReport popularity_screen(const CorrespondenceDecomposition& decomp,
                                        const PoliticianMeta& meta,
                                        double flag_threshold) {
  DimensionScreenReport report;
  report.popularity_threshold = flag_threshold;
  std::vector<double> followers;
  followers.reserve(decomp.item_ids.size());
  for (const auto& id : decomp.item_ids) {
    followers.push_back(static_cast<double>(meta.at(id).follower_count));
  }
  for (Eigen::Index k = 0; k < decomp.n_dims(); ++k) {
    DimensionScreen dim;
    dim.index = k;
    const Eigen::VectorXd coords = decomp.item_coords.col(k);
    std::span<const double> x(coords.data(), static_cast<std::size_t>(coords.size()));
    dim.spearman_vs_degree = stats::spearman(x, followers);
    dim.pearson_vs_degree = stats::pearson(x, followers);
    if (std::isnan(dim.spearman_vs_degree)) {
      report.warnings.push_back(fmt::format(
          "dimension {}: correlation with follower counts undefined "
          "(constant input); not flagged", k + 1));
      spdlog::warn(report.warnings.back());
    } else {
      dim.popularity_flagged = std::abs(dim.spearman_vs_degree) >= flag_threshold;
    }
    report.dims.push_back(std::move(dim));
  }
  return report;
}

void party_spread_screen(DimensionScreenReport& report,
                         const CorrespondenceDecomposition& decomp,
                         const PoliticianMeta& meta, double variance_threshold) {
  report.variance_threshold = variance_threshold;
  std::map<std::string, std::vector<Eigen::Index>> by_party;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(decomp.item_ids.size()); ++j) {
    by_party[meta.at(decomp.item_ids[j]).party].push_back(j);
  }
  for (const auto& [party, members] : by_party) {
    if (members.size() == 1) {
      report.warnings.push_back(
          fmt::format("party {} has a single item; its variance is 0", party));
    }
  }
  if (report.dims.size() != static_cast<std::size_t>(decomp.n_dims())) {
    throw Error(ErrorCode::InvalidArgument,
                "screen report does not match the decomposition");
  }
  const std::size_t needed = std::max<std::size_t>(1, by_party.size() - 1);
  for (auto& dim : report.dims) {
    dim.party_variance.clear();
    dim.parties_above_threshold = 0;
    for (const auto& [party, members] : by_party) {
      std::vector<double> values;
      values.reserve(members.size());
      for (auto j : members) values.push_back(decomp.item_coords(j, dim.index));
      const double var = stats::sample_variance(values);
      dim.party_variance[party] = var;
      if (var > variance_threshold) ++dim.parties_above_threshold;
    }
    dim.spread_flagged = dim.parties_above_threshold >= needed;
  }
}

std::pair<Eigen::Index, Eigen::Index> select_dimensions(
    const DimensionScreenReport& report) {
  std::vector<Eigen::Index> free;
  for (const auto& dim : report.dims) {
    if (!dim.flagged()) free.push_back(dim.index);
  }
  if (free.size() < 2) {
    throw Error(ErrorCode::Selection,
                fmt::format("only {} unflagged dimension(s) among {}; rerun with "
                            "a larger n_dims", free.size(), report.dims.size()));
  }
  return {free[0], free[1]};
}

}  // namespace carto
