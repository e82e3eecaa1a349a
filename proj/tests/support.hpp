#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "carto/ingest.hpp"
#include "carto/io.hpp"
#include "carto/sparse.hpp"

namespace carto::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            fmt::format("carto_{}_{}_{}", tag, static_cast<long>(::getpid()), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline BipartiteFollowGraph graph_from_dense(const Eigen::MatrixXd& a) {
  std::vector<std::string> users, items;
  for (Eigen::Index i = 0; i < a.rows(); ++i) users.push_back(fmt::format("u{}", i));
  for (Eigen::Index j = 0; j < a.cols(); ++j) items.push_back(fmt::format("i{}", j));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  return {users, items,
          CsrPattern::from_pairs(static_cast<std::size_t>(a.rows()),
                                 static_cast<std::size_t>(a.cols()), std::move(pairs))};
}

/// Dense correspondence analysis straight from the definition: full SVD of
/// S = Dr^-1/2 (P - r c^T) Dc^-1/2, standard coordinates Dr^-1/2 U, Dc^-1/2 V.
struct DenseCa {
  Eigen::VectorXd r, c, d;
  Eigen::MatrixXd s, f, g;
};

inline DenseCa dense_ca(const Eigen::MatrixXd& a) {
  DenseCa o;
  const Eigen::MatrixXd p = a / a.sum();
  o.r = p.rowwise().sum();
  o.c = p.colwise().sum().transpose();
  const Eigen::VectorXd ri = o.r.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd ci = o.c.cwiseSqrt().cwiseInverse();
  o.s = ri.asDiagonal() * (p - o.r * o.c.transpose()) * ci.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(o.s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  o.d = svd.singularValues();
  o.f = ri.asDiagonal() * svd.matrixU();
  o.g = ci.asDiagonal() * svd.matrixV();
  return o;
}

/// Largest |a - s*b| over columns, with s = +-1 chosen per column.
inline double max_signed_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index k) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double plus = (a.col(j) - b.col(j)).cwiseAbs().maxCoeff();
    const double minus = (a.col(j) + b.col(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

/// Random 0/1 matrix with no empty row or column.
inline Eigen::MatrixXd random_pattern(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                      double density) {
  std::bernoulli_distribution coin(density);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = coin(rng) ? 1.0 : 0.0;
  }
  std::uniform_int_distribution<Eigen::Index> pick_col(0, cols - 1), pick_row(0, rows - 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (a.row(i).sum() == 0.0) a(i, pick_col(rng)) = 1.0;
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (a.col(j).sum() == 0.0) a(pick_row(rng), j) = 1.0;
  }
  return a;
}

/// Smallest relative gap between the first k+1 singular values; a tiny gap
/// makes the corresponding singular vectors ill-defined.
inline double min_relative_gap(const Eigen::VectorXd& d, Eigen::Index k) {
  double gap = INFINITY;
  for (Eigen::Index j = 0; j < k && j + 1 < d.size(); ++j) {
    gap = std::min(gap, (d(j) - d(j + 1)) / d(0));
  }
  return gap;
}

inline void write_file(const fs::path& path, const std::string& text) { io::write_text(path, text); }

}  // namespace carto::testing
