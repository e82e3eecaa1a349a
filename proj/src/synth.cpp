#include "carto/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"

namespace carto {

namespace {

constexpr std::uint64_t kItemStream = 1;
constexpr std::uint64_t kUserStream = 2;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_mixture(const std::vector<GaussianComponent>& mix, const char* what) {
  if (mix.empty()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("{} mixture is empty", what));
  }
  double total = 0.0;
  for (const auto& c : mix) {
    if (!(c.weight > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{} mixture weight {} must be positive", what, c.weight));
    }
    total += c.weight;
    const Eigen::Matrix2d sym = 0.5 * (c.cov + c.cov.transpose());
    if ((c.cov - sym).cwiseAbs().maxCoeff() > 1e-12 ||
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(sym).eigenvalues().minCoeff() <= 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{} mixture component '{}' covariance is not positive definite",
                              what, c.label));
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} mixture weights sum to {}, not 1", what, total));
  }
}

Eigen::Vector2d draw(const GaussianComponent& c, const Eigen::Matrix2d& chol,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  const double z0 = z(rng);
  const double z1 = z(rng);
  return c.mean + chol * Eigen::Vector2d(z0, z1);
}

std::size_t pick(const std::vector<GaussianComponent>& mix, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < mix.size(); ++k) {
    acc += mix[k].weight;
    if (u < acc) return k;
  }
  return mix.size() - 1;
}

}  // namespace

SyntheticConfig SyntheticConfig::two_cluster() {
  SyntheticConfig c;
  Eigen::Matrix2d user_cov = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d item_cov = Eigen::Vector2d(0.3 * 0.3, 0.5 * 0.5).asDiagonal();
  c.user_mixture = {{"left", {-0.375, 0.0}, user_cov, 0.5}, {"right", {0.375, 0.0}, user_cov, 0.5}};
  c.item_mixture = {{"left", {-0.375, 0.0}, item_cov, 0.5}, {"right", {0.375, 0.0}, item_cov, 0.5}};
  return c;
}

SyntheticConfig SyntheticConfig::six_party(std::size_t n_users, std::size_t n_items) {
  SyntheticConfig c;
  c.n_users = n_users;
  c.n_items = n_items;
  struct Party {
    const char* label;
    double x, y, weight;
  };
  constexpr Party kParties[] = {{"pa", -1.1, -0.3, 0.12}, {"pb", -0.6, 0.45, 0.13},
                                {"pc", -0.1, -0.55, 0.24}, {"pd", 0.4, 0.05, 0.23},
                                {"pe", 0.9, -0.35, 0.12}, {"pf", 1.0, 1.0, 0.16}};
  const Eigen::Matrix2d user_cov = Eigen::Matrix2d::Identity() * 0.45 * 0.45;
  const Eigen::Matrix2d item_cov = Eigen::Matrix2d::Identity() * 0.15 * 0.15;
  for (const auto& p : kParties) {
    c.user_mixture.push_back({p.label, {p.x, p.y}, user_cov, p.weight});
    c.item_mixture.push_back({p.label, {p.x, p.y}, item_cov, p.weight});
  }
  c.alpha_mean = -0.5;
  return c;
}

void SyntheticConfig::validate() const {
  if (n_users == 0 || n_items == 0) {
    throw Error(ErrorCode::InvalidArgument, "n_users and n_items must be positive");
  }
  if (n_items > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "too many items");
  check_mixture(user_mixture, "user");
  check_mixture(item_mixture, "item");
  if (!(popularity_scale >= 0.0) || !std::isfinite(alpha_mean)) {
    throw Error(ErrorCode::InvalidArgument, "popularity_scale must be >= 0");
  }
  if (!(distance_exponent > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "distance_exponent must be positive");
  }
  if (!(casual_fraction >= 0.0 && casual_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "casual_fraction must lie in [0, 1]");
  }
}

double follow_probability(double alpha, double distance, double exponent) {
  const double eta = alpha - std::pow(distance, exponent);
  return 1.0 / (1.0 + std::exp(-eta));
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ kind) ^ index);
}

SyntheticData generate(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n_u = cfg.n_users;
  const std::size_t n_i = cfg.n_items;
  SyntheticData out;
  out.user_positions.resize(static_cast<Eigen::Index>(n_u), 2);
  out.item_positions.resize(static_cast<Eigen::Index>(n_i), 2);
  out.alpha.resize(static_cast<Eigen::Index>(n_i));
  out.user_component.resize(n_u);
  out.item_component.resize(n_i);
  out.casual.assign(n_u, 0);

  std::vector<Eigen::Matrix2d> user_chol, item_chol;
  for (const auto& c : cfg.user_mixture) user_chol.push_back(c.cov.llt().matrixL());
  for (const auto& c : cfg.item_mixture) item_chol.push_back(c.cov.llt().matrixL());

  for (std::size_t j = 0; j < n_i; ++j) {
    std::mt19937_64 rng(stream_seed(cfg.seed, kItemStream, j));
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n_i);
    const std::size_t k = pick(cfg.item_mixture, u);
    out.item_component[j] = k;
    const auto j_idx = static_cast<Eigen::Index>(j);
    out.item_positions.row(j_idx) = draw(cfg.item_mixture[k], item_chol[k], rng).transpose();
    std::normal_distribution<double> z;
    out.alpha(j_idx) = cfg.alpha_mean + cfg.popularity_scale * z(rng);
  }

  std::vector<std::vector<std::uint32_t>> follows(n_u);
  std::vector<double> expected(n_u, 0.0);
  const auto user_block = [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(cfg.seed, kUserStream, i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t k = pick(cfg.user_mixture, unif(rng));
    out.user_component[i] = k;
    const Eigen::Vector2d x = draw(cfg.user_mixture[k], user_chol[k], rng);
    const auto i_idx = static_cast<Eigen::Index>(i);
    out.user_positions.row(i_idx) = x.transpose();
    const bool casual = unif(rng) < cfg.casual_fraction;
    out.casual[i] = casual ? 1 : 0;
    auto& row = follows[i];
    double exp_deg = 0.0;
    for (std::size_t j = 0; j < n_i; ++j) {
      const auto j_idx = static_cast<Eigen::Index>(j);
      double p;
      if (casual) {
        const double eta = cfg.casual_sensitivity * out.alpha(j_idx) + cfg.casual_offset;
        p = 1.0 / (1.0 + std::exp(-eta));
      } else {
        const double d = (x - out.item_positions.row(j_idx).transpose()).norm();
        p = follow_probability(out.alpha(j_idx), d, cfg.distance_exponent);
      }
      exp_deg += p;
      if (unif(rng) < p) row.push_back(static_cast<std::uint32_t>(j));
    }
    expected[i] = exp_deg;
  };
  if (cfg.exec == kernels::Exec::Serial) {
    for (std::size_t i = 0; i < n_u; ++i) user_block(i);
  } else {
#pragma omp parallel for schedule(dynamic, 256)
    for (std::size_t i = 0; i < n_u; ++i) user_block(i);
  }

  CsrPattern adj;
  adj.n_rows = n_u;
  adj.n_cols = n_i;
  adj.row_ptr.assign(1, 0);
  adj.row_ptr.reserve(n_u + 1);
  std::vector<std::uint64_t> degree(n_i, 0);
  std::size_t sparse_users = 0;
  for (std::size_t i = 0; i < n_u; ++i) {
    for (auto j : follows[i]) ++degree[j];
    adj.col.insert(adj.col.end(), follows[i].begin(), follows[i].end());
    adj.row_ptr.push_back(adj.col.size());
    if (expected[i] < static_cast<double>(cfg.min_follow)) ++sparse_users;
  }
  if (2 * sparse_users > n_u) {
    out.warnings.push_back(fmt::format(
        "{} of {} users have expected degree below min_follow={}; filtering would "
        "remove most of the graph", sparse_users, n_u, cfg.min_follow));
    spdlog::warn("{}", out.warnings.back());
  }

  const int uw = static_cast<int>(std::to_string(n_u).size());
  const int iw = static_cast<int>(std::to_string(n_i).size());
  std::vector<std::string> users(n_u), items(n_i);
  for (std::size_t i = 0; i < n_u; ++i) users[i] = fmt::format("u{:0{}}", i, uw);
  std::vector<PoliticianRecord> records;
  records.reserve(n_i);
  for (std::size_t j = 0; j < n_i; ++j) {
    items[j] = fmt::format("mp{:0{}}", j, iw);
    records.push_back({items[j], cfg.item_mixture[out.item_component[j]].label, degree[j]});
  }
  out.graph = BipartiteFollowGraph(std::move(users), std::move(items), std::move(adj));
  out.meta = PoliticianMeta(std::move(records));
  return out;
}

ProcrustesResult procrustes_align(const Eigen::MatrixXd& recovered,
                                  const Eigen::MatrixXd& planted) {
  if (recovered.rows() != planted.rows() || recovered.cols() != planted.cols()) {
    throw Error(ErrorCode::InvalidArgument, "procrustes inputs differ in shape");
  }
  if (recovered.rows() < 3) {
    throw Error(ErrorCode::InvalidArgument, "procrustes needs at least 3 rows");
  }
  const Eigen::RowVectorXd mx = recovered.colwise().mean();
  const Eigen::RowVectorXd my = planted.colwise().mean();
  const Eigen::MatrixXd x = recovered.rowwise() - mx;
  const Eigen::MatrixXd y = planted.rowwise() - my;
  const Eigen::JacobiSVD<Eigen::MatrixXd> ysvd(y);
  const auto& ys = ysvd.singularValues();
  if (ys(0) <= 0.0 || ys(ys.size() - 1) <= 1e-12 * ys(0)) {
    throw Error(ErrorCode::DegenerateInput, "planted configuration is rank deficient");
  }
  const double xx = x.squaredNorm();
  if (!(xx > 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "recovered configuration is a single point");
  }
  const double yy = y.squaredNorm();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double trace = svd.singularValues().sum();
  ProcrustesResult r;
  r.rotation = svd.matrixU() * svd.matrixV().transpose();
  r.scale = trace / xx;
  r.translation = my - r.scale * mx * r.rotation;
  r.similarity = std::clamp(trace * trace / (xx * yy), 0.0, 1.0);
  return r;
}

}  // namespace carto
