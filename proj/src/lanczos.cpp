#include "carto/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "carto/error.hpp"

namespace carto {

namespace {

using kernels::Exec;

constexpr double kBreakdown = 1e-13;

std::span<double> col_span(Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

double norm(std::span<const double> v, Exec exec) {
  return std::sqrt(kernels::dot(v, v, exec));
}

void scale(std::span<double> v, double factor) {
  for (double& x : v) x *= factor;
}

// Twice-iterated classical Gram-Schmidt; returns the summed coefficients.
void orthogonalise(const Eigen::MatrixXd& basis, Eigen::Index k,
                   std::span<double> v, std::vector<double>& coeffs,
                   Exec exec) {
  std::vector<double> pass(static_cast<std::size_t>(std::max<Eigen::Index>(k, 1)));
  coeffs.assign(pass.size(), 0.0);
  for (int it = 0; it < 2; ++it) {
    kernels::project_out(basis, k, v, pass, exec);
    for (Eigen::Index i = 0; i < k; ++i) coeffs[i] += pass[i];
  }
}

class RandomUnit {
 public:
  explicit RandomUnit(std::uint64_t seed) : gen_(seed) {}

  // Random unit vector orthogonal to basis(:, 0..k), written to column k.
  void fill(Eigen::MatrixXd& basis, Eigen::Index k, Exec exec) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> coeffs;
    auto v = col_span(basis, k);
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (double& x : v) x = dist(gen_);
      const double before = norm(v, exec);
      orthogonalise(basis, k, v, coeffs, exec);
      const double after = norm(v, exec);
      if (after > 1e-8 * before) {
        scale(v, 1.0 / after);
        return;
      }
    }
    throw Error(ErrorCode::Convergence,
                "could not extend the Krylov basis with a new direction");
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

TruncatedSvd truncated_svd(const LinearOperator& op, const SvdOptions& options) {
  const Eigen::Index m = op.rows();
  const Eigen::Index n = op.cols();
  const Eigen::Index nmin = std::min(m, n);
  const Eigen::Index rank = options.rank;
  if (rank < 1 || rank > nmin) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("rank {} outside [1, {}]", rank, nmin));
  }
  Eigen::Index w = options.subspace > 0
                       ? options.subspace
                       : std::max<Eigen::Index>(2 * rank + 10, 20);
  w = std::clamp(w, rank, nmin);
  const Exec exec = options.exec;

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, w + 1);
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(m, w);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(w, w);
  RandomUnit random(options.seed);
  random.fill(V, 0, exec);

  TruncatedSvd out;
  std::vector<double> coeffs;
  std::vector<double> r(static_cast<std::size_t>(n));
  double norm_est = 0.0;
  Eigen::Index start = 0;

  for (;;) {
    double beta_last = 0.0;
    for (Eigen::Index j = start; j < w; ++j) {
      auto p = col_span(U, j);
      op.apply(col_span(V, j), p);
      ++out.matvecs;
      orthogonalise(U, j, p, coeffs, exec);
      for (Eigen::Index i = 0; i < j; ++i) B(i, j) = coeffs[i];
      const double alpha = norm(p, exec);
      norm_est = std::max(norm_est, alpha);
      if (alpha <= kBreakdown * norm_est || alpha == 0.0) {
        B(j, j) = 0.0;
        random.fill(U, j, exec);
      } else {
        B(j, j) = alpha;
        scale(p, 1.0 / alpha);
      }

      op.apply_transpose(col_span(U, j), r);
      ++out.matvecs;
      orthogonalise(V, j + 1, r, coeffs, exec);
      const double beta = norm(r, exec);
      norm_est = std::max(norm_est, beta);
      const bool broke = beta <= kBreakdown * norm_est || beta == 0.0;
      if (j + 1 < w) {
        if (broke) {
          random.fill(V, j + 1, exec);
        } else {
          std::transform(r.begin(), r.end(), V.col(j + 1).data(),
                         [beta](double x) { return x / beta; });
        }
      } else {
        beta_last = broke ? 0.0 : beta;
        if (broke) {
          V.col(w).setZero();
        } else {
          std::transform(r.begin(), r.end(), V.col(w).data(),
                         [beta](double x) { return x / beta; });
        }
      }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::MatrixXd& P = svd.matrixU();
    const Eigen::MatrixXd& Q = svd.matrixV();

    bool converged = true;
    const double s1 = s(0);
    if (s1 > 0.0) {
      for (Eigen::Index i = 0; i < rank; ++i) {
        const double res = beta_last * std::abs(P(w - 1, i));
        if (res > options.tol * s1) converged = false;
      }
    }

    if (converged) {
      out.values = s.head(rank);
      out.left.resize(m, rank);
      out.right.resize(n, rank);
      for (Eigen::Index i = 0; i < rank; ++i) {
        kernels::combine_columns(U, w, {P.col(i).data(), static_cast<std::size_t>(w)},
                                 col_span(out.left, i), exec);
        kernels::combine_columns(V, w, {Q.col(i).data(), static_cast<std::size_t>(w)},
                                 col_span(out.right, i), exec);
      }
      break;
    }
    if (out.restarts >= options.max_restarts) {
      double worst = 0.0;
      for (Eigen::Index i = 0; i < rank; ++i) {
        worst = std::max(worst, beta_last * std::abs(P(w - 1, i)));
      }
      throw Error(ErrorCode::Convergence,
                  fmt::format("truncated SVD did not converge after {} restarts "
                              "(residual norm {:.3e}, relative {:.3e})",
                              out.restarts, worst, worst / s1));
    }

    // Thick restart: keep the leading Ritz vectors and continue the
    // bidiagonalisation from the last residual direction.
    const Eigen::Index keep = std::min(w - 1, rank + (w - rank) / 2);
    Eigen::MatrixXd U_keep(m, keep);
    Eigen::MatrixXd V_keep(n, keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
      kernels::combine_columns(U, w, {P.col(i).data(), static_cast<std::size_t>(w)},
                               col_span(U_keep, i), exec);
      kernels::combine_columns(V, w, {Q.col(i).data(), static_cast<std::size_t>(w)},
                               col_span(V_keep, i), exec);
    }
    U.leftCols(keep) = U_keep;
    V.col(keep) = V.col(w);
    V.leftCols(keep) = V_keep;
    B.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) B(i, i) = s(i);
    if (beta_last == 0.0) random.fill(V, keep, exec);
    start = keep;
    ++out.restarts;
  }

  // Deterministic sign per pair.
  for (Eigen::Index i = 0; i < rank; ++i) {
    Eigen::Index arg = 0;
    out.right.col(i).cwiseAbs().maxCoeff(&arg);
    if (out.right(arg, i) < 0.0) {
      out.right.col(i) *= -1.0;
      out.left.col(i) *= -1.0;
    }
  }

  // Report the true residual of the returned triplets.
  double worst = 0.0;
  std::vector<double> av(static_cast<std::size_t>(m));
  std::vector<double> atu(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < rank; ++i) {
    op.apply(col_span(out.right, i), av);
    op.apply_transpose(col_span(out.left, i), atu);
    out.matvecs += 2;
    double e = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double d = av[k] - out.values(i) * out.left(k, i);
      e += d * d;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = atu[k] - out.values(i) * out.right(k, i);
      e += d * d;
    }
    worst = std::max(worst, std::sqrt(e));
  }
  out.relative_residual = out.values(0) > 0.0 ? worst / out.values(0) : 0.0;
  return out;
}

}  // namespace carto
