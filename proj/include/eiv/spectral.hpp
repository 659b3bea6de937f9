#pragma once

#include <eiv/types.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace eiv {

/// Singular values below this are treated as zero in rank decisions.
inline constexpr double kRankTolerance = 1e-10;

/// Thin factorization m = u * diag(sigma) * v^T with d = min(rows, cols)
/// factors, sigma nonincreasing.
///
/// Sign convention: each pair (u_j, v_j) is flipped so that the first entry
/// of u_j with magnitude above dummy precision is positive. Repeated singular
/// values still leave the basis of their subspace arbitrary; every spectral
/// function built on top of this (svt, the projections, grad_q) is invariant
/// to that choice because it assigns equal values to equal singular values.
template <typename Scalar>
struct SvdFactor {
  Matrix<Scalar> u;
  Vector<Scalar> sigma;
  Matrix<Scalar> v;

  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }

  /// u * diag(values) * v^T for a replacement spectrum.
  template <typename Derived>
  Matrix<Scalar> compose(const Eigen::MatrixBase<Derived>& values) const {
    return u * values.asDiagonal() * v.transpose();
  }

  Matrix<Scalar> reconstruct() const { return compose(sigma); }
};

template <typename Derived>
SvdFactor<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_finite(m, "svd");
  const Matrix<Scalar> a = m;
  Eigen::JacobiSVD<Matrix<Scalar>> solver(a, Eigen::ComputeThinU |
                                                 Eigen::ComputeThinV);
  SvdFactor<Scalar> f{solver.matrixU(), solver.singularValues(),
                      solver.matrixV()};
  const Scalar tiny = Eigen::NumTraits<Scalar>::dummy_precision();
  for (Index j = 0; j < f.u.cols(); ++j) {
    for (Index i = 0; i < f.u.rows(); ++i) {
      if (std::abs(f.u(i, j)) > tiny) {
        if (f.u(i, j) < Scalar(0)) {
          f.u.col(j) *= Scalar(-1);
          f.v.col(j) *= Scalar(-1);
        }
        break;
      }
    }
  }
  return f;
}

template <typename Scalar>
struct Norms {
  Scalar nuclear;
  Scalar frobenius;
  Scalar op;
};

template <typename Derived>
Norms<typename Derived::Scalar> norms(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_finite(m, "norms");
  const Matrix<Scalar> a = m;
  const Vector<Scalar> s =
      Eigen::JacobiSVD<Matrix<Scalar>>(a).singularValues();
  if (s.size() == 0) return {Scalar(0), Scalar(0), Scalar(0)};
  return {s.sum(), s.norm(), s(0)};
}

template <typename Derived>
typename Derived::Scalar nuclear_norm(const Eigen::MatrixBase<Derived>& m) {
  return norms(m).nuclear;
}

template <typename Derived>
typename Derived::Scalar op_norm(const Eigen::MatrixBase<Derived>& m) {
  return norms(m).op;
}

/// <<a, b>> = trace(a^T b).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar trace_inner(const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b) {
  require_same_shape(a, b, "trace_inner");
  return (a.array() * b.array()).sum();
}

template <typename Scalar>
Index numeric_rank(const Vector<Scalar>& sigma,
                   Scalar tol = Scalar(kRankTolerance)) {
  return static_cast<Index>((sigma.array() > tol).count());
}

template <typename Derived>
Index matrix_rank(const Eigen::MatrixBase<Derived>& m,
                  typename Derived::Scalar tol =
                      typename Derived::Scalar(kRankTolerance)) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> a = m;
  return numeric_rank<Scalar>(Eigen::JacobiSVD<Matrix<Scalar>>(a).singularValues(),
                              tol);
}

/// Singular value soft-thresholding: the minimizer of
/// 0.5 * ||X - m||_F^2 + threshold * ||X||_*.
template <typename Derived>
Matrix<typename Derived::Scalar> svt(const Eigen::MatrixBase<Derived>& m,
                                     typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  if (!(threshold >= Scalar(0))) {
    throw InputError("svt: threshold must be nonnegative");
  }
  const auto f = svd(m);
  return f.compose((f.sigma.array() - threshold).max(Scalar(0)).matrix());
}

/// Euclidean projection of a nonnegative vector onto
/// {w >= 0, sum(w) <= radius} by sort-and-threshold.
template <typename Scalar>
Vector<Scalar> project_l1_ball(const Vector<Scalar>& v, Scalar radius) {
  if (!(radius > Scalar(0))) {
    throw InputError("project_l1_ball: radius must be positive");
  }
  require_finite(v, "project_l1_ball");
  if ((v.array() < Scalar(0)).any()) {
    throw InputError("project_l1_ball: entries must be nonnegative");
  }
  if (v.sum() <= radius) return v;

  std::vector<Scalar> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  Scalar cumulative(0);
  Scalar shift(0);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const Scalar candidate = (cumulative - radius) / Scalar(k + 1);
    if (sorted[k] - candidate > Scalar(0)) shift = candidate;
  }
  return (v.array() - shift).max(Scalar(0)).matrix();
}

/// Frobenius projection onto {X : ||X||_* <= radius}.
template <typename Derived>
Matrix<typename Derived::Scalar> project_nuclear_ball(
    const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar radius) {
  using Scalar = typename Derived::Scalar;
  if (!(radius > Scalar(0))) {
    throw InputError("project_nuclear_ball: radius must be positive");
  }
  const auto f = svd(m);
  if (f.sigma.sum() <= radius) return m;
  return f.compose(project_l1_ball<Scalar>(f.sigma, radius));
}

/// delta = delta_j + delta_jc, where delta_j carries the top 2r singular
/// triples and delta_jc the rest. The two parts are trace-orthogonal.
template <typename Scalar>
struct RankSplit {
  Matrix<Scalar> delta_j;
  Matrix<Scalar> delta_jc;
  Index r;
};

template <typename Derived>
RankSplit<typename Derived::Scalar> rank_split(
    const Eigen::MatrixBase<Derived>& delta, Index r) {
  using Scalar = typename Derived::Scalar;
  if (r <= 0) throw InputError("rank_split: r must be positive");
  const auto f = svd(delta);
  const Index d = f.sigma.size();
  const Index keep = std::min<Index>(2 * r, d);
  Vector<Scalar> head = f.sigma;
  Vector<Scalar> tail = f.sigma;
  head.tail(d - keep).setZero();
  tail.head(keep).setZero();
  return {f.compose(head), f.compose(tail), r};
}

/// delta = delta_prime + delta_dblprime relative to the top-r singular
/// subspaces (U_r, V_r) of theta_star: delta_prime is the block of delta
/// orthogonal to both, (I - U_r U_r^T) delta (I - V_r V_r^T), so
/// rank(delta_dblprime) <= 2r.
template <typename Scalar>
struct SubspaceSplit {
  Matrix<Scalar> delta_prime;
  Matrix<Scalar> delta_dblprime;
};

template <typename DerivedA, typename DerivedB>
SubspaceSplit<typename DerivedA::Scalar> lemma4_split(
    const Eigen::MatrixBase<DerivedA>& theta_star,
    const Eigen::MatrixBase<DerivedB>& delta, Index r) {
  using Scalar = typename DerivedA::Scalar;
  require_same_shape(theta_star, delta, "lemma4_split");
  const Index d = std::min(delta.rows(), delta.cols());
  if (r <= 0 || r > d) {
    throw InputError("lemma4_split: r must lie in [1, min(d1, d2)]");
  }
  const Matrix<Scalar> full = delta;
  if (r == delta.rows() || r == delta.cols()) {
    return {Matrix<Scalar>::Zero(delta.rows(), delta.cols()), full};
  }
  const auto f = svd(theta_star);
  const Matrix<Scalar> ur = f.u.leftCols(r);
  const Matrix<Scalar> vr = f.v.leftCols(r);
  const Matrix<Scalar> left = full - ur * (ur.transpose() * full);
  const Matrix<Scalar> prime = left - (left * vr) * vr.transpose();
  return {prime, full - prime};
}

/// K_eta = { j : sigma_j >= eta } (0-based) and the nuclear mass left out.
template <typename Scalar>
struct KEta {
  std::vector<Index> indices;
  Scalar residual_nuclear;
};

template <typename Scalar>
KEta<Scalar> k_eta(const Vector<Scalar>& sigma_star, Scalar eta) {
  if (!(eta > Scalar(0))) throw InputError("k_eta: eta must be positive");
  KEta<Scalar> out{{}, Scalar(0)};
  for (Index j = 0; j < sigma_star.size(); ++j) {
    if (sigma_star(j) >= eta) {
      out.indices.push_back(j);
    } else {
      out.residual_nuclear += sigma_star(j);
    }
  }
  return out;
}

/// sum_j sigma_j^q; for q = 0 the numeric rank.
template <typename Scalar>
Scalar lq_radius(const Vector<Scalar>& sigma, Scalar q) {
  if (q == Scalar(0)) return Scalar(numeric_rank(sigma));
  return sigma.array().pow(q).sum();
}

/// m with its top-k singular triples removed: the projection onto the
/// subspace orthogonal to the leading k left and right singular vectors.
template <typename Derived>
Matrix<typename Derived::Scalar> tail_component(
    const Eigen::MatrixBase<Derived>& m, Index k) {
  auto f = svd(m);
  const Index drop = std::clamp<Index>(k, 0, f.sigma.size());
  f.sigma.head(drop).setZero();
  return f.reconstruct();
}

}  // namespace eiv
