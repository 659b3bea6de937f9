#pragma once

#include <eiv/covariance.hpp>
#include <eiv/penalty.hpp>
#include <eiv/spectral.hpp>
#include <eiv/types.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace eiv {

enum class GammaStorage { Auto, Dense, MatrixFree };

/// Auto storage keeps Gamma explicit up to this many vec coordinates.
inline constexpr Index kDenseGammaLimit = 4096;

/// Corrected quadratic-loss data (Gamma, Upsilon) on vectorized d1 x d2
/// matrices. Gamma is either an explicit symmetric M x M matrix or the
/// matrix-free form  scale * Z^T Z / N - correction  over the stored
/// N x M design. Immutable after construction.
template <typename Scalar>
class SurrogatePair {
 public:
  static SurrogatePair from_dense(Matrix<Scalar> gamma, Vector<Scalar> upsilon,
                                  Index d1, Index d2,
                                  Corruption corruption = Corruption::Additive) {
    if (gamma.rows() != d1 * d2 || gamma.cols() != d1 * d2 ||
        upsilon.size() != d1 * d2) {
      throw InputError("SurrogatePair: gamma/upsilon do not match d1*d2");
    }
    require_finite(gamma, "SurrogatePair gamma");
    require_finite(upsilon, "SurrogatePair upsilon");
    SurrogatePair pair(d1, d2, corruption);
    pair.gamma_ = (gamma + gamma.transpose()) / Scalar(2);
    pair.upsilon_ = std::move(upsilon);
    return pair;
  }

  /// Gamma = scale * Z^T Z / N - correction, Upsilon given.
  static SurrogatePair from_design(Matrix<Scalar> design, Scalar scale,
                                   CovOperator<Scalar> correction,
                                   Vector<Scalar> upsilon, Index d1, Index d2,
                                   Corruption corruption, GammaStorage storage) {
    const Index n = design.rows();
    const Index m = design.cols();
    if (n < 1) throw InputError("SurrogatePair: need at least one sample");
    if (m != d1 * d2 || correction.dim() != m || upsilon.size() != m) {
      throw InputError("SurrogatePair: design columns do not match d1*d2");
    }
    SurrogatePair pair(d1, d2, corruption);
    pair.upsilon_ = std::move(upsilon);
    const bool dense = storage == GammaStorage::Dense ||
                       (storage == GammaStorage::Auto && m <= kDenseGammaLimit);
    if (dense) {
      Matrix<Scalar> gram = Matrix<Scalar>::Zero(m, m);
      gram.template selfadjointView<Eigen::Lower>().rankUpdate(
          design.transpose(), scale / Scalar(n));
      gram.template triangularView<Eigen::StrictlyUpper>() = gram.transpose();
      correction.subtract_from(gram);
      pair.gamma_ = std::move(gram);
    } else {
      pair.matrix_free_ = true;
      pair.design_ = std::move(design);
      pair.scale_ = scale / Scalar(n);
      pair.correction_ = std::move(correction);
    }
    return pair;
  }

  Index rows() const { return d1_; }
  Index cols() const { return d2_; }
  Index dim() const { return d1_ * d2_; }
  Corruption corruption() const { return corruption_; }
  bool matrix_free() const { return matrix_free_; }
  const Vector<Scalar>& upsilon() const { return upsilon_; }

  Vector<Scalar> apply_gamma(const Vector<Scalar>& x) const {
    if (!matrix_free_) return gamma_ * x;
    return scale_ * (design_.transpose() * (design_ * x)) - correction_.apply(x);
  }

  template <typename Derived>
  Matrix<Scalar> apply_gamma(const Eigen::MatrixBase<Derived>& theta) const {
    return unvec(apply_gamma(vec(theta)), d1_, d2_);
  }

  /// Explicit Gamma (materialized on demand for matrix-free storage).
  Matrix<Scalar> gamma_dense() const {
    if (!matrix_free_) return gamma_;
    Matrix<Scalar> gram = scale_ * (design_.transpose() * design_);
    correction_.subtract_from(gram);
    return gram;
  }

 private:
  SurrogatePair(Index d1, Index d2, Corruption corruption)
      : d1_(d1), d2_(d2), corruption_(corruption) {
    if (d1 < 1 || d2 < 1) throw InputError("SurrogatePair: empty shape");
  }

  Index d1_;
  Index d2_;
  Corruption corruption_;
  bool matrix_free_ = false;
  Matrix<Scalar> gamma_;
  Matrix<Scalar> design_;
  Scalar scale_ = Scalar(0);
  CovOperator<Scalar> correction_;
  Vector<Scalar> upsilon_;
};

/// Stacks samples into an N x M design whose rows are vec(Z_i)^T.
template <typename Scalar>
Matrix<Scalar> stack_samples(const std::vector<Matrix<Scalar>>& samples) {
  if (samples.empty()) throw InputError("stack_samples: no samples");
  const Index d1 = samples.front().rows();
  const Index d2 = samples.front().cols();
  Matrix<Scalar> design(static_cast<Index>(samples.size()), d1 * d2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].rows() != d1 || samples[i].cols() != d2) {
      throw InputError("stack_samples: inconsistent sample shapes");
    }
    design.row(static_cast<Index>(i)) = vec(samples[i]).transpose();
  }
  return design;
}

namespace detail {
template <typename Scalar>
void check_design(const Matrix<Scalar>& design, const Vector<Scalar>& y,
                  Index d1, Index d2) {
  if (design.rows() != y.size()) {
    throw InputError("surrogate: number of samples differs between Z and y");
  }
  if (design.rows() < 1) throw InputError("surrogate: need N >= 1");
  if (design.cols() != d1 * d2) {
    throw InputError("surrogate: design width differs from d1*d2");
  }
  require_finite(design, "surrogate design");
  require_finite(y, "surrogate response");
}
}  // namespace detail

/// Additive noise: Gamma = Z^T Z / N - Sigma_w, Upsilon = Z^T y / N.
template <typename Scalar>
SurrogatePair<Scalar> build_additive(Matrix<Scalar> design,
                                     const Vector<Scalar>& y,
                                     CovOperator<Scalar> sigma_w, Index d1,
                                     Index d2,
                                     GammaStorage storage = GammaStorage::Auto) {
  detail::check_design(design, y, d1, d2);
  if (sigma_w.dim() != design.cols()) {
    throw InputError("build_additive: sigma_w dimension mismatch");
  }
  const Scalar n = Scalar(design.rows());
  Vector<Scalar> upsilon = design.transpose() * y / n;
  return SurrogatePair<Scalar>::from_design(std::move(design), Scalar(1),
                                            std::move(sigma_w), std::move(upsilon),
                                            d1, d2, Corruption::Additive, storage);
}

template <typename Scalar>
SurrogatePair<Scalar> build_additive(const std::vector<Matrix<Scalar>>& samples,
                                     const Vector<Scalar>& y,
                                     CovOperator<Scalar> sigma_w,
                                     GammaStorage storage = GammaStorage::Auto) {
  if (samples.size() != static_cast<std::size_t>(y.size())) {
    throw InputError("build_additive: number of samples differs between Z and y");
  }
  const Index d1 = samples.front().rows();
  const Index d2 = samples.front().cols();
  return build_additive(stack_samples(samples), y, std::move(sigma_w), d1, d2,
                        storage);
}

/// Entrywise mask over the N x M design; true marks a missing entry.
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Missing data with known rate rho: with Zt = Z / (1 - rho),
/// Gamma = Zt^T Zt / N - rho * diag(Zt^T Zt / N), Upsilon = Zt^T y / N.
/// Masked entries are forced to zero whatever value the design holds.
template <typename Scalar>
SurrogatePair<Scalar> build_missing(Matrix<Scalar> design, const MissingMask& mask,
                                    const Vector<Scalar>& y, Scalar rho, Index d1,
                                    Index d2,
                                    GammaStorage storage = GammaStorage::Auto) {
  if (!(rho >= Scalar(0) && rho < Scalar(1))) {
    throw InputError("build_missing: rho must lie in [0, 1)");
  }
  if (mask.size() != 0) {
    if (mask.rows() != design.rows() || mask.cols() != design.cols()) {
      throw InputError("build_missing: mask shape differs from design");
    }
    design = mask.select(Scalar(0), design.array()).matrix();
  }
  detail::check_design(design, y, d1, d2);
  const Scalar n = Scalar(design.rows());
  const Scalar inflate = Scalar(1) / (Scalar(1) - rho);
  Vector<Scalar> upsilon = inflate * (design.transpose() * y) / n;
  const Scalar scale = inflate * inflate;
  Vector<Scalar> diag = rho * scale * design.colwise().squaredNorm().transpose() / n;
  return SurrogatePair<Scalar>::from_design(
      std::move(design), scale, CovOperator<Scalar>::diagonal(std::move(diag)),
      std::move(upsilon), d1, d2, Corruption::Missing, storage);
}

/// Uncorrected plug-in pair Gamma = Z^T Z / N, Upsilon = Z^T y / N.
template <typename Scalar>
SurrogatePair<Scalar> build_naive(Matrix<Scalar> design, const Vector<Scalar>& y,
                                  Index d1, Index d2, Corruption corruption,
                                  GammaStorage storage = GammaStorage::Auto) {
  detail::check_design(design, y, d1, d2);
  const Scalar n = Scalar(design.rows());
  Vector<Scalar> upsilon = design.transpose() * y / n;
  const Index m = design.cols();
  return SurrogatePair<Scalar>::from_design(
      std::move(design), Scalar(1), CovOperator<Scalar>::scaled_identity(m, Scalar(0)),
      std::move(upsilon), d1, d2, corruption, storage);
}

/// Observed fraction of missing entries, an estimate of rho.
inline double estimate_missing_rate(const MissingMask& mask) {
  if (mask.size() == 0) return 0.0;
  return static_cast<double>(mask.count()) / static_cast<double>(mask.size());
}

/// L(theta) = 0.5 vec(theta)^T Gamma vec(theta) - Upsilon^T vec(theta).
template <typename Scalar, typename Derived>
Scalar loss(const SurrogatePair<Scalar>& pair,
            const Eigen::MatrixBase<Derived>& theta) {
  if (theta.rows() != pair.rows() || theta.cols() != pair.cols()) {
    throw InputError("loss: theta shape differs from surrogate");
  }
  const Vector<Scalar> x = vec(theta);
  return Scalar(0.5) * x.dot(pair.apply_gamma(x)) - pair.upsilon().dot(x);
}

template <typename Scalar, typename Derived>
Matrix<Scalar> grad_loss(const SurrogatePair<Scalar>& pair,
                         const Eigen::MatrixBase<Derived>& theta) {
  if (theta.rows() != pair.rows() || theta.cols() != pair.cols()) {
    throw InputError("grad_loss: theta shape differs from surrogate");
  }
  const Vector<Scalar> x = vec(theta);
  return unvec(pair.apply_gamma(x) - pair.upsilon(), pair.rows(), pair.cols());
}

/// First-order Taylor remainder T(theta, theta') of the loss, evaluated from
/// its definition.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar taylor_error(const SurrogatePair<Scalar>& pair,
                    const Eigen::MatrixBase<DerivedA>& theta,
                    const Eigen::MatrixBase<DerivedB>& theta_prime) {
  require_same_shape(theta, theta_prime, "taylor_error");
  return loss(pair, theta) - loss(pair, theta_prime) -
         trace_inner(grad_loss(pair, theta_prime), theta - theta_prime);
}

/// Taylor remainder of the modified loss L + Q.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar modified_taylor(const SurrogatePair<Scalar>& pair,
                       const SpectralPenalty<Scalar>& pen,
                       const Eigen::MatrixBase<DerivedA>& theta,
                       const Eigen::MatrixBase<DerivedB>& theta_prime) {
  const Matrix<Scalar> a = theta;
  const Matrix<Scalar> b = theta_prime;
  return taylor_error(pair, a, b) + spectral_q(pen, a) - spectral_q(pen, b) -
         trace_inner(grad_q(pen, b), a - b);
}

/// Upper estimate of the largest |eigenvalue| of Gamma from `iterations`
/// power steps.
template <typename Scalar>
Scalar gamma_power_bound(const SurrogatePair<Scalar>& pair, int iterations = 30,
                         std::uint64_t seed = 0x5eed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector<Scalar> x(pair.dim());
  for (Index i = 0; i < x.size(); ++i) x(i) = Scalar(normal(rng));
  x.normalize();
  Scalar estimate(0);
  for (int k = 0; k < iterations; ++k) {
    Vector<Scalar> y = pair.apply_gamma(x);
    estimate = y.norm();
    if (estimate == Scalar(0)) return Scalar(0);
    x = y / estimate;
  }
  return estimate;
}

}  // namespace eiv
