#pragma once

#include <eiv/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <utility>

namespace eiv {

/// Symmetric PSD operator on vectorized d1 x d2 matrices, stored as
/// scale * I, a diagonal, or a dense M x M matrix.
template <typename Scalar>
class CovOperator {
 public:
  enum class Kind { ScaledIdentity, Diagonal, Dense };

  CovOperator() : CovOperator(Kind::ScaledIdentity, 0, Scalar(0), {}, {}) {}

  static CovOperator scaled_identity(Index dim, Scalar scale) {
    if (dim < 0) throw InputError("CovOperator: negative dimension");
    return CovOperator(Kind::ScaledIdentity, dim, scale, {}, {});
  }

  static CovOperator diagonal(Vector<Scalar> diag) {
    require_finite(diag, "CovOperator::diagonal");
    const Index dim = diag.size();
    return CovOperator(Kind::Diagonal, dim, Scalar(0), std::move(diag), {});
  }

  static CovOperator dense(Matrix<Scalar> m) {
    require_finite(m, "CovOperator::dense");
    if (m.rows() != m.cols()) throw InputError("CovOperator: not square");
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(1e-10) * std::max(Scalar(1), m.cwiseAbs().maxCoeff())) {
      throw InputError("CovOperator: not symmetric");
    }
    const Index dim = m.rows();
    CovOperator op(Kind::Dense, dim, Scalar(0), {}, std::move(m));
    if (dim > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(op.dense_,
                                                       Eigen::EigenvaluesOnly);
      op.dense_extremes_ = {es.eigenvalues()(0), es.eigenvalues()(dim - 1)};
    }
    return op;
  }

  /// variance * corr^|i-j| over the vec index.
  static CovOperator toeplitz(Index dim, Scalar variance, Scalar corr) {
    if (std::abs(corr) >= Scalar(1)) {
      throw InputError("CovOperator::toeplitz: |corr| must be < 1");
    }
    Matrix<Scalar> m(dim, dim);
    for (Index i = 0; i < dim; ++i) {
      for (Index j = 0; j < dim; ++j) {
        m(i, j) = variance * std::pow(corr, Scalar(std::abs(i - j)));
      }
    }
    return dense(std::move(m));
  }

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }

  Vector<Scalar> apply(const Vector<Scalar>& x) const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        return scale_ * x;
      case Kind::Diagonal:
        return diag_.cwiseProduct(x);
      case Kind::Dense:
        return dense_ * x;
    }
    return x;
  }

  Matrix<Scalar> to_dense() const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        return scale_ * Matrix<Scalar>::Identity(dim_, dim_);
      case Kind::Diagonal:
        return diag_.asDiagonal();
      case Kind::Dense:
        return dense_;
    }
    return {};
  }

  /// Diagonal entries.
  Vector<Scalar> diagonal_entries() const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        return Vector<Scalar>::Constant(dim_, scale_);
      case Kind::Diagonal:
        return diag_;
      case Kind::Dense:
        return dense_.diagonal();
    }
    return {};
  }

  /// target -= this.
  void subtract_from(Matrix<Scalar>& target) const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        target.diagonal().array() -= scale_;
        break;
      case Kind::Diagonal:
        target.diagonal() -= diag_;
        break;
      case Kind::Dense:
        target -= dense_;
        break;
    }
  }

  Scalar lambda_min() const { return extremes().first; }
  Scalar lambda_max() const { return extremes().second; }
  Scalar op_norm() const {
    const auto [lo, hi] = extremes();
    return std::max(std::abs(lo), std::abs(hi));
  }

  bool is_zero() const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        return scale_ == Scalar(0);
      case Kind::Diagonal:
        return diag_.isZero(0);
      case Kind::Dense:
        return dense_.isZero(0);
    }
    return false;
  }

  /// A factor L with L L^T = this, used to sample N(0, this). Throws when
  /// the operator has an eigenvalue below -1e-10 * scale.
  Matrix<Scalar> sqrt_factor() const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        if (scale_ < Scalar(0)) throw InputError("covariance is not PSD");
        return std::sqrt(scale_) * Matrix<Scalar>::Identity(dim_, dim_);
      case Kind::Diagonal:
        if ((diag_.array() < Scalar(0)).any()) {
          throw InputError("covariance is not PSD");
        }
        return diag_.cwiseSqrt().asDiagonal();
      case Kind::Dense: {
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(dense_);
        const Scalar floor =
            -Scalar(1e-10) * std::max(Scalar(1), es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < floor) {
          throw InputError("covariance is not PSD");
        }
        return es.eigenvectors() *
               es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
      }
    }
    return {};
  }

 private:
  CovOperator(Kind kind, Index dim, Scalar scale, Vector<Scalar> diag,
              Matrix<Scalar> dense)
      : kind_(kind),
        dim_(dim),
        scale_(scale),
        diag_(std::move(diag)),
        dense_(std::move(dense)) {}

  std::pair<Scalar, Scalar> extremes() const {
    switch (kind_) {
      case Kind::ScaledIdentity:
        return {scale_, scale_};
      case Kind::Diagonal:
        if (dim_ == 0) return {Scalar(0), Scalar(0)};
        return {diag_.minCoeff(), diag_.maxCoeff()};
      case Kind::Dense:
        return dense_extremes_;
    }
    return {Scalar(0), Scalar(0)};
  }

  Kind kind_;
  Index dim_;
  Scalar scale_;
  Vector<Scalar> diag_;
  Matrix<Scalar> dense_;
  std::pair<Scalar, Scalar> dense_extremes_{Scalar(0), Scalar(0)};
};

enum class Corruption { Additive, Missing };

inline const char* to_string(Corruption c) {
  return c == Corruption::Additive ? "additive" : "missing";
}

/// Design covariance, measurement-error covariance, missing probability and
/// response noise level of the errors-in-variables model.
template <typename Scalar>
struct CovarianceSpec {
  CovOperator<Scalar> sigma_x;
  CovOperator<Scalar> sigma_w;
  Scalar rho = Scalar(0);
  Scalar sigma_eps = Scalar(0);

  void validate() const {
    if (!(sigma_x.lambda_min() > Scalar(0))) {
      throw InputError("CovarianceSpec: sigma_x must be positive definite");
    }
    if (sigma_w.dim() != sigma_x.dim()) {
      throw InputError("CovarianceSpec: sigma_w dimension mismatch");
    }
    if (sigma_w.lambda_min() < -Scalar(1e-12)) {
      throw InputError("CovarianceSpec: sigma_w must be PSD");
    }
    if (!(rho >= Scalar(0) && rho < Scalar(1))) {
      throw InputError("CovarianceSpec: rho must lie in [0, 1)");
    }
    if (!(sigma_eps >= Scalar(0))) {
      throw InputError("CovarianceSpec: sigma_eps must be >= 0");
    }
  }

  /// Sigma_x = I, Sigma_w = sigma_w^2 I on d1*d2 coordinates.
  static CovarianceSpec isotropic(Index dim, Scalar sigma_w, Scalar rho,
                                  Scalar sigma_eps) {
    return {CovOperator<Scalar>::scaled_identity(dim, Scalar(1)),
            CovOperator<Scalar>::scaled_identity(dim, sigma_w * sigma_w), rho,
            sigma_eps};
  }
};

}  // namespace eiv
