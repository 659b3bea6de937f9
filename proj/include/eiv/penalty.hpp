#pragma once

#include <eiv/spectral.hpp>
#include <eiv/types.hpp>

#include <cmath>
#include <string>

namespace eiv {

enum class PenaltyKind { Nuclear, Scad, Mcp };

inline const char* to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::Nuclear:
      return "nuclear";
    case PenaltyKind::Scad:
      return "scad";
    case PenaltyKind::Mcp:
      return "mcp";
  }
  return "unknown";
}

/// Scalar penalty p_lambda = q_lambda + lambda * |t| with concave part q.
///
/// `shape` is SCAD's a (> 2) or MCP's b (> 0); unused for the nuclear norm.
/// q'(0) is defined as 0, the two-sided limit for both SCAD and MCP.
template <typename Scalar>
class PenaltyFamily {
 public:
  static PenaltyFamily nuclear(Scalar lambda) {
    return PenaltyFamily(PenaltyKind::Nuclear, lambda, Scalar(0));
  }
  static PenaltyFamily scad(Scalar lambda, Scalar a = Scalar(3.7)) {
    if (!(a > Scalar(2))) throw InputError("SCAD requires a > 2");
    return PenaltyFamily(PenaltyKind::Scad, lambda, a);
  }
  static PenaltyFamily mcp(Scalar lambda, Scalar b = Scalar(2)) {
    if (!(b > Scalar(0))) throw InputError("MCP requires b > 0");
    return PenaltyFamily(PenaltyKind::Mcp, lambda, b);
  }

  PenaltyKind kind() const { return kind_; }
  Scalar lambda() const { return lambda_; }
  Scalar shape() const { return shape_; }

  /// Same family and shape at a different regularization level.
  PenaltyFamily with_lambda(Scalar lambda) const {
    return PenaltyFamily(kind_, lambda, shape_);
  }

  /// Weak-convexity constant: q' has slope bounded below by -mu.
  Scalar mu() const {
    switch (kind_) {
      case PenaltyKind::Scad:
        return Scalar(1) / (shape_ - Scalar(1));
      case PenaltyKind::Mcp:
        return Scalar(1) / shape_;
      case PenaltyKind::Nuclear:
        break;
    }
    return Scalar(0);
  }

  Scalar p(Scalar t) const { return q(t) + lambda_ * std::abs(t); }

  Scalar q(Scalar t) const {
    const Scalar s = std::abs(t);
    const Scalar lam = lambda_;
    switch (kind_) {
      case PenaltyKind::Scad:
        if (s <= lam) return Scalar(0);
        if (s <= shape_ * lam) {
          return -(s - lam) * (s - lam) / (Scalar(2) * (shape_ - Scalar(1)));
        }
        return (shape_ + Scalar(1)) * lam * lam / Scalar(2) - lam * s;
      case PenaltyKind::Mcp:
        if (s <= shape_ * lam) return -s * s / (Scalar(2) * shape_);
        return shape_ * lam * lam / Scalar(2) - lam * s;
      case PenaltyKind::Nuclear:
        break;
    }
    return Scalar(0);
  }

  Scalar q_prime(Scalar t) const {
    const Scalar s = std::abs(t);
    const Scalar sign = t < Scalar(0) ? Scalar(-1) : Scalar(1);
    const Scalar lam = lambda_;
    switch (kind_) {
      case PenaltyKind::Scad:
        if (s <= lam) return Scalar(0);
        if (s <= shape_ * lam) return -sign * (s - lam) / (shape_ - Scalar(1));
        return -sign * lam;
      case PenaltyKind::Mcp:
        if (s <= shape_ * lam) return -t / shape_;
        return -sign * lam;
      case PenaltyKind::Nuclear:
        break;
    }
    return Scalar(0);
  }

 private:
  PenaltyFamily(PenaltyKind kind, Scalar lambda, Scalar shape)
      : kind_(kind), lambda_(lambda), shape_(shape) {
    if (!(lambda > Scalar(0))) throw InputError("penalty lambda must be > 0");
  }

  PenaltyKind kind_;
  Scalar lambda_;
  Scalar shape_;
};

/// Penalty lifted to matrices through their singular values.
template <typename Scalar>
struct SpectralPenalty {
  PenaltyFamily<Scalar> family;

  Scalar lambda() const { return family.lambda(); }
  Scalar mu() const { return family.mu(); }
};

template <typename Scalar>
SpectralPenalty<Scalar> lift(const PenaltyFamily<Scalar>& family) {
  return SpectralPenalty<Scalar>{family};
}

/// P(m) = sum_j p(sigma_j(m)).
template <typename Scalar, typename Derived>
Scalar spectral_p(const SpectralPenalty<Scalar>& pen,
                  const Eigen::MatrixBase<Derived>& m) {
  const Matrix<Scalar> a = m;
  const Vector<Scalar> s = Eigen::JacobiSVD<Matrix<Scalar>>(a).singularValues();
  Scalar total(0);
  for (Index j = 0; j < s.size(); ++j) total += pen.family.p(s(j));
  return total;
}

/// Q(m) = sum_j q(sigma_j(m)); P = Q + lambda * ||.||_*.
template <typename Scalar, typename Derived>
Scalar spectral_q(const SpectralPenalty<Scalar>& pen,
                  const Eigen::MatrixBase<Derived>& m) {
  if (pen.family.kind() == PenaltyKind::Nuclear) return Scalar(0);
  const Matrix<Scalar> a = m;
  const Vector<Scalar> s = Eigen::JacobiSVD<Matrix<Scalar>>(a).singularValues();
  Scalar total(0);
  for (Index j = 0; j < s.size(); ++j) total += pen.family.q(s(j));
  return total;
}

/// Gradient of Q: u * diag(q'(sigma)) * v^T from the thin SVD.
template <typename Scalar, typename Derived>
Matrix<Scalar> grad_q(const SpectralPenalty<Scalar>& pen,
                      const Eigen::MatrixBase<Derived>& m) {
  if (pen.family.kind() == PenaltyKind::Nuclear) {
    return Matrix<Scalar>::Zero(m.rows(), m.cols());
  }
  const auto f = svd(m);
  Vector<Scalar> slopes(f.sigma.size());
  for (Index j = 0; j < slopes.size(); ++j) {
    slopes(j) = pen.family.q_prime(f.sigma(j));
  }
  return f.compose(slopes);
}

}  // namespace eiv
