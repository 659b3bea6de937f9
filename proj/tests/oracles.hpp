#pragma once

// Independent reference implementations used only by the tests and the
// acceptance suite.

#include <eiv/types.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace eiv::oracle {

/// argmin_{s >= 0} 0.5 (s - sigma)^2 + t s by comparing the objective at the
/// two KKT candidates (boundary s = 0 and interior s = sigma - t).
inline double scalar_shrink(double sigma, double t) {
  auto f = [&](double s) { return 0.5 * (s - sigma) * (s - sigma) + t * s; };
  double best = 0.0;
  const double interior = sigma - t;
  if (interior >= 0.0 && f(interior) < f(best)) best = interior;
  return best;
}

/// SVT through the symmetric eigendecomposition of [[0, m], [m^T, 0]],
/// whose eigenpairs are (+-sigma, (u; +-v) / sqrt(2)). The off-diagonal block
/// of each eigenprojector is basis independent, so repeated values are fine.
inline Matrix<double> svt(const Matrix<double>& m, double t) {
  const Index r = m.rows();
  const Index c = m.cols();
  Matrix<double> aug = Matrix<double>::Zero(r + c, r + c);
  aug.topRightCorner(r, c) = m;
  aug.bottomLeftCorner(c, r) = m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(aug);
  Matrix<double> out = Matrix<double>::Zero(r, c);
  for (Index j = 0; j < r + c; ++j) {
    const double lam = eig.eigenvalues()(j);
    if (lam <= 0) continue;
    const auto x = eig.eigenvectors().col(j);
    out += 2 * scalar_shrink(lam, t) * x.head(r) * x.tail(c).transpose();
  }
  return out;
}

/// Projection onto {w >= 0, sum w <= radius} by enumerating every support
/// set and both states of the budget constraint. Exponential; n <= 20.
inline Vector<double> l1_ball_bruteforce(const Vector<double>& v, double radius) {
  const Index n = v.size();
  Vector<double> best = Vector<double>::Zero(n);
  double best_dist = (best - v).squaredNorm();
  auto consider = [&](const Vector<double>& w) {
    if ((w.array() < -1e-15).any() || w.sum() > radius * (1 + 1e-14) + 1e-15) return;
    const double dist = (w - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  };
  consider(v.cwiseMax(0.0));
  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    double total = 0;
    int count = 0;
    for (Index j = 0; j < n; ++j) {
      if (mask >> j & 1U) {
        total += v(j);
        ++count;
      }
    }
    const double shift = (total - radius) / count;
    Vector<double> w = Vector<double>::Zero(n);
    for (Index j = 0; j < n; ++j) {
      if (mask >> j & 1U) w(j) = v(j) - shift;
    }
    consider(w);
  }
  return best;
}

/// Central finite-difference gradient of f at m, entry by entry.
inline Matrix<double> fd_gradient(const std::function<double(const Matrix<double>&)>& f,
                                  const Matrix<double>& m, double h) {
  Matrix<double> g(m.rows(), m.cols());
  Matrix<double> probe = m;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const double keep = probe(i, j);
      probe(i, j) = keep + h;
      const double up = f(probe);
      probe(i, j) = keep - h;
      const double down = f(probe);
      probe(i, j) = keep;
      g(i, j) = (up - down) / (2 * h);
    }
  }
  return g;
}

/// 0.5 x^T gamma x - upsilon^T x with x = vec(theta), written out as sums.
inline double dense_loss(const Matrix<double>& gamma, const Vector<double>& upsilon,
                         const Matrix<double>& theta) {
  const Index rows = theta.rows();
  const Index m = theta.size();
  auto at = [&](Index k) { return theta(k % rows, k / rows); };
  double quad = 0;
  double lin = 0;
  for (Index a = 0; a < m; ++a) {
    lin += upsilon(a) * at(a);
    for (Index b = 0; b < m; ++b) quad += gamma(a, b) * at(a) * at(b);
  }
  return 0.5 * quad - lin;
}

}  // namespace eiv::oracle
