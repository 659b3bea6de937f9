#pragma once

#include <eiv/covariance.hpp>
#include <eiv/spectral.hpp>
#include <eiv/surrogate.hpp>
#include <eiv/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace eiv {

/// Curvature/slack parameters of the restricted strong convexity (alpha1,
/// tau1 and alpha2, tau2) and smoothness (alpha3, tau3) conditions, plus the
/// deviation constant phi that scales the gradient at the truth.
template <typename Scalar>
struct RegularityParams {
  Scalar alpha1 = 0;
  Scalar tau1 = 0;
  Scalar alpha2 = 0;
  Scalar tau2 = 0;
  Scalar alpha3 = 0;
  Scalar tau3 = 0;
  Scalar phi = 0;

  Scalar tau() const { return std::max(tau2, tau3); }
};

template <typename Scalar>
Scalar tau_additive(const CovarianceSpec<Scalar>& spec) {
  const Scalar lo = spec.sigma_x.lambda_min();
  const Scalar sx = spec.sigma_x.op_norm();
  const Scalar sw = spec.sigma_w.op_norm();
  return lo * std::max((sx * sx + sw * sw) / (lo * lo), Scalar(1));
}

template <typename Scalar>
Scalar tau_missing(const CovarianceSpec<Scalar>& spec) {
  const Scalar lo = spec.sigma_x.lambda_min();
  const Scalar sx = spec.sigma_x.op_norm();
  const Scalar keep = Scalar(1) - spec.rho;
  const Scalar ratio = std::pow(sx, 4) / (std::pow(keep, 4) * lo * lo);
  return lo * std::max(ratio, Scalar(1));
}

template <typename Scalar>
Scalar phi_additive(const CovarianceSpec<Scalar>& spec, Scalar theta_star_fro) {
  const Scalar sx = spec.sigma_x.op_norm();
  const Scalar sw = spec.sigma_w.op_norm();
  return (sx + sw) * (sx + spec.sigma_eps) * theta_star_fro;
}

template <typename Scalar>
Scalar phi_missing(const CovarianceSpec<Scalar>& spec, Scalar theta_star_fro) {
  const Scalar scaled = spec.sigma_x.op_norm() / (Scalar(1) - spec.rho);
  return scaled * (scaled + spec.sigma_eps) * theta_star_fro;
}

/// (log d1 + log d2) / N scaled by sqrt(d1 d2): the common tau rate.
template <typename Scalar>
Scalar tau_rate(Index d1, Index d2, Index n) {
  return std::sqrt(Scalar(d1 * d2)) *
         (std::log(Scalar(d1)) + std::log(Scalar(d2))) / Scalar(n);
}

/// Parameters under which the corrected loss satisfies the RSC/RSM
/// conditions with high probability; c0 is the unspecified universal
/// constant multiplying every tau.
template <typename Scalar>
RegularityParams<Scalar> regularity_params(const CovarianceSpec<Scalar>& spec,
                                           Index d1, Index d2, Index n,
                                           Corruption corruption, Scalar c0,
                                           Scalar theta_star_fro = Scalar(0)) {
  if (n < 1) throw InputError("regularity_params: N must be >= 1");
  if (!(c0 >= Scalar(0))) throw InputError("regularity_params: c0 must be >= 0");
  if (!(spec.sigma_x.lambda_min() > Scalar(0))) {
    throw InputError("regularity_params: lambda_min(sigma_x) must be > 0");
  }
  spec.validate();
  const bool additive = corruption == Corruption::Additive;
  const Scalar tau_corr = additive ? tau_additive(spec) : tau_missing(spec);
  const Scalar tau = c0 * tau_corr * tau_rate<Scalar>(d1, d2, n);
  RegularityParams<Scalar> p;
  p.alpha1 = spec.sigma_x.lambda_min() / Scalar(2);
  p.alpha2 = spec.sigma_x.lambda_min() / Scalar(4);
  p.alpha3 = Scalar(3) * spec.sigma_x.lambda_max() / Scalar(4);
  p.tau1 = p.tau2 = p.tau3 = tau;
  p.phi = additive ? phi_additive(spec, theta_star_fro)
                   : phi_missing(spec, theta_star_fro);
  return p;
}

/// Spectral norm and entrywise max of the loss gradient at the truth.
template <typename Scalar>
struct GradAtTruth {
  Scalar opnorm;
  Scalar maxabs;
};

template <typename Scalar, typename Derived>
GradAtTruth<Scalar> grad_opnorm_at_truth(const SurrogatePair<Scalar>& pair,
                                         const Eigen::MatrixBase<Derived>& theta_star) {
  const Matrix<Scalar> g = grad_loss(pair, theta_star);
  return {op_norm(g), g.cwiseAbs().maxCoeff()};
}

struct AuditReport {
  int trials = 0;
  int sta_rsc_violations = 0;
  int alg_rsc_violations = 0;
  int alg_rsm_violations = 0;

  double fraction(int violations) const {
    return trials == 0 ? 0.0 : static_cast<double>(violations) / trials;
  }
  double sta_rsc_fraction() const { return fraction(sta_rsc_violations); }
  double alg_rsc_fraction() const { return fraction(alg_rsc_violations); }
  double alg_rsm_fraction() const { return fraction(alg_rsm_violations); }
};

/// Samples `trials` directions (rank one, random low rank, dense; random
/// scale) and counts violations of the statistical RSC, algorithmic RSC and
/// RSM inequalities at the given parameters. The algorithmic conditions are
/// evaluated at random base points.
template <typename Scalar>
AuditReport audit_rsc_rsm(const SurrogatePair<Scalar>& pair,
                          const RegularityParams<Scalar>& params, int trials,
                          std::uint64_t seed,
                          const std::optional<Matrix<Scalar>>& theta_star = {}) {
  if (trials < 1) throw InputError("audit_rsc_rsm: trials must be >= 1");
  const Index d1 = pair.rows();
  const Index d2 = pair.cols();
  const Index d = std::min(d1, d2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = Scalar(normal(rng));
    return m;
  };
  const Matrix<Scalar> truth =
      theta_star ? *theta_star : Matrix<Scalar>::Zero(d1, d2);
  const Matrix<Scalar> grad_truth = grad_loss(pair, truth);

  auto violated = [](Scalar lhs, Scalar rhs, bool lower_bound) {
    const Scalar slack =
        Scalar(1e-10) * (std::abs(lhs) + std::abs(rhs)) + Scalar(1e-14);
    return lower_bound ? lhs < rhs - slack : lhs > rhs + slack;
  };

  AuditReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Matrix<Scalar> delta;
    switch (t % 3) {
      case 0:
        delta = gaussian(d1, 1) * gaussian(d2, 1).transpose();
        break;
      case 1: {
        const Index k = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(d));
        delta = gaussian(d1, k) * gaussian(d2, k).transpose();
        break;
      }
      default:
        delta = gaussian(d1, d2);
    }
    delta *= Scalar(std::exp(uniform(rng))) / delta.norm();
    const Scalar fro2 = delta.squaredNorm();
    const Scalar nuc2 = std::pow(nuclear_norm(delta), 2);

    const Matrix<Scalar> moved = truth + delta;
    const Scalar sta = trace_inner(grad_loss(pair, moved) - grad_truth, delta);
    if (violated(sta, params.alpha1 * fro2 - params.tau1 * nuc2, true)) {
      ++report.sta_rsc_violations;
    }

    const Matrix<Scalar> base = gaussian(d1, d2);
    const Scalar taylor = taylor_error(pair, Matrix<Scalar>(base + delta), base);
    if (violated(taylor, params.alpha2 * fro2 - params.tau2 * nuc2, true)) {
      ++report.alg_rsc_violations;
    }
    if (violated(taylor, params.alpha3 * fro2 + params.tau3 * nuc2, false)) {
      ++report.alg_rsm_violations;
    }
  }
  return report;
}

}  // namespace eiv
