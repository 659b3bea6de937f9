#pragma once

#include <eiv/penalty.hpp>
#include <eiv/regularity.hpp>
#include <eiv/spectral.hpp>
#include <eiv/surrogate.hpp>
#include <eiv/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace eiv {

/// Objective values above this count as divergence.
inline constexpr double kDivergenceLimit = 1e12;

/// min L(theta) + P(theta) subject to ||theta||_* <= omega.
template <typename Scalar>
struct ProblemSpec {
  std::shared_ptr<const SurrogatePair<Scalar>> pair;
  SpectralPenalty<Scalar> penalty;
  Scalar omega;

  Scalar lambda() const { return penalty.lambda(); }

  void validate() const {
    if (!pair) throw InputError("ProblemSpec: missing surrogate pair");
    if (!(omega > Scalar(0))) throw InputError("ProblemSpec: omega must be > 0");
  }
};

template <typename Scalar>
struct SolverOptions {
  Scalar v = Scalar(0);  ///< inverse step size
  int max_iters = 5000;
  Scalar tol_residual = Scalar(1e-7);
  std::optional<Matrix<Scalar>> theta0;
  int snapshot_every = 0;  ///< keep every k-th iterate; 0 keeps none

  void validate() const {
    if (!(v > Scalar(0))) throw InputError("SolverOptions: v must be > 0");
    if (max_iters < 0) throw InputError("SolverOptions: max_iters must be >= 0");
    if (!(tol_residual > Scalar(0))) {
      throw InputError("SolverOptions: tol_residual must be > 0");
    }
    if (snapshot_every < 0) {
      throw InputError("SolverOptions: snapshot_every must be >= 0");
    }
  }
};

/// objective[t] = Psi(theta^t) for t = 0..iterations(); residual[t] is
/// ||theta^{t+1} - theta^t||_F.
template <typename Scalar>
struct SolverTrace {
  std::vector<Scalar> objective;
  std::vector<Scalar> residual;
  std::vector<std::pair<int, Matrix<Scalar>>> snapshots;
  std::optional<int> converged_at;

  int iterations() const { return static_cast<int>(residual.size()); }
};

template <typename Scalar>
struct SolveResult {
  Matrix<Scalar> theta_hat;
  SolverTrace<Scalar> trace;
};

template <typename Scalar>
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, SolverTrace<Scalar> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const SolverTrace<Scalar>& trace() const { return trace_; }

 private:
  SolverTrace<Scalar> trace_;
};

template <typename Scalar>
Scalar penalty_from_spectrum(const SpectralPenalty<Scalar>& pen,
                             const Vector<Scalar>& sigma) {
  Scalar total(0);
  for (Index j = 0; j < sigma.size(); ++j) total += pen.family.p(sigma(j));
  return total;
}

/// Psi(theta) = L(theta) + P(theta).
template <typename Scalar, typename Derived>
Scalar objective(const ProblemSpec<Scalar>& spec,
                 const Eigen::MatrixBase<Derived>& theta) {
  return loss(*spec.pair, theta) + spectral_p(spec.penalty, theta);
}

namespace detail {

/// An iterate together with its thin SVD, so the gradient of Q and the
/// penalty value never need a second factorization.
template <typename Scalar>
struct Iterate {
  Matrix<Scalar> theta;
  SvdFactor<Scalar> factor;
};

template <typename Scalar>
Iterate<Scalar> make_iterate(Matrix<Scalar> theta) {
  auto f = svd(theta);
  return {std::move(theta), std::move(f)};
}

template <typename Scalar>
Matrix<Scalar> grad_q_from(const SpectralPenalty<Scalar>& pen,
                           const Iterate<Scalar>& it) {
  if (pen.family.kind() == PenaltyKind::Nuclear) {
    return Matrix<Scalar>::Zero(it.theta.rows(), it.theta.cols());
  }
  Vector<Scalar> slopes(it.factor.sigma.size());
  for (Index j = 0; j < slopes.size(); ++j) {
    slopes(j) = pen.family.q_prime(it.factor.sigma(j));
  }
  return it.factor.compose(slopes);
}

template <typename Scalar>
Iterate<Scalar> prox_from(const ProblemSpec<Scalar>& spec, Scalar v,
                          const Iterate<Scalar>& it) {
  const Matrix<Scalar> grad =
      grad_loss(*spec.pair, it.theta) + grad_q_from(spec.penalty, it);
  if (!grad.allFinite()) throw NumericalError("prox_step: non-finite gradient");
  const Matrix<Scalar> g = it.theta - grad / v;
  auto f = svd(g);
  Vector<Scalar> shrunk =
      (f.sigma.array() - spec.lambda() / v).max(Scalar(0)).matrix();
  if (shrunk.sum() > spec.omega) {
    shrunk = project_l1_ball<Scalar>(f.sigma, spec.omega);
  }
  Matrix<Scalar> next = f.compose(shrunk);
  f.sigma = std::move(shrunk);
  return {std::move(next), std::move(f)};
}

template <typename Scalar>
Scalar objective_from(const ProblemSpec<Scalar>& spec, const Iterate<Scalar>& it) {
  return loss(*spec.pair, it.theta) + penalty_from_spectrum(spec.penalty, it.factor.sigma);
}

}  // namespace detail

/// One three-step update: gradient step on L + Q, singular value
/// soft-thresholding at lambda / v, and Frobenius projection of the gradient
/// point onto the nuclear ball when the thresholded candidate is infeasible.
template <typename Scalar, typename Derived>
Matrix<Scalar> prox_step(const ProblemSpec<Scalar>& spec, Scalar v,
                         const Eigen::MatrixBase<Derived>& theta) {
  spec.validate();
  if (!(v > Scalar(0))) throw InputError("prox_step: v must be > 0");
  return detail::prox_from(spec, v, detail::make_iterate(Matrix<Scalar>(theta))).theta;
}

/// ||theta - prox_step(theta)||_F; zero exactly at fixed points.
template <typename Scalar, typename Derived>
Scalar stationarity_residual(const ProblemSpec<Scalar>& spec, Scalar v,
                             const Eigen::MatrixBase<Derived>& theta) {
  return (prox_step(spec, v, theta) - theta).norm();
}

/// Runs the proximal gradient iteration from opts.theta0 (zero by default;
/// an infeasible start is projected onto the ball first). Stops once
/// ||theta^{t+1} - theta^t||_F <= tol * max(1, ||theta^t||_F).
template <typename Scalar>
SolveResult<Scalar> solve(const ProblemSpec<Scalar>& spec,
                          const SolverOptions<Scalar>& opts) {
  spec.validate();
  opts.validate();
  const Index d1 = spec.pair->rows();
  const Index d2 = spec.pair->cols();
  Matrix<Scalar> start = Matrix<Scalar>::Zero(d1, d2);
  if (opts.theta0) {
    if (opts.theta0->rows() != d1 || opts.theta0->cols() != d2) {
      throw InputError("solve: theta0 shape differs from surrogate");
    }
    start = project_nuclear_ball(*opts.theta0, spec.omega);
  }

  SolveResult<Scalar> out;
  auto& trace = out.trace;
  auto it = detail::make_iterate(std::move(start));
  trace.objective.push_back(detail::objective_from(spec, it));
  if (opts.snapshot_every > 0) trace.snapshots.emplace_back(0, it.theta);

  for (int t = 0; t < opts.max_iters; ++t) {
    auto next = detail::prox_from(spec, opts.v, it);
    const Scalar step = (next.theta - it.theta).norm();
    const Scalar value = detail::objective_from(spec, next);
    trace.residual.push_back(step);
    trace.objective.push_back(value);
    if (!std::isfinite(value) || value > Scalar(kDivergenceLimit)) {
      throw DivergenceError<Scalar>(
          "solver diverged at iteration " + std::to_string(t + 1), trace);
    }
    if (opts.snapshot_every > 0 && (t + 1) % opts.snapshot_every == 0) {
      trace.snapshots.emplace_back(t + 1, next.theta);
    }
    const Scalar scale = std::max(Scalar(1), it.theta.norm());
    it = std::move(next);
    if (step <= opts.tol_residual * scale) {
      trace.converged_at = t + 1;
      break;
    }
  }
  out.theta_hat = std::move(it.theta);
  return out;
}

/// max{(2 alpha2 - mu) / 4, 2 alpha3, 1.1 * power-iteration estimate of
/// lambda_max(Gamma)}. The estimate approaches the top |eigenvalue| from
/// below, hence the margin.
template <typename Scalar>
Scalar default_step_inverse(const SurrogatePair<Scalar>& pair,
                            const RegularityParams<Scalar>& params, Scalar mu,
                            int power_iterations = 30) {
  const Scalar theory =
      std::max((Scalar(2) * params.alpha2 - mu) / Scalar(4), Scalar(2) * params.alpha3);
  const Scalar power = Scalar(1.1) * gamma_power_bound(pair, power_iterations);
  return std::max({theory, power, Scalar(1e-12)});
}

/// Optimization-error constants of the geometric convergence guarantee.
template <typename Scalar>
struct TheoryDiag {
  Scalar eps_stat_bar = 0;
  Scalar kappa = 0;
  Scalar xi = 0;
  Scalar lambda = 0;
  Scalar omega = 0;
  Scalar initial_gap = 0;  ///< Psi(theta^0) - Psi(theta_hat)
  bool applicable = false;  ///< kappa in (0, 1) with a positive curvature margin

  /// 2 min{delta / lambda, omega}.
  Scalar eps_of_delta(Scalar delta) const {
    return Scalar(2) * std::min(delta / lambda, omega);
  }

  /// Smallest tolerance the guarantee covers: 8 xi eps_stat_bar^2 / (1 - kappa).
  Scalar min_tolerance() const {
    return Scalar(8) * xi * eps_stat_bar * eps_stat_bar / (Scalar(1) - kappa);
  }

  /// Iteration count after which the gap is within delta_star. Log terms
  /// with a nonpositive or undefined argument contribute 0. NaN when the
  /// contraction factor is not certified.
  Scalar t_of_delta(Scalar delta_star) const {
    if (!applicable || !(delta_star > Scalar(0))) {
      return std::numeric_limits<Scalar>::quiet_NaN();
    }
    const Scalar inv_log = Scalar(1) / std::log(Scalar(1) / kappa);
    const Scalar inner = std::log2(omega * lambda / delta_star);
    const Scalar epochs = inner > Scalar(1) ? std::log2(inner) : Scalar(0);
    const Scalar tail =
        initial_gap > delta_star ? std::log(initial_gap / delta_star) * inv_log : Scalar(0);
    return epochs * (Scalar(1) + std::log(Scalar(2)) * inv_log) + tail;
  }
};

/// Evaluates eps_stat_bar, kappa and xi with alpha = alpha2 and
/// tau = max(tau2, tau3). theta_hat stands in for the global solution.
template <typename Scalar>
TheoryDiag<Scalar> theory_diag(const ProblemSpec<Scalar>& spec,
                               const RegularityParams<Scalar>& params, Scalar r_q,
                               Scalar q, const Matrix<Scalar>& theta_hat,
                               const Matrix<Scalar>& theta_star, Scalar v,
                               Scalar initial_gap = Scalar(0)) {
  if (!(q >= Scalar(0) && q <= Scalar(1))) {
    throw InputError("theory_diag: q must lie in [0, 1]");
  }
  require_same_shape(theta_hat, theta_star, "theory_diag");
  const Scalar lam = spec.lambda();
  const Scalar mu = spec.penalty.mu();
  const Scalar tau = params.tau();
  const Scalar err = (theta_hat - theta_star).norm();

  TheoryDiag<Scalar> d;
  d.lambda = lam;
  d.omega = spec.omega;
  d.initial_gap = initial_gap;
  const Scalar lam_mq = std::pow(lam, -q);
  d.eps_stat_bar = Scalar(8) * std::pow(lam, -q / Scalar(2)) * std::sqrt(r_q) *
                   (std::sqrt(Scalar(2)) * err +
                    std::pow(lam, Scalar(1) - q / Scalar(2)) * std::sqrt(r_q));
  const Scalar margin = Scalar(2) * params.alpha2 - mu;
  const Scalar z = Scalar(512) * tau * lam_mq * r_q / margin;
  const Scalar head = margin / (Scalar(8) * v);
  d.kappa = (Scalar(1) - head + z) / (Scalar(1) - z);
  d.xi = Scalar(2) * tau * (head + Scalar(2) * z + Scalar(5)) / (Scalar(1) - z);
  d.applicable = margin > Scalar(0) && z < Scalar(1) && d.kappa > Scalar(0) &&
                 d.kappa < Scalar(1);
  return d;
}

template <typename Scalar>
struct RecoveryBound {
  Scalar frob_sq;
  Scalar nuclear;
};

/// ||err||_F^2 <= 9 R_q (lambda / (alpha1 - mu))^{2-q} and
/// ||err||_* <= (24 sqrt 2 + 8) R_q (lambda / (alpha1 - mu))^{1-q}.
template <typename Scalar>
RecoveryBound<Scalar> recovery_bound(const RegularityParams<Scalar>& params,
                                     Scalar lambda, Scalar mu, Scalar r_q, Scalar q) {
  const Scalar gap = params.alpha1 - mu;
  if (!(gap > Scalar(0))) {
    throw InputError("recovery_bound: requires alpha1 > mu");
  }
  const Scalar ratio = lambda / gap;
  return {Scalar(9) * r_q * std::pow(ratio, Scalar(2) - q),
          (Scalar(24) * std::sqrt(Scalar(2)) + Scalar(8)) * r_q *
              std::pow(ratio, Scalar(1) - q)};
}

/// lambda = 2 max{||grad L(theta*)||_op, 4 omega tau1} with
/// omega = margin * ||theta*||_*.
struct OraclePolicy {
  double margin = 1.0;
};

/// Fits each lambda >= 8 tau omega on the training pair and keeps the one
/// with the smallest corrected loss on the validation pair.
template <typename Scalar>
struct GridPolicy {
  std::vector<Scalar> lambdas;
  Scalar omega = Scalar(0);
  std::shared_ptr<const SurrogatePair<Scalar>> validation;
  PenaltyFamily<Scalar> family = PenaltyFamily<Scalar>::nuclear(Scalar(1));
  SolverOptions<Scalar> solver;
};

template <typename Scalar>
using LambdaPolicy = std::variant<OraclePolicy, GridPolicy<Scalar>>;

template <typename Scalar>
struct LambdaOmega {
  Scalar lambda;
  Scalar omega;
  std::vector<Scalar> validation_loss;  ///< per grid point; NaN when skipped
};

/// `points` values spaced evenly in log scale from hi down to hi * ratio.
template <typename Scalar>
std::vector<Scalar> log_grid(Scalar hi, Scalar ratio, int points) {
  if (points < 1 || !(hi > Scalar(0)) || !(ratio > Scalar(0))) {
    throw ConfigError("log_grid: need points >= 1, hi > 0, ratio > 0");
  }
  std::vector<Scalar> grid;
  for (int k = 0; k < points; ++k) {
    const Scalar frac = points == 1 ? Scalar(0) : Scalar(k) / Scalar(points - 1);
    grid.push_back(hi * std::pow(ratio, frac));
  }
  return grid;
}

template <typename Scalar>
LambdaOmega<Scalar> select_lambda_omega(
    std::shared_ptr<const SurrogatePair<Scalar>> pair,
    const RegularityParams<Scalar>& params,
    const std::optional<Matrix<Scalar>>& theta_star,
    const LambdaPolicy<Scalar>& policy) {
  if (!pair) throw InputError("select_lambda_omega: missing surrogate pair");
  if (const auto* oracle = std::get_if<OraclePolicy>(&policy)) {
    if (!theta_star) {
      throw ConfigError("oracle lambda policy needs the true parameter");
    }
    if (!(oracle->margin > 0)) throw ConfigError("oracle margin must be > 0");
    const Scalar omega = Scalar(oracle->margin) * nuclear_norm(*theta_star);
    const Scalar grad = grad_opnorm_at_truth(*pair, *theta_star).opnorm;
    const Scalar lambda =
        Scalar(2) * std::max(grad, Scalar(4) * omega * params.tau1);
    if (!(omega > Scalar(0)) || !(lambda > Scalar(0))) {
      throw InputError("oracle policy produced a zero lambda or omega");
    }
    return {lambda, omega, {}};
  }

  const auto& grid = std::get<GridPolicy<Scalar>>(policy);
  if (grid.lambdas.empty()) throw ConfigError("lambda grid is empty");
  if (!grid.validation) throw ConfigError("grid policy needs a validation pair");
  if (!(grid.omega > Scalar(0))) throw ConfigError("grid policy needs omega > 0");
  const Scalar floor = Scalar(8) * params.tau() * grid.omega;
  LambdaOmega<Scalar> best{Scalar(0), grid.omega, {}};
  Scalar best_loss = std::numeric_limits<Scalar>::infinity();
  for (const Scalar lam : grid.lambdas) {
    if (!(lam > Scalar(0)) || lam < floor) {
      best.validation_loss.push_back(std::numeric_limits<Scalar>::quiet_NaN());
      continue;
    }
    ProblemSpec<Scalar> spec{pair, lift(grid.family.with_lambda(lam)), grid.omega};
    const Scalar val = loss(*grid.validation, solve(spec, grid.solver).theta_hat);
    best.validation_loss.push_back(val);
    if (val < best_loss) {
      best_loss = val;
      best.lambda = lam;
    }
  }
  if (!(best.lambda > Scalar(0))) {
    throw ConfigError("no lambda in the grid satisfies lambda >= 8 tau omega");
  }
  return best;
}

}  // namespace eiv
