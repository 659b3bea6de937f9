#pragma once

#include <eiv/covariance.hpp>
#include <eiv/spectral.hpp>
#include <eiv/surrogate.hpp>
#include <eiv/types.hpp>

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

namespace eiv {

using Rng = std::mt19937_64;

/// Independent stream for (master seed, replication index, tag). Distinct
/// triples give unrelated engines regardless of scheduling order.
inline Rng derive_stream(std::uint64_t master, std::uint64_t index,
                         std::uint64_t tag = 0) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(master), hi(master), lo(index), hi(index), lo(tag), hi(tag)};
  return Rng(seq);
}

/// Row-major fill with standard normals, so draws do not depend on storage.
template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Scalar(normal(rng));
  return m;
}

struct ExactRank {
  Index r = 1;
};

/// sigma_j = c * j^{-(1 + decay) / q} with c set so that sum sigma_j^q = radius.
struct NearLowRank {
  double q = 1.0;
  double radius = 1.0;
  double decay = 0.5;
};

template <typename Scalar>
struct TruthSpec {
  Index d1 = 1;
  Index d2 = 1;
  std::variant<ExactRank, NearLowRank> mode = ExactRank{};
  Scalar scale = Scalar(1);  ///< Frobenius norm for ExactRank
};

template <typename Scalar>
Matrix<Scalar> gen_truth(const TruthSpec<Scalar>& spec, Rng& rng) {
  const Index d1 = spec.d1;
  const Index d2 = spec.d2;
  if (d1 < 1 || d2 < 1) throw InputError("gen_truth: dimensions must be >= 1");
  const Index d = std::min(d1, d2);
  if (const auto* exact = std::get_if<ExactRank>(&spec.mode)) {
    if (exact->r < 1 || exact->r > d) {
      throw InputError("gen_truth: rank must lie in [1, min(d1, d2)]");
    }
    if (!(spec.scale > Scalar(0))) throw InputError("gen_truth: scale must be > 0");
    const Matrix<Scalar> a = gaussian_matrix<Scalar>(d1, exact->r, rng);
    const Matrix<Scalar> b = gaussian_matrix<Scalar>(d2, exact->r, rng);
    Matrix<Scalar> theta = a * b.transpose();
    theta *= spec.scale / theta.norm();
    return theta;
  }

  const auto& near = std::get<NearLowRank>(spec.mode);
  if (!(near.q > 0.0 && near.q <= 1.0)) {
    throw InputError("gen_truth: q must lie in (0, 1]");
  }
  if (!(near.radius > 0.0) || !(near.decay > 0.0)) {
    throw InputError("gen_truth: radius and decay must be > 0");
  }
  const Scalar q = Scalar(near.q);
  const Scalar power = (Scalar(1) + Scalar(near.decay)) / q;
  Vector<Scalar> sigma(d);
  for (Index j = 0; j < d; ++j) sigma(j) = std::pow(Scalar(j + 1), -power);
  const Scalar mass = sigma.array().pow(q).sum();
  sigma *= std::pow(Scalar(near.radius) / mass, Scalar(1) / q);

  const Matrix<Scalar> u =
      Eigen::HouseholderQR<Matrix<Scalar>>(gaussian_matrix<Scalar>(d1, d, rng))
          .householderQ() *
      Matrix<Scalar>::Identity(d1, d);
  const Matrix<Scalar> v =
      Eigen::HouseholderQR<Matrix<Scalar>>(gaussian_matrix<Scalar>(d2, d, rng))
          .householderQ() *
      Matrix<Scalar>::Identity(d2, d);
  Matrix<Scalar> theta = u * sigma.asDiagonal() * v.transpose();
  const Vector<Scalar> check = Eigen::JacobiSVD<Matrix<Scalar>>(theta).singularValues();
  if (lq_radius(check, q) > Scalar(near.radius) * (Scalar(1) + Scalar(1e-8))) {
    throw NumericalError("gen_truth: generated truth left the lq ball");
  }
  return theta;
}

/// n draws of vec(X) ~ N(0, sigma) as the rows of an n x M matrix.
template <typename Scalar>
Matrix<Scalar> sample_design(const CovOperator<Scalar>& sigma, Index n, Rng& rng) {
  const Matrix<Scalar> g = gaussian_matrix<Scalar>(n, sigma.dim(), rng);
  if (sigma.kind() == CovOperator<Scalar>::Kind::Dense) {
    return g * sigma.sqrt_factor().transpose();
  }
  const Vector<Scalar> diag = sigma.diagonal_entries();
  if ((diag.array() < Scalar(0)).any()) throw InputError("covariance is not PSD");
  return g * diag.cwiseSqrt().asDiagonal();
}

/// One d1 x d2 draw from the sigma-ensemble.
template <typename Scalar>
Matrix<Scalar> sample_sigma_ensemble(const CovOperator<Scalar>& sigma, Index d1,
                                     Index d2, Rng& rng) {
  if (sigma.dim() != d1 * d2) {
    throw InputError("sample_sigma_ensemble: covariance dimension differs from d1*d2");
  }
  return unvec(sample_design(sigma, 1, rng).row(0).transpose(), d1, d2);
}

/// Samples are stored stacked: row i of each design is vec(X_i)^T.
template <typename Scalar>
struct Dataset {
  Index d1 = 0;
  Index d2 = 0;
  Matrix<Scalar> clean;     ///< N x M, X_i
  Matrix<Scalar> observed;  ///< N x M, Z_i (masked entries are 0)
  MissingMask mask;         ///< N x M for missing data, empty otherwise
  Vector<Scalar> y;
  Matrix<Scalar> theta_star;
  CovarianceSpec<Scalar> cov;
  Corruption corruption = Corruption::Additive;
  std::uint64_t seed = 0;

  Index samples() const { return y.size(); }
  Matrix<Scalar> clean_sample(Index i) const {
    return unvec(clean.row(i).transpose(), d1, d2);
  }
  Matrix<Scalar> observed_sample(Index i) const {
    return unvec(observed.row(i).transpose(), d1, d2);
  }
};

/// y = X vec(theta*) + eps; Z = X + W (additive) or X with entries dropped
/// i.i.d. with probability rho (missing).
template <typename Scalar>
Dataset<Scalar> gen_dataset(const Matrix<Scalar>& theta_star,
                            const CovarianceSpec<Scalar>& cov, Index n,
                            Corruption corruption, std::uint64_t seed) {
  if (n < 1) throw InputError("gen_dataset: N must be >= 1");
  cov.validate();
  const Index d1 = theta_star.rows();
  const Index d2 = theta_star.cols();
  if (cov.sigma_x.dim() != d1 * d2) {
    throw InputError("gen_dataset: covariance dimension differs from d1*d2");
  }
  Rng rng = derive_stream(seed, 0);
  Dataset<Scalar> ds;
  ds.d1 = d1;
  ds.d2 = d2;
  ds.theta_star = theta_star;
  ds.cov = cov;
  ds.corruption = corruption;
  ds.seed = seed;
  ds.clean = sample_design(cov.sigma_x, n, rng);
  ds.y = ds.clean * vec(theta_star);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < n; ++i) ds.y(i) += cov.sigma_eps * Scalar(normal(rng));

  if (corruption == Corruption::Additive) {
    ds.observed = ds.clean + sample_design(cov.sigma_w, n, rng);
  } else {
    std::uniform_real_distribution<double> uniform;
    ds.mask.resize(n, d1 * d2);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d1 * d2; ++j)
        ds.mask(i, j) = uniform(rng) < static_cast<double>(cov.rho);
    ds.observed = ds.mask.select(Scalar(0), ds.clean.array()).matrix();
  }
  return ds;
}

/// Corrected surrogate for the dataset's corruption type.
template <typename Scalar>
SurrogatePair<Scalar> corrected_pair(const Dataset<Scalar>& ds,
                                     GammaStorage storage = GammaStorage::Auto) {
  if (ds.corruption == Corruption::Additive) {
    return build_additive(ds.observed, ds.y, ds.cov.sigma_w, ds.d1, ds.d2, storage);
  }
  return build_missing(ds.observed, ds.mask, ds.y, ds.cov.rho, ds.d1, ds.d2, storage);
}

template <typename Scalar>
SurrogatePair<Scalar> naive_pair(const Dataset<Scalar>& ds,
                                 GammaStorage storage = GammaStorage::Auto) {
  return build_naive(ds.observed, ds.y, ds.d1, ds.d2, ds.corruption, storage);
}

}  // namespace eiv
