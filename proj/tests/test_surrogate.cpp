#include "oracles.hpp"

#include <eiv/simgen.hpp>
#include <eiv/surrogate.hpp>

#include <gtest/gtest.h>

namespace {

using eiv::Corruption;
using eiv::CovOperator;
using eiv::GammaStorage;
using Mat = eiv::Matrix<double>;
using Vec = eiv::Vector<double>;

eiv::Dataset<double> small_dataset(Corruption corruption, eiv::Index n = 60,
                                   std::uint64_t seed = 5) {
  eiv::Rng rng(seed);
  eiv::TruthSpec<double> spec;
  spec.d1 = 3;
  spec.d2 = 4;
  spec.mode = eiv::ExactRank{1};
  spec.scale = 2.0;
  const Mat truth = eiv::gen_truth(spec, rng);
  const eiv::Index m = 12;
  eiv::CovarianceSpec<double> cov{CovOperator<double>::toeplitz(m, 1.0, 0.4),
                                  CovOperator<double>::scaled_identity(m, 0.09), 0.0, 0.3};
  if (corruption == Corruption::Missing) {
    cov.sigma_w = CovOperator<double>::scaled_identity(m, 0.0);
    cov.rho = 0.25;
  }
  return eiv::gen_dataset(truth, cov, n, corruption, seed);
}

TEST(Surrogate, DenseAndMatrixFreeAgree) {
  for (auto corruption : {Corruption::Additive, Corruption::Missing}) {
    const auto ds = small_dataset(corruption);
    const auto dense = eiv::corrected_pair(ds, GammaStorage::Dense);
    const auto free = eiv::corrected_pair(ds, GammaStorage::MatrixFree);
    EXPECT_FALSE(dense.matrix_free());
    EXPECT_TRUE(free.matrix_free());
    EXPECT_LT((dense.gamma_dense() - free.gamma_dense()).cwiseAbs().maxCoeff(), 1e-12);
    eiv::Rng rng(3);
    const Mat theta = eiv::gaussian_matrix<double>(3, 4, rng);
    EXPECT_NEAR(eiv::loss(dense, theta), eiv::loss(free, theta), 1e-10);
    EXPECT_LT((eiv::grad_loss(dense, theta) - eiv::grad_loss(free, theta)).norm(), 1e-10);
  }
}

TEST(Surrogate, AdditiveFormula) {
  const auto ds = small_dataset(Corruption::Additive);
  const auto pair = eiv::corrected_pair(ds, GammaStorage::Dense);
  const double n = static_cast<double>(ds.samples());
  const Mat expected = ds.observed.transpose() * ds.observed / n - ds.cov.sigma_w.to_dense();
  EXPECT_LT((pair.gamma_dense() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((pair.upsilon() - ds.observed.transpose() * ds.y / n).norm(), 1e-12);
}

TEST(Surrogate, MissingFormula) {
  const auto ds = small_dataset(Corruption::Missing);
  const auto pair = eiv::corrected_pair(ds, GammaStorage::Dense);
  const double n = static_cast<double>(ds.samples());
  const double rho = ds.cov.rho;
  const Mat zt = ds.observed / (1 - rho);
  Mat expected = zt.transpose() * zt / n;
  expected.diagonal() -= rho * expected.diagonal();
  EXPECT_LT((pair.gamma_dense() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((pair.upsilon() - zt.transpose() * ds.y / n).norm(), 1e-12);
}

TEST(Surrogate, MissingWithZeroRateIsNaive) {
  auto ds = small_dataset(Corruption::Missing);
  const auto naive = eiv::build_naive(ds.observed, ds.y, 3, 4, Corruption::Missing,
                                      GammaStorage::Dense);
  const auto zero = eiv::build_missing(ds.observed, ds.mask, ds.y, 0.0, 3, 4, GammaStorage::Dense);
  EXPECT_LT((naive.gamma_dense() - zero.gamma_dense()).norm(), 1e-12);
}

TEST(Surrogate, MaskForcesZeros) {
  auto ds = small_dataset(Corruption::Missing);
  Mat polluted = ds.observed;
  polluted = ds.mask.select(Mat::Constant(polluted.rows(), polluted.cols(), 99.0), polluted);
  const auto a = eiv::build_missing(polluted, ds.mask, ds.y, 0.25, 3, 4, GammaStorage::Dense);
  const auto b = eiv::corrected_pair(ds, GammaStorage::Dense);
  EXPECT_EQ(a.gamma_dense(), b.gamma_dense());
  EXPECT_NEAR(eiv::estimate_missing_rate(ds.mask), 0.25, 0.06);
}

TEST(Surrogate, LossMatchesExplicitSum) {
  const auto ds = small_dataset(Corruption::Additive);
  const auto pair = eiv::corrected_pair(ds, GammaStorage::Dense);
  eiv::Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    const Mat theta = eiv::gaussian_matrix<double>(3, 4, rng);
    EXPECT_NEAR(eiv::loss(pair, theta),
                eiv::oracle::dense_loss(pair.gamma_dense(), pair.upsilon(), theta), 1e-10);
    const Mat fd = eiv::oracle::fd_gradient(
        [&](const Mat& x) { return eiv::loss(pair, x); }, theta, 1e-5);
    EXPECT_LT((eiv::grad_loss(pair, theta) - fd).norm(), 1e-7);
  }
}

TEST(Surrogate, TaylorErrorIsQuadraticForm) {
  const auto ds = small_dataset(Corruption::Missing);
  const auto pair = eiv::corrected_pair(ds, GammaStorage::Dense);
  eiv::Rng rng(5);
  const Mat a = eiv::gaussian_matrix<double>(3, 4, rng);
  const Mat b = eiv::gaussian_matrix<double>(3, 4, rng);
  const Vec d = eiv::vec(Mat(a - b));
  EXPECT_NEAR(eiv::taylor_error(pair, a, b), 0.5 * d.dot(pair.gamma_dense() * d), 1e-10);
}

TEST(Surrogate, PowerBoundApproachesTopEigenvalue) {
  const auto ds = small_dataset(Corruption::Additive, 200);
  const auto pair = eiv::corrected_pair(ds, GammaStorage::Dense);
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(pair.gamma_dense()).eigenvalues();
  const double top = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  const double est = eiv::gamma_power_bound(pair, 200);
  EXPECT_LE(est, top * (1 + 1e-9));
  EXPECT_GE(est, 0.95 * top);
}

TEST(Surrogate, UnbiasedOnAverage) {
  // Averaged over many datasets the corrected surrogate centres on
  // (Sigma_x, Sigma_x vec theta*), while the naive one does not.
  for (auto corruption : {Corruption::Additive, Corruption::Missing}) {
    Mat sum_c = Mat::Zero(12, 12), sum_n = Mat::Zero(12, 12);
    const int reps = 400;
    eiv::Dataset<double> last;
    for (int r = 0; r < reps; ++r) {
      last = small_dataset(corruption, 100, 1000 + r);
      sum_c += eiv::corrected_pair(last, GammaStorage::Dense).gamma_dense();
      sum_n += eiv::naive_pair(last, GammaStorage::Dense).gamma_dense();
    }
    const Mat target = last.cov.sigma_x.to_dense();
    EXPECT_LT((sum_c / reps - target).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_GT((sum_n / reps - target).cwiseAbs().maxCoeff(), 0.08);
  }
}

TEST(Surrogate, ShapeChecks) {
  EXPECT_THROW(eiv::SurrogatePair<double>::from_dense(Mat::Identity(4, 4), Vec::Zero(4), 2, 3),
               eiv::InputError);
  const auto pair = eiv::SurrogatePair<double>::from_dense(Mat::Identity(6, 6), Vec::Zero(6), 2, 3);
  EXPECT_THROW(eiv::loss(pair, Mat::Zero(3, 2)), eiv::InputError);
  EXPECT_THROW(eiv::build_missing(Mat(Mat::Zero(5, 6)), eiv::MissingMask(), Vec(Vec::Zero(5)),
                                  1.0, 2, 3),
               eiv::InputError);
}

}  // namespace
