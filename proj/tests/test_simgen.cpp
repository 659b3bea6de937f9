#include <eiv/simgen.hpp>

#include <gtest/gtest.h>

namespace {

using eiv::Corruption;
using eiv::CovOperator;
using Mat = eiv::Matrix<double>;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = eiv::derive_stream(42, 3, 1);
  auto b = eiv::derive_stream(42, 3, 1);
  auto c = eiv::derive_stream(42, 4, 1);
  auto d = eiv::derive_stream(42, 3, 2);
  const auto first = a();
  EXPECT_EQ(first, b());
  EXPECT_NE(first, c());
  EXPECT_NE(first, d());
}

TEST(Truth, ExactRankHasRankAndScale) {
  eiv::Rng rng(1);
  for (eiv::Index r = 1; r <= 4; ++r) {
    eiv::TruthSpec<double> spec;
    spec.d1 = 7;
    spec.d2 = 5;
    spec.mode = eiv::ExactRank{r};
    spec.scale = 2.5;
    const Mat t = eiv::gen_truth(spec, rng);
    EXPECT_EQ(eiv::matrix_rank(t), r);
    EXPECT_NEAR(t.norm(), 2.5, 1e-12);
  }
  eiv::TruthSpec<double> bad;
  bad.d1 = bad.d2 = 3;
  bad.mode = eiv::ExactRank{4};
  EXPECT_THROW(eiv::gen_truth(bad, rng), eiv::InputError);
}

TEST(Truth, NearLowRankSitsOnLqSphere) {
  eiv::Rng rng(2);
  for (double q : {0.25, 0.5, 1.0}) {
    eiv::TruthSpec<double> spec;
    spec.d1 = 8;
    spec.d2 = 6;
    spec.mode = eiv::NearLowRank{q, 3.0, 0.5};
    const Mat t = eiv::gen_truth(spec, rng);
    EXPECT_NEAR(eiv::lq_radius<double>(eiv::svd(t).sigma, q), 3.0, 1e-8);
  }
}

TEST(Design, EmpiricalCovarianceMatches) {
  eiv::Rng rng(3);
  const auto cov = CovOperator<double>::toeplitz(6, 2.0, 0.5);
  const Mat z = eiv::sample_design(cov, 40000, rng);
  const Mat emp = z.transpose() * z / 40000.0;
  EXPECT_LT((emp - cov.to_dense()).cwiseAbs().maxCoeff(), 0.06);
  const auto diag = CovOperator<double>::scaled_identity(6, 0.25);
  const Mat w = eiv::sample_design(diag, 40000, rng);
  EXPECT_NEAR((w.transpose() * w / 40000.0).diagonal().mean(), 0.25, 0.01);
}

TEST(Dataset, DeterministicBySeed) {
  eiv::Rng rng(4);
  const Mat truth = eiv::gaussian_matrix<double>(3, 3, rng);
  const eiv::CovarianceSpec<double> cov{CovOperator<double>::scaled_identity(9, 1.0),
                                        CovOperator<double>::scaled_identity(9, 0.0), 0.3, 0.1};
  const auto a = eiv::gen_dataset(truth, cov, 500, Corruption::Missing, 77);
  const auto b = eiv::gen_dataset(truth, cov, 500, Corruption::Missing, 77);
  const auto c = eiv::gen_dataset(truth, cov, 500, Corruption::Missing, 78);
  EXPECT_EQ(a.observed, b.observed);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
  EXPECT_NEAR(eiv::estimate_missing_rate(a.mask), 0.3, 0.03);
  EXPECT_EQ((a.mask.cast<double>() * a.observed.array()).abs().maxCoeff(), 0.0);
  // Unmasked entries are the clean covariates.
  EXPECT_EQ((!a.mask).select(a.clean.array() - a.observed.array(), 0.0).abs().maxCoeff(), 0.0);
  EXPECT_EQ(a.clean_sample(4), eiv::unvec(a.clean.row(4).transpose(), 3, 3));
}

TEST(Dataset, AdditiveNoiseLevel) {
  const Mat truth = Mat::Identity(4, 4);
  const eiv::CovarianceSpec<double> cov{CovOperator<double>::scaled_identity(16, 1.0),
                                        CovOperator<double>::scaled_identity(16, 0.36), 0.0, 0.0};
  const auto ds = eiv::gen_dataset(truth, cov, 5000, Corruption::Additive, 9);
  const Mat w = ds.observed - ds.clean;
  EXPECT_NEAR(std::sqrt(w.squaredNorm() / double(w.size())), 0.6, 0.01);
  // sigma_eps = 0: responses are exact.
  EXPECT_LT((ds.y - ds.clean * eiv::vec(truth)).norm(), 1e-10);
  EXPECT_THROW(eiv::gen_dataset(Mat(Mat::Identity(3, 3)), cov, 10, Corruption::Additive, 1),
               eiv::InputError);
}

}  // namespace
