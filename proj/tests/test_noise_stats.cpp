#include <gtest/gtest.h>

#include <random>

#include "tdoa/noise_stats.hpp"
#include "test_util.hpp"

using namespace tdoa;

namespace {

struct Moments {
  double mean = 0, var = 0, max_abs = 0;
};

Moments moments(const NoiseModel& m, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double sum = 0, sum2 = 0, mx = 0;
  const int q = 100;
  for (int k = 0; k < draws / q; ++k) {
    const Eigen::VectorXd v = sample_noise(m, q, rng);
    sum += v.sum();
    sum2 += v.squaredNorm();
    mx = std::max(mx, v.cwiseAbs().maxCoeff());
  }
  const double n = static_cast<double>(draws / q * q);
  return {sum / n, sum2 / n - (sum / n) * (sum / n), mx};
}

}  // namespace

TEST(Noise, GaussianStd) {
  const auto mo = moments(NoiseModel::gaussian(0.015), 1000000, 1);
  EXPECT_NEAR(std::sqrt(mo.var), 0.015, 0.005 * 0.015);
  EXPECT_LE(std::abs(mo.mean), 4 * 0.015 / 1000.0);
}

TEST(Noise, UniformSamplingRateBounds) {
  const double hw = NoiseModel::sampling_half_width(343.0, 8000.0);
  EXPECT_NEAR(hw, 0.0214375, 1e-12);
  const auto mo = moments(NoiseModel::uniform(hw), 1000000, 2);
  EXPECT_LE(mo.max_abs, hw);
  EXPECT_NEAR(mo.var, hw * hw / 3.0, 0.01 * hw * hw / 3.0);
}

TEST(Noise, MixtureAndLaplacianVariance) {
  const auto mix = NoiseModel::uniform_plus_gaussian(0.02, 0.01);
  EXPECT_NEAR(mix.variance(), 0.02 * 0.02 / 3.0 + 1e-4, 1e-18);
  EXPECT_NEAR(moments(mix, 1000000, 3).var, mix.variance(), 0.01 * mix.variance());
  const auto lap = NoiseModel::laplacian(0.015);
  const auto mo = moments(lap, 1000000, 4);
  EXPECT_NEAR(mo.var, 0.015 * 0.015, 0.01 * 0.015 * 0.015);
  EXPECT_LE(std::abs(mo.mean), 4 * 0.015 / 1000.0);
}

TEST(Noise, ReproducibleGivenSeed) {
  std::mt19937_64 a(99), b(99);
  EXPECT_EQ(sample_noise(NoiseModel::laplacian(1.0), 21, a), sample_noise(NoiseModel::laplacian(1.0), 21, b));
}

TEST(Noise, InvalidParameters) {
  EXPECT_THROW(NoiseModel::uniform(0.0).validate(3), InvalidArgument);
  EXPECT_THROW(NoiseModel::laplacian(-1.0).validate(3), InvalidArgument);
  EXPECT_THROW(NoiseModel::uniform_plus_gaussian(0.1, 0.0).validate(3), InvalidArgument);
}

TEST(Covariance, CrossArrayIsotropicRatio) {
  const NoiseSpec noise = NoiseSpec::isotropic(21, 0.015);
  const auto rep = denoised_covariance(projection_operator(6, noise), noise);
  const double mean_var = rep.sigma_out.diagonal().mean();
  EXPECT_NEAR(mean_var / (0.015 * 0.015), 6.0 / 21.0, 1e-12);
  EXPECT_GE(rep.min_eig_diff, -1e-12);
}

TEST(Covariance, OrderingAndIdempotentPushforward) {
  std::mt19937_64 rng(71);
  for (int n = 2; n <= 6; ++n) {
    for (int k = 0; k < 20; ++k) {
      const NoiseSpec noise(testutil::random_spd(pair_count(n), rng));
      const auto proj = projection_operator(n, noise);
      const auto rep = denoised_covariance(proj, noise);
      EXPECT_GE(rep.min_eig_diff, -1e-12);
      const Eigen::MatrixXd twice = proj.matrix * rep.sigma_out * proj.matrix.transpose();
      EXPECT_LT((twice - rep.sigma_out).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Crlb, ScalingAndInformationMonotonicity) {
  std::mt19937_64 rng(73);
  const auto a = SensorArray::cross7();
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd x = testutil::random_source(3, rng, 0.5, 2.5);
    const auto full = crlb(a, x, NoiseSpec::isotropic(21, 0.015));
    const auto scaled = crlb(a, x, NoiseSpec::isotropic(21, 0.03));
    EXPECT_NEAR(scaled.rlb / full.rlb, 2.0, 1e-10);
    const auto all = a.pairs();
    const std::vector<Pair> ref_pairs(all.begin(), all.begin() + 6);
    const auto reduced = crlb(a, x, NoiseSpec::isotropic(6, 0.015), ref_pairs);
    EXPECT_LE(full.rlb, reduced.rlb * (1 + 1e-12));
    EXPECT_LT((full.fim - full.fim.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Crlb, TranslationInvariantAndSingularWhenDegenerate) {
  const auto a = SensorArray::cross7();
  const Eigen::Vector3d x(1.0, 0.8, -0.3), t(5, 5, 5);
  const auto noise = NoiseSpec::isotropic(21, 0.01);
  EXPECT_NEAR(crlb(a, x, noise).rlb, crlb(a.translated(t), x + t, noise).rlb, 1e-12);
  Eigen::MatrixXd planar(3, 4);
  planar << 0, 1, 0, -1, 0, 0, 1, 0, 0, 0, 0, 0;
  const SensorArray flat(planar);
  EXPECT_THROW(crlb(flat, Eigen::Vector3d(0.3, 0.2, 0.0), NoiseSpec::isotropic(6, 0.01)), SingularityError);
}

TEST(Propagation, CorollaryOrderingForEachCost) {
  const auto a = SensorArray::cross7();
  const NoiseSpec noise = NoiseSpec::isotropic(21, 0.015);
  const auto proj = projection_operator(6, noise);
  const Eigen::MatrixXd sigma_out = proj.matrix * noise.sigma() * proj.matrix.transpose();
  std::mt19937_64 rng(79);
  for (Localizer algo : {Localizer::ls, Localizer::srdls, Localizer::gs, Localizer::ml}) {
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd x = testutil::random_source(3, rng, 1.0, 2.0);
      const Eigen::MatrixXd sens = sensitivity_matrix(algo, a, x, noise);
      const Eigen::MatrixXd diff = propagate_covariance(sens, noise.sigma()) - propagate_covariance(sens, sigma_out);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff).eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Propagation, SensitivityReproducesLinearisedEstimator) {
  // A applied to a small perturbation predicts the change of the estimate.
  const auto a = SensorArray::cross7();
  const Eigen::Vector3d x(1.2, -0.4, 0.6);
  const NoiseSpec noise = NoiseSpec::isotropic(21, 1.0);
  std::mt19937_64 rng(83);
  const Eigen::VectorXd delta = testutil::random_vector(21, rng, 1e-6);
  const TdoaVector tau(6, tdoa_full(a, x).values + delta);
  const Eigen::MatrixXd a_gs = sensitivity_matrix(Localizer::gs, a, x, noise);
  EXPECT_LT((gs_locate(a, tau).x_hat - x - a_gs * delta).norm(), 1e-9);
  const Eigen::MatrixXd a_ls = sensitivity_matrix(Localizer::ls, a, x, noise);
  EXPECT_LT((ls_locate(a, tau.values.head(6)).x_hat - x - a_ls * delta).norm(), 1e-9);
  EXPECT_LT(a_ls.rightCols(15).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Propagation, ZeroNoiseGivesZeroCovariance) {
  const auto a = SensorArray::cross7();
  const Eigen::MatrixXd sens = sensitivity_matrix(Localizer::gs, a, Eigen::Vector3d(1, 1, 1), NoiseSpec::isotropic(21, 1));
  EXPECT_EQ(propagate_covariance(sens, Eigen::MatrixXd::Zero(21, 21)).cwiseAbs().maxCoeff(), 0.0);
}
