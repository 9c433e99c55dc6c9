#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "duality.hpp"
#include "oracles.hpp"
#include "srff/error.hpp"
#include "srff/features.hpp"
#include "srff/spectral.hpp"

using namespace srff;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

std::vector<double> column(const DenseMatrix& m, Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

double fourier_density(const std::function<double(double)>& k, double w) {
  // p(w) = (1 / 2 pi) * integral k(d) cos(w d) dd, k even.
  return oracle::simpson([&](double d) { return k(d) * std::cos(w * d); }, 0.0, 60.0, 240000) / std::numbers::pi;
}

}  // namespace

TEST(SampleStationary, GaussianVarianceMatchesLengthscale) {
  SeededRng rng(1);
  const auto bank = sample_stationary(GaussianSE{{1.0}}, 10000, 1, rng);
  const double mean = bank.omega1().mean();
  const double var = (bank.omega1().array() - mean).square().sum() / 9999.0;
  EXPECT_GE(var, 0.9);
  EXPECT_LE(var, 1.1);
  EXPECT_TRUE(bank.is_stationary());
  EXPECT_EQ(bank.omega2(), bank.omega1());
}

TEST(SampleStationary, ZeroFrequenciesGiveConstantKernel) {
  SeededRng rng(2);
  const auto bank = sample_stationary(Empirical{DenseMatrix::Zero(5, 2)}, 5, 2, rng);
  SeededRng xr(3);
  const DenseMatrix x = standard_normal(xr, 7, 2);
  const DenseMatrix k = kernel_estimate(stationary_features(x, bank), KernelScale::for_mode(1.0, FeatureMode::Stationary));
  EXPECT_LE((k.array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(SampleStationary, MaternHalfIsHeavyTailed) {
  SeededRng rng(4);
  const auto bank = sample_stationary(MaternT{0.5, 1.0}, 10000, 1, rng);
  const auto w = bank.omega1().array();
  const double mean = w.mean();
  const double m2 = (w - mean).square().mean();
  const double m4 = (w - mean).pow(4).mean();
  EXPECT_GT(m4 / (m2 * m2), 3.0);
}

TEST(SampleStationary, DeterministicPerSeed) {
  SeededRng a(9), b(9);
  EXPECT_EQ(sample_stationary(LaplacianCauchy{{0.5, 2.0}}, 50, 2, a),
            sample_stationary(LaplacianCauchy{{0.5, 2.0}}, 50, 2, b));
}

TEST(SampleStationary, RejectsInvalidSpecs) {
  SeededRng rng(1);
  EXPECT_EQ(code_of([&] { sample_stationary(GaussianSE{{1.0, 2.0}}, 3, 1, rng); }), ErrorCode::IncompatibleDims);
  EXPECT_EQ(code_of([&] { sample_stationary(GaussianSE{{-1.0}}, 3, 1, rng); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([&] { sample_stationary(MaternT{0.0, 1.0}, 3, 1, rng); }), ErrorCode::InvalidSpec);
  MixtureOfGaussians mix{{0.5, 0.4}, {Vector::Zero(1), Vector::Zero(1)}, {DenseMatrix::Identity(1, 1), DenseMatrix::Identity(1, 1)}};
  EXPECT_EQ(code_of([&] { sample_stationary(mix, 3, 1, rng); }), ErrorCode::InvalidSpec);
  DenseMatrix corr(2, 2);
  corr << 2.0, 0.5, 0.5, 1.0;
  EXPECT_EQ(code_of([&] {
              sample_stationary(GaussianCopula{corr, {Marginal1D::gaussian(1), Marginal1D::gaussian(1)}}, 3, 2, rng);
            }),
            ErrorCode::InvalidSpec);
  corr << 1.0, 1.5, 1.5, 1.0;
  EXPECT_EQ(code_of([&] {
              sample_stationary(GaussianCopula{corr, {Marginal1D::gaussian(1), Marginal1D::gaussian(1)}}, 3, 2, rng);
            }),
            ErrorCode::InvalidSpec);
}

TEST(SampleStationary, MixtureMomentsMatch) {
  MixtureOfGaussians mix{{0.3, 0.7}, {Vector::Constant(1, -2.0), Vector::Constant(1, 3.0)},
                         {DenseMatrix::Constant(1, 1, 0.25), DenseMatrix::Constant(1, 1, 1.0)}};
  SeededRng rng(12);
  const auto bank = sample_stationary(mix, 20000, 1, rng);
  // mean 0.3*-2 + 0.7*3 = 1.5
  EXPECT_NEAR(bank.omega1().mean(), 1.5, 0.05);
}

TEST(SampleNonstationary, EqualStreamsReduceToStationary) {
  SeededRng a(5), b(5);
  const auto bank = sample_nonstationary(GaussianSE{{0.7}}, GaussianSE{{0.7}}, 20, 1, a, b);
  EXPECT_EQ(bank.omega1(), bank.omega2());
  SeededRng xr(6);
  const DenseMatrix x = standard_normal(xr, 9, 1);
  const auto stat = FrequencyBank::stationary(bank.omega1());
  const DenseMatrix ks = kernel_estimate(stationary_features(x, stat), KernelScale::for_mode(1.3, FeatureMode::Stationary));
  const DenseMatrix kn =
      kernel_estimate(nonstationary_features(x, bank), KernelScale::for_mode(1.3, FeatureMode::Nonstationary));
  EXPECT_LE((ks - kn).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleNonstationary, SpatialGaussianWithHeavyTailedPartner) {
  SeededRng rng(8);
  const auto bank = sample_nonstationary(GaussianSE{{1.0}}, student_t_half_dof_preset(), 100, 1, rng);
  EXPECT_FALSE(bank.is_stationary());
  EXPECT_TRUE(bank.omega1().allFinite());
  EXPECT_TRUE(bank.omega2().allFinite());
  EXPECT_NE(bank.omega1(), bank.omega2());
}

TEST(SampleNonstationary, SinglePairGivesRankTwoKernel) {
  SeededRng rng(10);
  const auto bank = sample_nonstationary(GaussianSE{{1.0, 1.0}}, GaussianSE{{0.5, 0.5}}, 1, 2, rng);
  SeededRng xr(11);
  const DenseMatrix x = standard_normal(xr, 12, 2);
  const DenseMatrix k =
      kernel_estimate(nonstationary_features(x, bank), KernelScale::for_mode(1.0, FeatureMode::Nonstationary));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(k);
  int rank = 0;
  for (Index i = 0; i < k.rows(); ++i) rank += eig.eigenvalues()(i) > 1e-10 ? 1 : 0;
  EXPECT_LE(rank, 2);
}

TEST(Copula, NormalMarginalIsIdentity) {
  SeededRng rng(13);
  const DenseMatrix z = standard_normal(rng, 200, 2);
  const std::vector<Marginal1D> marginals{Marginal1D::gaussian(1.0), Marginal1D::gaussian(1.0)};
  EXPECT_LE((gaussian_copula_transform(z, marginals) - z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Copula, MedianMapsToMedian) {
  const std::vector<Marginal1D> marginals{Marginal1D::cauchy(1.0)};
  EXPECT_NEAR(gaussian_copula_transform(DenseMatrix::Zero(1, 1), marginals)(0, 0), 0.0, 1e-15);
}

TEST(Copula, PreservesRankCorrelation) {
  SeededRng rng(14);
  const Index m = 10000;
  DenseMatrix z = standard_normal(rng, m, 2);
  z.col(1) = 0.9 * z.col(0) + std::sqrt(1.0 - 0.81) * z.col(1);
  const std::vector<Marginal1D> marginals{Marginal1D::laplace(1.0), Marginal1D::laplace(2.0)};
  const DenseMatrix out = gaussian_copula_transform(z, marginals);
  EXPECT_NEAR(oracle::spearman(column(out, 0), column(out, 1)), oracle::spearman(column(z, 0), column(z, 1)), 0.05);
}

TEST(Copula, SampledMarginalsPassKolmogorovSmirnov) {
  DenseMatrix corr(2, 2);
  corr << 1.0, 0.7, 0.7, 1.0;
  const GaussianCopula spec{corr, {Marginal1D::cauchy(1.5), Marginal1D::student_t(1.0, 0.5)}};
  int passes = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SeededRng rng(derive_seed(77, s));
    const DenseMatrix w = sample_frequencies(spec, 10000, 2, rng);
    bool ok = true;
    for (Index d = 0; d < 2; ++d) {
      const auto& marginal = spec.marginals[std::size_t(d)];
      ok = ok && oracle::ks_statistic(column(w, d), [&](double v) { return marginal.cdf(v); }) <
                     oracle::ks_critical_001(10000);
    }
    passes += ok ? 1 : 0;
  }
  EXPECT_GE(passes, 18);
}

TEST(Copula, RejectsDecreasingQuantile) {
  const std::vector<std::function<double(double)>> q{[](double u) { return -u; }};
  EXPECT_EQ(code_of([&] { gaussian_copula_transform(DenseMatrix::Zero(2, 1), q); }), ErrorCode::NonMonotoneMarginal);
  const std::vector<std::function<double(double)>> ok{[](double u) { return u; }};
  EXPECT_NEAR(gaussian_copula_transform(DenseMatrix::Zero(1, 1), ok)(0, 0), 0.5, 1e-15);
}

TEST(Density, GaussianModeValue) {
  EXPECT_NEAR(spectral_density_eval(GaussianSE{{1.0}}, Vector::Zero(1)), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(Density, MatchesFourierTransformOfKernel) {
  for (const auto& c : oracle::duality_cases()) {
    for (double w : {0.0, 0.5, 1.3, 2.7}) {
      Vector omega(1);
      omega << w;
      EXPECT_NEAR(spectral_density_eval(c.spec, omega), fourier_density(c.kernel, w), 1e-6) << c.name << " w=" << w;
    }
  }
}

TEST(Density, LaplacianAtZeroIsOneOverPi) {
  const double numeric = fourier_density([](double d) { return std::exp(-std::abs(d)); }, 0.0);
  EXPECT_NEAR(spectral_density_eval(LaplacianCauchy{{1.0}}, Vector::Zero(1)), numeric, 1e-8);
}

TEST(Density, IntegratesToOne) {
  for (const auto& c : oracle::duality_cases()) {
    auto p = [&](double w) {
      Vector omega(1);
      omega << w;
      return spectral_density_eval(c.spec, omega);
    };
    // Cauchy tails beyond |w| = 1e5 hold about 6e-6 of the mass.
    const double inner = oracle::simpson(p, -50.0, 50.0, 200000);
    const double tails = 2.0 * oracle::simpson(p, 50.0, 1e5, 400000);
    EXPECT_NEAR(inner + tails, 1.0, 1e-4) << c.name;
  }
}

TEST(Density, CopulaAndProductAgreeWithoutCorrelation) {
  const std::vector<Marginal1D> marginals{Marginal1D::cauchy(1.0), Marginal1D::gaussian(2.0)};
  Vector w(2);
  w << 0.3, -0.8;
  EXPECT_NEAR(spectral_density_eval(GaussianCopula{DenseMatrix::Identity(2, 2), marginals}, w),
              spectral_density_eval(PerDimProduct{marginals}, w), 1e-14);
}

TEST(Density, EmpiricalIsUnsupported) {
  EXPECT_EQ(code_of([] { spectral_density_eval(Empirical{DenseMatrix::Zero(2, 1)}, Vector::Zero(1)); }),
            ErrorCode::UnsupportedSpec);
}

TEST(Duality, MonteCarloErrorHalvesWhenFrequenciesQuadruple) {
  for (const auto& c : oracle::duality_cases()) {
    const double ratio = oracle::duality_shrink_ratio(c, 100, 200);
    EXPECT_GE(ratio, 1.6) << c.name;
    EXPECT_LE(ratio, 2.6) << c.name;
  }
}
