#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "srff/error.hpp"
#include "srff/features.hpp"

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

DenseMatrix scalar(double v) { return DenseMatrix::Constant(1, 1, v); }

FrequencyBank random_pair(std::uint64_t seed, Index m, Index dims) {
  SeededRng rng(seed);
  DenseMatrix o1 = standard_normal(rng, m, dims);
  DenseMatrix o2 = standard_normal(rng, m, dims);
  return FrequencyBank::nonstationary(std::move(o1), std::move(o2));
}

double min_eigenvalue(const DenseMatrix& k) {
  return Eigen::SelfAdjointEigenSolver<DenseMatrix>(k, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

const KernelScale kStat = KernelScale::for_mode(1.0, FeatureMode::Stationary);
const KernelScale kNonstat = KernelScale::for_mode(1.0, FeatureMode::Nonstationary);

}  // namespace

TEST(StationaryFeatures, OriginRow) {
  SeededRng rng(1);
  const auto bank = FrequencyBank::stationary(standard_normal(rng, 4, 3));
  const auto f = stationary_features(DenseMatrix::Zero(1, 3), bank);
  EXPECT_EQ(f.phi.cols(), 8);
  EXPECT_EQ(f.phi.leftCols(4), DenseMatrix::Ones(1, 4));
  EXPECT_EQ(f.phi.rightCols(4), DenseMatrix::Zero(1, 4));
}

TEST(StationaryFeatures, AnalyticPoint) {
  const auto f = stationary_features(scalar(std::numbers::pi), FrequencyBank::stationary(scalar(1.0)));
  EXPECT_NEAR(f.phi(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(f.phi(0, 1), 0.0, 1e-15);
}

TEST(StationaryFeatures, RowsSatisfyPythagoras) {
  SeededRng rng(2);
  const Index m = 17;
  const auto bank = FrequencyBank::stationary(3.0 * standard_normal(rng, m, 2));
  const auto f = stationary_features(5.0 * standard_normal(rng, 30, 2), bank);
  EXPECT_LE((f.phi.rowwise().squaredNorm().array() - double(m)).abs().maxCoeff(), 1e-12);
  EXPECT_LE(f.phi.cwiseAbs().maxCoeff(), 1.0);
}

TEST(StationaryFeatures, RejectsMismatchedInputs) {
  const auto bank = FrequencyBank::stationary(DenseMatrix::Ones(2, 2));
  EXPECT_EQ(code_of([&] { stationary_features(DenseMatrix::Zero(3, 1), bank); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { stationary_features(DenseMatrix::Zero(3, 2), random_pair(1, 2, 2)); }),
            ErrorCode::InvalidArgument);
}

TEST(NonstationaryFeatures, EqualBanksDoubleTheStationaryMap) {
  SeededRng rng(3);
  const DenseMatrix omega = standard_normal(rng, 6, 2);
  const DenseMatrix x = standard_normal(rng, 10, 2);
  const auto ns = nonstationary_features(x, FrequencyBank::nonstationary(omega, omega));
  const auto st = stationary_features(x, FrequencyBank::stationary(omega));
  EXPECT_EQ(ns.phi, 2.0 * st.phi);
}

TEST(NonstationaryFeatures, OriginAndAnalyticPoint) {
  const auto zero = nonstationary_features(DenseMatrix::Zero(1, 2), random_pair(4, 3, 2));
  EXPECT_EQ(zero.phi.leftCols(3), DenseMatrix::Constant(1, 3, 2.0));
  EXPECT_EQ(zero.phi.rightCols(3), DenseMatrix::Zero(1, 3));
  const auto f = nonstationary_features(scalar(std::numbers::pi / 2), FrequencyBank::nonstationary(scalar(1.0), scalar(-1.0)));
  EXPECT_NEAR(f.phi(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(f.phi(0, 1), 0.0, 1e-15);
}

TEST(NonstationaryFeatures, EntriesBoundedByTwo) {
  SeededRng rng(5);
  const auto f = nonstationary_features(4.0 * standard_normal(rng, 40, 3), random_pair(6, 9, 3));
  EXPECT_LE(f.phi.cwiseAbs().maxCoeff(), 2.0);
}

TEST(KernelEstimate, StationaryDiagonalIsExactlyOne) {
  SeededRng rng(7);
  const auto bank = FrequencyBank::stationary(standard_normal(rng, 11, 2));
  const DenseMatrix k = kernel_estimate(stationary_features(standard_normal(rng, 25, 2), bank), KernelScale::for_mode(2.5, FeatureMode::Stationary));
  EXPECT_LE((k.diagonal() / 2.5 - Vector::Ones(25)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KernelEstimate, NonstationaryDiagonalMatchesExpansion) {
  SeededRng rng(8);
  const Index m = 7;
  const auto bank = random_pair(9, m, 2);
  const DenseMatrix x = standard_normal(rng, 15, 2);
  const DenseMatrix k = kernel_estimate(nonstationary_features(x, bank), kNonstat);
  for (Index i = 0; i < x.rows(); ++i) {
    double expected = 0.0;
    for (Index j = 0; j < m; ++j) {
      expected += 2.0 + 2.0 * std::cos((bank.omega1().row(j) - bank.omega2().row(j)).dot(x.row(i)));
    }
    expected /= 4.0 * double(m);
    EXPECT_NEAR(k(i, i), expected, 1e-13);
    EXPECT_GE(k(i, i), 0.0);
    EXPECT_LE(k(i, i), 1.0 + 1e-15);
  }
}

TEST(KernelEstimate, EqualBanksGiveTheStationaryKernel) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(seed);
    const DenseMatrix omega = 2.0 * standard_normal(rng, 8, 3);
    const DenseMatrix x = standard_normal(rng, 12, 3);
    const DenseMatrix ks = kernel_estimate(stationary_features(x, FrequencyBank::stationary(omega)), kStat);
    const DenseMatrix kn = kernel_estimate(nonstationary_features(x, FrequencyBank::nonstationary(omega, omega)), kNonstat);
    EXPECT_LE((ks - kn).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(KernelEstimate, SymmetricAndPositiveSemidefinite) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(100 + seed);
    const DenseMatrix x = standard_normal(rng, 30, 2);
    const auto bank = random_pair(seed, 25, 2);
    const DenseMatrix kn = kernel_estimate(nonstationary_features(x, bank), kNonstat);
    const DenseMatrix ks = kernel_estimate(stationary_features(x, FrequencyBank::stationary(bank.omega1())), kStat);
    for (const DenseMatrix* k : {&kn, &ks}) {
      EXPECT_LE((*k - k->transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_GE(min_eigenvalue(*k), -1e-9);
    }
  }
}

TEST(KernelEstimate, RejectsWrongNormalizer) {
  const auto f = stationary_features(DenseMatrix::Zero(2, 1), FrequencyBank::stationary(scalar(1.0)));
  EXPECT_EQ(code_of([&] { kernel_estimate(f, kNonstat); }), ErrorCode::ModeNormalizerMismatch);
}

TEST(KernelEstimate, StationaryKernelIsTranslationInvariant) {
  SeededRng rng(12);
  const DenseMatrix x = standard_normal(rng, 20, 2);
  const DenseMatrix shifted = x.rowwise() + Eigen::RowVector2d(0.7, -1.9);
  const auto bank = FrequencyBank::stationary(standard_normal(rng, 15, 2));
  const DenseMatrix a = kernel_estimate(stationary_features(x, bank), kStat);
  const DenseMatrix b = kernel_estimate(stationary_features(shifted, bank), kStat);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);

  const auto pair = random_pair(13, 15, 2);
  const DenseMatrix c = kernel_estimate(nonstationary_features(x, pair), kNonstat);
  const DenseMatrix d = kernel_estimate(nonstationary_features(shifted, pair), kNonstat);
  EXPECT_GT((c - d).cwiseAbs().maxCoeff(), 0.01);
}

TEST(ClosedForm, UnitAtZeroLag) {
  Vector x(2);
  x << 0.3, -1.2;
  EXPECT_DOUBLE_EQ(closed_form_kernel(GaussianSE{{0.5, 2.0}}, x, x), 1.0);
  EXPECT_DOUBLE_EQ(closed_form_kernel(LaplacianCauchy{{0.5, 2.0}}, x, x), 1.0);
  EXPECT_DOUBLE_EQ(closed_form_kernel(MaternT{1.5, 0.7}, x, x), 1.0);
}

TEST(ClosedForm, AnalyticValues) {
  const Vector zero = Vector::Zero(1);
  const Vector one = Vector::Ones(1);
  EXPECT_NEAR(closed_form_kernel(GaussianSE{{1.0}}, zero, one), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(closed_form_kernel(MaternT{0.5, 1.0}, zero, one), std::exp(-1.0), 1e-14);
  EXPECT_NEAR(closed_form_kernel(LaplacianCauchy{{2.0}}, zero, one), std::exp(-2.0), 1e-15);
  for (double r : {0.1, 0.8, 2.5}) {
    const double a = std::sqrt(3.0) * r;
    const double b = std::sqrt(5.0) * r;
    EXPECT_NEAR(matern_kernel(1.5, 1.0, r), (1 + a) * std::exp(-a), 1e-13);
    EXPECT_NEAR(matern_kernel(2.5, 1.0, r), (1 + b + b * b / 3) * std::exp(-b), 1e-13);
  }
}

TEST(ClosedForm, RejectsInvalidParams) {
  const Vector zero = Vector::Zero(1);
  EXPECT_EQ(code_of([&] { closed_form_kernel(GaussianSE{{-1.0}}, zero, zero); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([&] { closed_form_kernel(MaternT{0.0, 1.0}, zero, zero); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([&] { closed_form_kernel(Empirical{DenseMatrix::Ones(1, 1)}, zero, zero); }),
            ErrorCode::UnsupportedSpec);
}
