#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "instances.hpp"
#include "oracles.hpp"
#include "srff/error.hpp"
#include "srff/gp_model.hpp"

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

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const StandardizationStats kNoScaling = StandardizationStats::identity(1);

}  // namespace

TEST(FitState, ZeroTargetsGiveZeroSolves) {
  const auto inst = oracle::random_instance(1, FeatureMode::Stationary);
  const auto sys = fit_state(features_for(inst.x, inst.bank, inst.mode), Vector::Zero(inst.x.rows()), inst.hyper);
  EXPECT_EQ(sys.alpha1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sys.alpha2.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FitState, ZeroFeaturesGiveScaledIdentity) {
  const Index m = 3;
  const FeatureMatrix phi{DenseMatrix::Zero(4, 2 * m), m, FeatureMode::Stationary};
  const auto hyper = Hyperparams::from_variances(2.0, 0.5);
  const auto sys = fit_state(phi, Vector::LinSpaced(4, 1, 4), hyper);
  const double ridge = double(m) * 0.5 / 2.0;
  EXPECT_DOUBLE_EQ(sys.ridge, ridge);
  const DenseMatrix r = sys.r.matrix();
  EXPECT_LE((r * r.transpose() - ridge * DenseMatrix::Identity(2 * m, 2 * m)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(sys.alpha2.cwiseAbs().maxCoeff(), 0.0);

  const FeatureMatrix phi_ns{DenseMatrix::Zero(4, 2 * m), m, FeatureMode::Nonstationary};
  EXPECT_DOUBLE_EQ(fit_state(phi_ns, Vector::Ones(4), hyper).ridge, 4.0 * ridge);
}

TEST(FitState, SolvesTheNormalEquations) {
  SeededRng rng(5);
  const auto bank = FrequencyBank::stationary(standard_normal(rng, 2, 1));
  const DenseMatrix x = standard_normal(rng, 5, 1);
  const Vector y = standard_normal(rng, 5, 1);
  const auto phi = features_for(x, bank, FeatureMode::Stationary);
  const auto sys = fit_state(phi, y, Hyperparams::from_variances(1.0, 0.2));
  const DenseMatrix r = sys.r.matrix();
  const Vector rhs = phi.phi.transpose() * y;
  EXPECT_LE((r * r.transpose() * sys.alpha2 - rhs).norm() / rhs.norm(), 1e-8);
}

TEST(Lml, ScalarCaseMatchesGaussianDensity) {
  const auto bank = FrequencyBank::stationary(DenseMatrix::Constant(1, 1, 0.7));
  const DenseMatrix x = DenseMatrix::Constant(1, 1, 0.4);
  const Vector y = Vector::Constant(1, 1.3);
  const auto hyper = Hyperparams::from_variances(1.7, 0.3);
  const double var = 1.7 * 1.0 + 0.3;  // stationary k-hat(x, x) = 1
  const double expected = -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * 1.3 * 1.3 / var;
  EXPECT_LE(rel(log_marginal_likelihood_reduced(features_for(x, bank, FeatureMode::Stationary), y, hyper), expected), 1e-12);
}

TEST(Lml, ReducedMatchesDenseOracle) {
  for (auto mode : {FeatureMode::Stationary, FeatureMode::Nonstationary}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto inst = oracle::random_instance(seed, mode);
      const double reduced = log_marginal_likelihood_reduced(features_for(inst.x, inst.bank, mode), inst.y, inst.hyper);
      const auto k = oracle::explicit_kernel(inst.x, inst.x, inst.bank, mode, inst.hyper.sigma_f2());
      EXPECT_LE(rel(reduced, oracle::gaussian_log_density(k, inst.y, inst.hyper.sigma_n2())), 1e-8) << seed;
      EXPECT_LE(rel(log_marginal_likelihood_direct(k, inst.y, inst.hyper.sigma_n2()),
                    oracle::gaussian_log_density(k, inst.y, inst.hyper.sigma_n2())),
                1e-10);
    }
  }
}

TEST(Lml, ZeroTargetsLeaveOnlyTheDeterminant) {
  const auto inst = oracle::random_instance(17, FeatureMode::Nonstationary);
  const Vector y = Vector::Zero(inst.x.rows());
  const double reduced = log_marginal_likelihood_reduced(features_for(inst.x, inst.bank, inst.mode), y, inst.hyper);
  const auto k = oracle::explicit_kernel(inst.x, inst.x, inst.bank, inst.mode, inst.hyper.sigma_f2());
  const Index n = inst.x.rows();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(k + inst.hyper.sigma_n2() * DenseMatrix::Identity(n, n));
  const double expected = -0.5 * eig.eigenvalues().array().log().sum() - 0.5 * double(n) * std::log(2.0 * std::numbers::pi);
  EXPECT_LE(rel(reduced, expected), 1e-10);
}

TEST(Lml, DirectSmallCasesAndGuards) {
  EXPECT_NEAR(log_marginal_likelihood_direct(DenseMatrix::Zero(1, 1), Vector::Zero(1), 1.0),
              -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(-0.5 * std::log(2.0 * std::numbers::pi), -0.9189, 1e-4);
  EXPECT_EQ(code_of([] { log_marginal_likelihood_direct(DenseMatrix::Identity(2, 2), Vector::Zero(2), 1e-13); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { log_marginal_likelihood_direct(DenseMatrix::Zero(2001, 2001), Vector::Zero(2001), 1.0); }),
            ErrorCode::InvalidArgument);
}

TEST(Lml, PenalizesMisspecifiedNoise) {
  SeededRng rng(21);
  const DenseMatrix x = standard_normal(rng, 40, 1);
  Vector y = (2.0 * x.col(0)).array().sin().matrix() + 0.1 * standard_normal(rng, 40, 1);
  const auto bank = FrequencyBank::stationary(2.0 * standard_normal(rng, 10, 1));
  const auto phi = features_for(x, bank, FeatureMode::Stationary);
  const double fitted = log_marginal_likelihood_reduced(phi, y, Hyperparams::from_variances(1.0, 0.01));
  const double gross = log_marginal_likelihood_reduced(phi, y, Hyperparams::from_variances(1.0, 100.0));
  EXPECT_GT(fitted, gross);
}

TEST(Predict, MatchesDenseConditioning) {
  for (auto mode : {FeatureMode::Stationary, FeatureMode::Nonstationary}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto inst = oracle::random_instance(seed, mode);
      const auto sys = fit_state(features_for(inst.x, inst.bank, mode), inst.y, inst.hyper);
      const auto p = predict(sys, features_for(inst.x_star, inst.bank, mode));
      const double sf2 = inst.hyper.sigma_f2();
      const auto k = oracle::explicit_kernel(inst.x, inst.x, inst.bank, mode, sf2);
      const auto ks = oracle::explicit_kernel(inst.x, inst.x_star, inst.bank, mode, sf2);
      const Vector kss = oracle::explicit_kernel(inst.x_star, inst.x_star, inst.bank, mode, sf2).diagonal();
      const auto dense = oracle::condition(k, ks, kss, inst.y, inst.hyper.sigma_n2());
      EXPECT_LE(oracle::max_rel_diff(p.mean, dense.mean), 1e-8) << seed;
      EXPECT_LE(oracle::max_rel_diff(p.variance, dense.variance), 1e-8) << seed;
      EXPECT_GE(p.variance.minCoeff(), inst.hyper.sigma_n2() - 1e-12);
    }
  }
}

TEST(Predict, InterpolatesWithTinyNoise) {
  SeededRng rng(31);
  const DenseMatrix x = DenseMatrix(Vector::LinSpaced(5, -1.0, 1.0));
  const Vector y = standard_normal(rng, 5, 1);
  const auto bank = FrequencyBank::stationary(2.0 * standard_normal(rng, 20, 1));
  const auto hyper = Hyperparams::from_variances(1.0, kNoiseVarianceFloor);
  const auto state = build_fit_state(x, y, bank, FeatureMode::Stationary, hyper, kNoScaling);
  EXPECT_LE((predict(state, x).mean - y).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Predict, ZeroTargetsGiveZeroMean) {
  const auto inst = oracle::random_instance(3, FeatureMode::Nonstationary);
  const auto sys = fit_state(features_for(inst.x, inst.bank, inst.mode), Vector::Zero(inst.x.rows()), inst.hyper);
  EXPECT_EQ(predict(sys, features_for(inst.x_star, inst.bank, inst.mode)).mean.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Predict, UncorrelatedPointRevertsToPrior) {
  // cos(w * pi / 2) = 0 for w = 1, 3, so the test point's features are orthogonal to those at 0.
  DenseMatrix omega(2, 1);
  omega << 1.0, 3.0;
  const auto bank = FrequencyBank::stationary(omega);
  const auto hyper = Hyperparams::from_variances(1.8, 0.2);
  const auto state = build_fit_state(DenseMatrix::Zero(1, 1), Vector::Constant(1, 0.9), bank, FeatureMode::Stationary,
                                     hyper, kNoScaling);
  const auto p = predict(state, DenseMatrix::Constant(1, 1, std::numbers::pi / 2));
  EXPECT_NEAR(p.variance(0), 0.2 + 1.8, 1e-6);
  EXPECT_NEAR(p.mean(0), 0.0, 1e-12);
}

TEST(Predict, RejectsWrongDimension) {
  const auto inst = oracle::random_instance(4, FeatureMode::Stationary);
  const auto state = build_fit_state(inst.x, inst.y, inst.bank, inst.mode, inst.hyper,
                                     StandardizationStats::identity(inst.x.cols()));
  EXPECT_EQ(code_of([&] { predict(state, DenseMatrix::Zero(2, inst.x.cols() + 1)); }), ErrorCode::DimensionMismatch);
}

TEST(AnchorField, MatchesExplicitKernel) {
  const auto inst = oracle::random_instance(8, FeatureMode::Nonstationary);
  const auto state = build_fit_state(inst.x, inst.y, inst.bank, inst.mode, inst.hyper,
                                     StandardizationStats::identity(inst.x.cols()));
  const Vector anchor = inst.x_star.row(0).transpose();
  const auto k = oracle::explicit_kernel(inst.x_star.topRows(1), inst.x, inst.bank, inst.mode, inst.hyper.sigma_f2());
  EXPECT_LE((anchor_field(state, anchor, inst.x) - k.row(0).transpose()).cwiseAbs().maxCoeff(), 1e-12);
}
