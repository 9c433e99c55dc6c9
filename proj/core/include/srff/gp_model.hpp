#pragma once

#include <cmath>

#include "srff/data_io.hpp"
#include "srff/features.hpp"
#include "srff/numeric.hpp"
#include "srff/spectral.hpp"

namespace srff {

/// Smallest noise variance accepted in standardized units.
inline constexpr double kNoiseVarianceFloor = 1e-10;

/// Signal and noise variances, stored as logs.
struct Hyperparams {
  double log_sigma_f2 = 0.0;
  double log_sigma_n2 = std::log(0.1);

  static Hyperparams from_variances(double sigma_f2, double sigma_n2);
  double sigma_f2() const { return std::exp(log_sigma_f2); }
  double sigma_n2() const { return std::exp(log_sigma_n2); }

  bool operator==(const Hyperparams&) const = default;
};

/// The 2m x 2m system A = Phi^T Phi + ridge I with A = R R^T, R alpha1 = Phi^T y
/// and R^T alpha2 = alpha1. ridge = sigma_n2 / (sigma_f2 * normalizer).
struct ReducedSystem {
  LowerTriangular r;
  Vector alpha1;
  Vector alpha2;
  Hyperparams hyper;
  FeatureMode mode;
  Index m;
  double ridge;
  double jitter;
};

ReducedSystem fit_state(const FeatureMatrix& phi, const Vector& y, const Hyperparams& hyper);

/// -(|y|^2 - |alpha1|^2)/(2 sn2) - 1/2 sum log R_ii^2 + m log(ridge) - n/2 log(2 pi sn2).
double log_marginal_likelihood_reduced(const FeatureMatrix& phi, const Vector& y, const Hyperparams& hyper);
double log_marginal_likelihood(const ReducedSystem& system, const Vector& y);

/// Dense evaluation through the Cholesky factor of K + sigma_n2 I.
double log_marginal_likelihood_direct(const DenseMatrix& k, const Vector& y, double sigma_n2);

/// Everything needed to predict without the training data.
struct FitState {
  ReducedSystem system;
  FrequencyBank bank;
  StandardizationStats standardization;
};

FitState build_fit_state(const DenseMatrix& x, const Vector& y, const FrequencyBank& bank, FeatureMode mode,
                         const Hyperparams& hyper, StandardizationStats stats);

/// Posterior predictive mean and variance (noise included) in standardized units.
Prediction predict(const ReducedSystem& system, const FeatureMatrix& phi_star);
Prediction predict(const FitState& state, const DenseMatrix& x_star);

/// k-hat(anchor, points) for the fitted kernel, sigma_f2 included.
Vector anchor_field(const FitState& state, const Vector& anchor, const DenseMatrix& points);

}  // namespace srff
