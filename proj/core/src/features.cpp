#include "srff/features.hpp"

#include <cmath>
#include <variant>

namespace srff {

namespace {

void check_dims(const DenseMatrix& x, const FrequencyBank& bank) {
  if (x.cols() != bank.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "inputs have " + std::to_string(x.cols()) +
                                                  " columns, bank has " + std::to_string(bank.dims()));
  }
}

}  // namespace

double feature_normalizer(FeatureMode mode, Index m) {
  return mode == FeatureMode::Stationary ? 1.0 / double(m) : 0.25 / double(m);
}

FeatureMatrix stationary_features(const DenseMatrix& x, const FrequencyBank& bank) {
  if (!bank.is_stationary()) {
    throw Error(ErrorCode::InvalidArgument, "stationary features need a stationary bank");
  }
  check_dims(x, bank);
  const Index m = bank.m();
  const DenseMatrix proj = x * bank.omega1().transpose();
  FeatureMatrix out{DenseMatrix(x.rows(), 2 * m), m, FeatureMode::Stationary};
  out.phi.leftCols(m) = proj.array().cos();
  out.phi.rightCols(m) = proj.array().sin();
  return out;
}

FeatureMatrix nonstationary_features(const DenseMatrix& x, const FrequencyBank& bank) {
  check_dims(x, bank);
  const Index m = bank.m();
  const DenseMatrix p1 = x * bank.omega1().transpose();
  const DenseMatrix p2 = x * bank.omega2().transpose();
  FeatureMatrix out{DenseMatrix(x.rows(), 2 * m), m, FeatureMode::Nonstationary};
  out.phi.leftCols(m) = p1.array().cos() + p2.array().cos();
  out.phi.rightCols(m) = p1.array().sin() + p2.array().sin();
  return out;
}

FeatureMatrix features_for(const DenseMatrix& x, const FrequencyBank& bank, FeatureMode mode) {
  return mode == FeatureMode::Stationary ? stationary_features(x, bank) : nonstationary_features(x, bank);
}

namespace {

void check_normalizer(const FeatureMatrix& phi, const KernelScale& scale) {
  const bool expected_per_pair = phi.mode == FeatureMode::Nonstationary;
  const bool per_pair = scale.normalizer == KernelScale::Normalizer::PerPair;
  if (expected_per_pair != per_pair) {
    throw Error(ErrorCode::ModeNormalizerMismatch,
                expected_per_pair ? "nonstationary features need the 1/(4m) normalizer"
                                  : "stationary features need the 1/m normalizer");
  }
  if (!(scale.sigma_f2 > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma_f2 must be > 0");
}

}  // namespace

DenseMatrix kernel_estimate(const FeatureMatrix& phi, const KernelScale& scale) {
  check_normalizer(phi, scale);
  const Index n = phi.rows();
  DenseMatrix k = DenseMatrix::Zero(n, n);
  k.selfadjointView<Eigen::Lower>().rankUpdate(phi.phi, scale.sigma_f2 * scale.factor(phi.m));
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

DenseMatrix kernel_estimate(const FeatureMatrix& left, const FeatureMatrix& right, const KernelScale& scale) {
  check_normalizer(left, scale);
  check_normalizer(right, scale);
  if (left.m != right.m || left.phi.cols() != right.phi.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "feature maps come from different banks");
  }
  return scale.sigma_f2 * scale.factor(left.m) * (left.phi * right.phi.transpose());
}

double matern_kernel(double smoothness, double lengthscale, double r) {
  if (!(smoothness > 0.0) || !(lengthscale > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "Matern needs smoothness > 0 and lengthscale > 0");
  }
  if (r == 0.0) return 1.0;
  if (smoothness == 0.5) return std::exp(-r / lengthscale);
  const double s = std::sqrt(2.0 * smoothness) * r / lengthscale;
  const double log_front = (1.0 - smoothness) * std::log(2.0) - std::lgamma(smoothness) + smoothness * std::log(s);
  const double bessel = std::cyl_bessel_k(smoothness, s);
  if (bessel == 0.0) return 0.0;
  return std::exp(log_front + std::log(bessel));
}

double closed_form_kernel(const SpectralMeasureSpec& spec, const Vector& x1, const Vector& x2) {
  if (x1.size() != x2.size()) throw Error(ErrorCode::DimensionMismatch, "x1 and x2 differ in length");
  try {
    validate_spec(spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidParams, e.what());
  }
  if (const auto d = spec_dims(spec); d && *d != x1.size()) {
    throw Error(ErrorCode::DimensionMismatch, "point dimension does not match spec");
  }
  const Vector lag = x1 - x2;
  if (const auto* s = std::get_if<GaussianSE>(&spec)) {
    double e = 0.0;
    for (Index d = 0; d < lag.size(); ++d) e += lag(d) * lag(d) / (s->lengthscales[d] * s->lengthscales[d]);
    return std::exp(-0.5 * e);
  }
  if (const auto* s = std::get_if<LaplacianCauchy>(&spec)) {
    double e = 0.0;
    for (Index d = 0; d < lag.size(); ++d) e += s->scales[d] * std::abs(lag(d));
    return std::exp(-e);
  }
  if (const auto* s = std::get_if<MaternT>(&spec)) {
    return matern_kernel(s->smoothness, s->lengthscale, lag.norm());
  }
  if (const auto* s = std::get_if<PerDimProduct>(&spec)) {
    double k = 1.0;
    for (Index d = 0; d < lag.size(); ++d) k *= s->marginals[std::size_t(d)].kernel(lag(d));
    return k;
  }
  if (const auto* s = std::get_if<MixtureOfGaussians>(&spec)) {
    double k = 0.0;
    for (std::size_t j = 0; j < s->weights.size(); ++j) {
      k += s->weights[j] * std::exp(-0.5 * lag.dot(s->covariances[j] * lag)) * std::cos(s->means[j].dot(lag));
    }
    return k;
  }
  throw Error(ErrorCode::UnsupportedSpec, spec_family_name(spec) + " has no closed-form kernel");
}

}  // namespace srff
