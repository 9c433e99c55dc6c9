#include "srff/gp_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srff {

Hyperparams Hyperparams::from_variances(double sigma_f2, double sigma_n2) {
  if (!(sigma_f2 > 0.0) || !(sigma_n2 > 0.0) || !std::isfinite(sigma_f2) || !std::isfinite(sigma_n2)) {
    throw Error(ErrorCode::InvalidParams, "variances must be finite and > 0");
  }
  return {std::log(sigma_f2), std::log(sigma_n2)};
}

namespace {

void check_hyper(const Hyperparams& h) {
  if (!std::isfinite(h.log_sigma_f2) || !std::isfinite(h.log_sigma_n2)) {
    throw Error(ErrorCode::InvalidParams, "hyperparameters must be finite");
  }
}

}  // namespace

ReducedSystem fit_state(const FeatureMatrix& phi, const Vector& y, const Hyperparams& hyper) {
  if (y.size() != phi.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "y has " + std::to_string(y.size()) + " entries, features have " +
                                                  std::to_string(phi.rows()) + " rows");
  }
  check_hyper(hyper);
  const Index p = phi.phi.cols();
  const double ridge = hyper.sigma_n2() / (hyper.sigma_f2() * feature_normalizer(phi.mode, phi.m));

  DenseMatrix a = DenseMatrix::Zero(p, p);
  a.selfadjointView<Eigen::Lower>().rankUpdate(phi.phi.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  a.diagonal().array() += ridge;

  auto chol = cholesky(a);
  Vector alpha1 = solve_lower(chol.factor, Vector(phi.phi.transpose() * y));
  Vector alpha2 = solve_upper(chol.factor, alpha1);
  return ReducedSystem{std::move(chol.factor), std::move(alpha1), std::move(alpha2), hyper, phi.mode, phi.m,
                       ridge, chol.jitter};
}

double log_marginal_likelihood(const ReducedSystem& s, const Vector& y) {
  const double n = double(y.size());
  const double sn2 = s.hyper.sigma_n2();
  const double log_ridge = std::log(s.ridge);
  return -(y.squaredNorm() - s.alpha1.squaredNorm()) / (2.0 * sn2) - 0.5 * s.r.log_det_product() +
         double(s.m) * log_ridge - 0.5 * n * std::log(2.0 * std::numbers::pi * sn2);
}

double log_marginal_likelihood_reduced(const FeatureMatrix& phi, const Vector& y, const Hyperparams& hyper) {
  return log_marginal_likelihood(fit_state(phi, y, hyper), y);
}

double log_marginal_likelihood_direct(const DenseMatrix& k, const Vector& y, double sigma_n2) {
  constexpr double kMinNoise = 1e-12;
  constexpr Index kMaxN = 2000;
  if (!(sigma_n2 >= kMinNoise)) {
    throw Error(ErrorCode::InvalidArgument, "dense evaluation needs sigma_n2 >= 1e-12");
  }
  if (k.rows() > kMaxN) throw Error(ErrorCode::InvalidArgument, "dense evaluation is limited to n <= 2000");
  if (k.rows() != k.cols() || k.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "kernel and outputs disagree in size");
  }
  DenseMatrix c = k;
  c.diagonal().array() += sigma_n2;
  const auto chol = cholesky(c, JitterPolicy::none());
  const Vector white = solve_lower(chol.factor, y);
  const double n = double(y.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * chol.factor.log_det_product() -
         0.5 * white.squaredNorm();
}

FitState build_fit_state(const DenseMatrix& x, const Vector& y, const FrequencyBank& bank, FeatureMode mode,
                         const Hyperparams& hyper, StandardizationStats stats) {
  return FitState{fit_state(features_for(x, bank, mode), y, hyper), bank, std::move(stats)};
}

Prediction predict(const ReducedSystem& s, const FeatureMatrix& phi_star) {
  if (phi_star.phi.cols() != s.r.order() || phi_star.mode != s.mode) {
    throw Error(ErrorCode::DimensionMismatch, "test features do not match the fitted system");
  }
  const Index n = phi_star.rows();
  const double sn2 = s.hyper.sigma_n2();
  Prediction out{phi_star.phi * s.alpha2, Vector(n)};
  // Blocked so a large grid never needs a 2m x n_star temporary.
  constexpr Index kBlock = 1024;
  for (Index start = 0; start < n; start += kBlock) {
    const Index len = std::min(kBlock, n - start);
    const DenseMatrix v = solve_lower(s.r, DenseMatrix(phi_star.phi.middleRows(start, len).transpose()));
    out.variance.segment(start, len) = (sn2 + sn2 * v.colwise().squaredNorm().array()).matrix().transpose();
  }
  return out;
}

Prediction predict(const FitState& state, const DenseMatrix& x_star) {
  if (x_star.cols() != state.bank.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "test inputs have " + std::to_string(x_star.cols()) +
                                                  " columns, model has " + std::to_string(state.bank.dims()));
  }
  return predict(state.system, features_for(x_star, state.bank, state.system.mode));
}

Vector anchor_field(const FitState& state, const Vector& anchor, const DenseMatrix& points) {
  const auto& s = state.system;
  const auto phi_a = features_for(anchor.transpose(), state.bank, s.mode);
  const auto phi_p = features_for(points, state.bank, s.mode);
  const double scale = s.hyper.sigma_f2() * feature_normalizer(s.mode, s.m);
  return scale * (phi_p.phi * phi_a.phi.row(0).transpose());
}

}  // namespace srff
