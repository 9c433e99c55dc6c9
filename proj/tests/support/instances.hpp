#pragma once

#include <cmath>

#include "oracles.hpp"
#include "srff/gp_model.hpp"
#include "srff/numeric.hpp"

namespace oracle {

struct Instance {
  srff::DenseMatrix x;
  srff::DenseMatrix x_star;
  srff::Vector y;
  srff::FrequencyBank bank;
  srff::FeatureMode mode;
  srff::Hyperparams hyper;
};

/// Random regression instance with n <= 50, m <= 10, D <= 3.
inline Instance random_instance(std::uint64_t seed, srff::FeatureMode mode) {
  srff::SeededRng rng(seed);
  const auto n = srff::Index(1 + rng.uniform_index(50));
  const auto m = srff::Index(1 + rng.uniform_index(10));
  const auto d = srff::Index(1 + rng.uniform_index(3));
  const double sigma_f2 = std::exp(std::log(0.3) + rng.uniform01() * std::log(10.0));
  const double sigma_n2 = std::exp(std::log(0.01) + rng.uniform01() * std::log(100.0));
  srff::DenseMatrix x = srff::standard_normal(rng, n, d);
  srff::DenseMatrix x_star = 1.5 * srff::standard_normal(rng, 6, d);
  srff::Vector y = srff::standard_normal(rng, n, 1);
  srff::DenseMatrix o1 = 1.5 * srff::standard_normal(rng, m, d);
  srff::DenseMatrix o2 = 1.5 * srff::standard_normal(rng, m, d);
  auto bank = mode == srff::FeatureMode::Stationary ? srff::FrequencyBank::stationary(std::move(o1))
                                                    : srff::FrequencyBank::nonstationary(std::move(o1), std::move(o2));
  return {std::move(x), std::move(x_star), std::move(y), std::move(bank), mode,
          srff::Hyperparams::from_variances(sigma_f2, sigma_n2)};
}

/// k-hat(a, b) from explicit sums over frequencies, sigma_f2 included.
inline Matrix explicit_kernel(const Matrix& a, const Matrix& b, const srff::FrequencyBank& bank, srff::FeatureMode mode,
                              double sigma_f2) {
  const auto m = bank.m();
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::RowVectorXd w1 = bank.omega1().row(r);
        const Eigen::RowVectorXd w2 = bank.omega2().row(r);
        if (mode == srff::FeatureMode::Stationary) {
          s += std::cos(w1.dot(a.row(i) - b.row(j)));
        } else {
          const double ca = std::cos(w1.dot(a.row(i))) + std::cos(w2.dot(a.row(i)));
          const double sa = std::sin(w1.dot(a.row(i))) + std::sin(w2.dot(a.row(i)));
          const double cb = std::cos(w1.dot(b.row(j))) + std::cos(w2.dot(b.row(j)));
          const double sb = std::sin(w1.dot(b.row(j))) + std::sin(w2.dot(b.row(j)));
          s += ca * cb + sa * sb;
        }
      }
      k(i, j) = sigma_f2 * s / (mode == srff::FeatureMode::Stationary ? double(m) : 4.0 * double(m));
    }
  }
  return k;
}

}  // namespace oracle
