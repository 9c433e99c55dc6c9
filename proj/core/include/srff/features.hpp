#pragma once

#include "srff/numeric.hpp"
#include "srff/spectral.hpp"

namespace srff {

enum class FeatureMode { Stationary, Nonstationary };

/// n x 2m random Fourier feature map: cosine block then sine block.
struct FeatureMatrix {
  DenseMatrix phi;
  Index m = 0;
  FeatureMode mode = FeatureMode::Stationary;

  Index rows() const noexcept { return phi.rows(); }
};

/// K-hat = sigma_f2 * normalizer * Phi Phi^T.
struct KernelScale {
  enum class Normalizer { PerFrequency, PerPair };  // 1/m, 1/(4m)

  double sigma_f2 = 1.0;
  Normalizer normalizer = Normalizer::PerFrequency;

  static KernelScale for_mode(double sigma_f2, FeatureMode mode) {
    return {sigma_f2, mode == FeatureMode::Stationary ? Normalizer::PerFrequency : Normalizer::PerPair};
  }
  double factor(Index m) const { return normalizer == Normalizer::PerFrequency ? 1.0 / double(m) : 0.25 / double(m); }
};

/// 1/m for stationary maps, 1/(4m) for nonstationary maps.
double feature_normalizer(FeatureMode mode, Index m);

/// [cos(X Omega^T)  sin(X Omega^T)]; the bank must be stationary.
FeatureMatrix stationary_features(const DenseMatrix& x, const FrequencyBank& bank);

/// [cos(X O1^T) + cos(X O2^T)  sin(X O1^T) + sin(X O2^T)].
FeatureMatrix nonstationary_features(const DenseMatrix& x, const FrequencyBank& bank);

/// Stationary map for stationary banks, nonstationary map otherwise.
FeatureMatrix features_for(const DenseMatrix& x, const FrequencyBank& bank, FeatureMode mode);

/// Full n x n kernel estimate. Test and small-export use only: the fit and
/// predict paths never form it.
DenseMatrix kernel_estimate(const FeatureMatrix& phi, const KernelScale& scale);

/// Cross kernel between two feature maps built from the same bank.
DenseMatrix kernel_estimate(const FeatureMatrix& left, const FeatureMatrix& right, const KernelScale& scale);

/// Matern(lambda) with lengthscale at distance r >= 0, normalized to 1 at r = 0.
double matern_kernel(double smoothness, double lengthscale, double r);

/// Exact kernel paired with a named spectral measure, k(x, x) = 1.
double closed_form_kernel(const SpectralMeasureSpec& spec, const Vector& x1, const Vector& x2);

}  // namespace srff
