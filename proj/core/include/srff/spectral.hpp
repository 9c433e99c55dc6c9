#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "srff/numeric.hpp"

namespace srff {

// Conventions. Every measure is the Fourier dual of a kernel with k(0) = 1:
//   GaussianSE(l)        k = exp(-d^2 / (2 l^2))        w ~ N(0, l^-2)
//   LaplacianCauchy(s)   k = exp(-s |d|)                w ~ Cauchy(0, s)
//   MaternT(lambda, s)   Matern(lambda) with length s   w ~ t_{2 lambda} / s
// Multi-dimensional Gaussian and Laplacian forms are products over dimensions.

/// One-dimensional frequency marginal, used by copulas and per-dim products.
struct Marginal1D {
  enum class Kind { Gaussian, Cauchy, StudentT, Laplace };

  Kind kind = Kind::Gaussian;
  double scale = 1.0;       // lengthscale (Gaussian, StudentT) or rate/scale (Cauchy, Laplace)
  double smoothness = 0.5;  // Matern lambda, StudentT only

  static Marginal1D gaussian(double lengthscale) { return {Kind::Gaussian, lengthscale, 0.5}; }
  static Marginal1D cauchy(double scale) { return {Kind::Cauchy, scale, 0.5}; }
  static Marginal1D student_t(double smoothness, double lengthscale) {
    return {Kind::StudentT, lengthscale, smoothness};
  }
  static Marginal1D laplace(double scale) { return {Kind::Laplace, scale, 0.5}; }

  void validate() const;
  double sample(SeededRng& rng) const;
  double cdf(double w) const;
  double density(double w) const;
  /// Quantile at lower-tail probability u.
  double quantile(double u) const;
  /// Quantile at upper-tail probability q, i.e. quantile(1 - q) without cancellation.
  double quantile_upper(double q) const;
  /// Kernel value at lag d, k(0) = 1.
  double kernel(double lag) const;
};

struct GaussianSE {
  std::vector<double> lengthscales;
};

struct LaplacianCauchy {
  std::vector<double> scales;
};

/// Isotropic Matern; frequencies follow a multivariate Student-t with 2*lambda dof.
struct MaternT {
  double smoothness = 0.5;
  double lengthscale = 1.0;
};

struct MixtureOfGaussians {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<DenseMatrix> covariances;
};

struct GaussianCopula {
  DenseMatrix correlation;
  std::vector<Marginal1D> marginals;
};

struct PerDimProduct {
  std::vector<Marginal1D> marginals;
};

/// A fixed set of frequencies; sampling draws rows uniformly with replacement,
/// or returns them as-is when the requested count matches.
struct Empirical {
  DenseMatrix frequencies;
};

using SpectralMeasureSpec = std::variant<GaussianSE, LaplacianCauchy, MaternT, MixtureOfGaussians,
                                         GaussianCopula, PerDimProduct, Empirical>;

/// Number of input dimensions the spec is tied to; nullopt for isotropic families.
std::optional<Index> spec_dims(const SpectralMeasureSpec& spec);
std::string spec_family_name(const SpectralMeasureSpec& spec);
void validate_spec(const SpectralMeasureSpec& spec);

/// Matern with 0.5 degrees of freedom in the frequency domain (lambda = 0.25),
/// the heavy-tailed temporal choice for separable spatio-temporal kernels.
SpectralMeasureSpec student_t_half_dof_preset();

class FrequencyBank {
 public:
  static FrequencyBank stationary(DenseMatrix omega);
  static FrequencyBank nonstationary(DenseMatrix omega1, DenseMatrix omega2);

  Index m() const noexcept { return omega1_.rows(); }
  Index dims() const noexcept { return omega1_.cols(); }
  bool is_stationary() const noexcept { return stationary_; }

  const DenseMatrix& omega1() const noexcept { return omega1_; }
  const DenseMatrix& omega2() const noexcept { return stationary_ ? omega1_ : omega2_; }

  bool operator==(const FrequencyBank& other) const;

 private:
  FrequencyBank(DenseMatrix o1, DenseMatrix o2, bool stationary)
      : omega1_(std::move(o1)), omega2_(std::move(o2)), stationary_(stationary) {}

  DenseMatrix omega1_;
  DenseMatrix omega2_;  // empty when stationary
  bool stationary_;
};

/// m x D draws from the spec's frequency density.
DenseMatrix sample_frequencies(const SpectralMeasureSpec& spec, Index m, Index dims, SeededRng& rng);

FrequencyBank sample_stationary(const SpectralMeasureSpec& spec, Index m, Index dims, SeededRng& rng);

/// Omega1 from spec1 then omega2 from spec2, both from the same stream.
FrequencyBank sample_nonstationary(const SpectralMeasureSpec& spec1, const SpectralMeasureSpec& spec2,
                                   Index m, Index dims, SeededRng& rng);
/// Omega1 and omega2 from separate streams.
FrequencyBank sample_nonstationary(const SpectralMeasureSpec& spec1, const SpectralMeasureSpec& spec2,
                                   Index m, Index dims, SeededRng& rng1, SeededRng& rng2);

/// out(k, d) = Q_d(Phi_N(z(k, d))): maps correlated standard normals to the
/// requested marginals through the standard normal CDF.
DenseMatrix gaussian_copula_transform(const DenseMatrix& z, std::span<const Marginal1D> marginals);
DenseMatrix gaussian_copula_transform(const DenseMatrix& z,
                                      std::span<const std::function<double(double)>> quantiles);

/// p(w) for the named families, mixtures, products and copulas.
double spectral_density_eval(const SpectralMeasureSpec& spec, const Vector& omega);

}  // namespace srff
