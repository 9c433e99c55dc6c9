#include "srff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "srff/features.hpp"

namespace srff {

namespace bm = boost::math;

namespace {

constexpr double kPi = 3.14159265358979323846;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

void require_positive(const std::vector<double>& values, const char* name) {
  require(!values.empty(), std::string(name) + " must not be empty");
  for (double v : values) {
    require(std::isfinite(v) && v > 0.0, std::string(name) + " must be finite and > 0");
  }
}

double clamp_probability(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double standard_normal_quantile(double u) {
  return bm::quantile(bm::normal_distribution<double>(0.0, 1.0), clamp_probability(u));
}

// Draw from the Cholesky factor L of a covariance: mean + L n.
Vector correlated_normal(const DenseMatrix& lower, SeededRng& rng) {
  Vector n(lower.rows());
  for (Index d = 0; d < n.size(); ++d) n(d) = rng.normal();
  return lower.triangularView<Eigen::Lower>() * n;
}

}  // namespace

// --- Marginal1D ---------------------------------------------------------------

void Marginal1D::validate() const {
  require(std::isfinite(scale) && scale > 0.0, "marginal scale must be finite and > 0");
  if (kind == Kind::StudentT) {
    require(std::isfinite(smoothness) && smoothness > 0.0, "Matern smoothness must be > 0");
  }
}

double Marginal1D::sample(SeededRng& rng) const {
  switch (kind) {
    case Kind::Gaussian:
      return rng.normal() / scale;
    case Kind::Cauchy:
      return scale * std::tan(kPi * (rng.uniform01() - 0.5));
    case Kind::StudentT: {
      const double dof = 2.0 * smoothness;
      const double z = rng.normal();
      const double g = rng.chi_squared(dof);
      return z / std::sqrt(g / dof) / scale;
    }
    case Kind::Laplace: {
      double u = rng.uniform01() - 0.5;
      while (u == -0.5) u = rng.uniform01() - 0.5;
      return -scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
    }
  }
  return 0.0;
}

double Marginal1D::cdf(double w) const {
  switch (kind) {
    case Kind::Gaussian:
      return standard_normal_cdf(w * scale);
    case Kind::Cauchy:
      return bm::cdf(bm::cauchy_distribution<double>(0.0, scale), w);
    case Kind::StudentT:
      return bm::cdf(bm::students_t_distribution<double>(2.0 * smoothness), w * scale);
    case Kind::Laplace:
      return bm::cdf(bm::laplace_distribution<double>(0.0, scale), w);
  }
  return 0.0;
}

double Marginal1D::density(double w) const {
  switch (kind) {
    case Kind::Gaussian:
      return scale / std::sqrt(2.0 * kPi) * std::exp(-0.5 * scale * scale * w * w);
    case Kind::Cauchy:
      return scale / (kPi * (scale * scale + w * w));
    case Kind::StudentT:
      return scale * bm::pdf(bm::students_t_distribution<double>(2.0 * smoothness), w * scale);
    case Kind::Laplace:
      return std::exp(-std::abs(w) / scale) / (2.0 * scale);
  }
  return 0.0;
}

double Marginal1D::quantile(double u) const {
  u = clamp_probability(u);
  switch (kind) {
    case Kind::Gaussian:
      return standard_normal_quantile(u) / scale;
    case Kind::Cauchy:
      return bm::quantile(bm::cauchy_distribution<double>(0.0, scale), u);
    case Kind::StudentT:
      return bm::quantile(bm::students_t_distribution<double>(2.0 * smoothness), u) / scale;
    case Kind::Laplace:
      return bm::quantile(bm::laplace_distribution<double>(0.0, scale), u);
  }
  return 0.0;
}

double Marginal1D::quantile_upper(double q) const {
  q = clamp_probability(q);
  switch (kind) {
    case Kind::Gaussian:
      return bm::quantile(bm::complement(bm::normal_distribution<double>(0.0, 1.0), q)) / scale;
    case Kind::Cauchy:
      return bm::quantile(bm::complement(bm::cauchy_distribution<double>(0.0, scale), q));
    case Kind::StudentT:
      return bm::quantile(bm::complement(bm::students_t_distribution<double>(2.0 * smoothness), q)) /
             scale;
    case Kind::Laplace:
      return bm::quantile(bm::complement(bm::laplace_distribution<double>(0.0, scale), q));
  }
  return 0.0;
}

double Marginal1D::kernel(double lag) const {
  switch (kind) {
    case Kind::Gaussian:
      return std::exp(-0.5 * lag * lag / (scale * scale));
    case Kind::Cauchy:
      return std::exp(-scale * std::abs(lag));
    case Kind::StudentT:
      return matern_kernel(smoothness, scale, std::abs(lag));
    case Kind::Laplace:
      return 1.0 / (1.0 + scale * scale * lag * lag);
  }
  return 0.0;
}

// --- spec helpers ---------------------------------------------------------------

std::optional<Index> spec_dims(const SpectralMeasureSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianSE& s) -> std::optional<Index> { return Index(s.lengthscales.size()); },
          [](const LaplacianCauchy& s) -> std::optional<Index> { return Index(s.scales.size()); },
          [](const MaternT&) -> std::optional<Index> { return std::nullopt; },
          [](const MixtureOfGaussians& s) -> std::optional<Index> {
            return s.means.empty() ? std::optional<Index>{} : std::optional<Index>{s.means.front().size()};
          },
          [](const GaussianCopula& s) -> std::optional<Index> { return Index(s.marginals.size()); },
          [](const PerDimProduct& s) -> std::optional<Index> { return Index(s.marginals.size()); },
          [](const Empirical& s) -> std::optional<Index> { return s.frequencies.cols(); },
      },
      spec);
}

std::string spec_family_name(const SpectralMeasureSpec& spec) {
  static constexpr const char* names[] = {"gaussian_se", "laplacian_cauchy", "matern_t", "mixture",
                                          "gaussian_copula", "product", "empirical"};
  return names[spec.index()];
}

void validate_spec(const SpectralMeasureSpec& spec) {
  std::visit(Overloaded{
                 [](const GaussianSE& s) { require_positive(s.lengthscales, "lengthscales"); },
                 [](const LaplacianCauchy& s) { require_positive(s.scales, "scales"); },
                 [](const MaternT& s) {
                   require(std::isfinite(s.smoothness) && s.smoothness > 0.0, "Matern smoothness must be > 0");
                   require(std::isfinite(s.lengthscale) && s.lengthscale > 0.0, "Matern lengthscale must be > 0");
                 },
                 [](const MixtureOfGaussians& s) {
                   require(!s.weights.empty(), "mixture needs at least one component");
                   require(s.means.size() == s.weights.size() && s.covariances.size() == s.weights.size(),
                           "mixture weights, means and covariances must have equal counts");
                   double total = 0.0;
                   for (double w : s.weights) {
                     require(std::isfinite(w) && w >= 0.0, "mixture weights must be >= 0");
                     total += w;
                   }
                   require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
                   const Index d = s.means.front().size();
                   require(d >= 1, "mixture means must be non-empty");
                   for (std::size_t j = 0; j < s.weights.size(); ++j) {
                     require(s.means[j].size() == d, "mixture means must share a dimension");
                     require(s.covariances[j].rows() == d && s.covariances[j].cols() == d,
                             "mixture covariance shape mismatch");
                     try {
                       cholesky(s.covariances[j]);
                     } catch (const Error&) {
                       throw Error(ErrorCode::InvalidSpec, "mixture covariance must be positive definite");
                     }
                   }
                 },
                 [](const GaussianCopula& s) {
                   const auto d = Index(s.marginals.size());
                   require(d >= 1, "copula needs at least one marginal");
                   require(s.correlation.rows() == d && s.correlation.cols() == d,
                           "copula correlation must be D x D");
                   for (Index i = 0; i < d; ++i) {
                     require(std::abs(s.correlation(i, i) - 1.0) <= 1e-12, "copula correlation needs unit diagonal");
                   }
                   Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(s.correlation, Eigen::EigenvaluesOnly);
                   require(eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() >= -1e-12,
                           "copula correlation must be positive semi-definite");
                   for (const auto& m : s.marginals) m.validate();
                 },
                 [](const PerDimProduct& s) {
                   require(!s.marginals.empty(), "product needs at least one marginal");
                   for (const auto& m : s.marginals) m.validate();
                 },
                 [](const Empirical& s) {
                   require(s.frequencies.rows() >= 1 && s.frequencies.cols() >= 1, "empirical bank is empty");
                   require(s.frequencies.allFinite(), "empirical frequencies must be finite");
                 },
             },
             spec);
}

SpectralMeasureSpec student_t_half_dof_preset() { return MaternT{0.25, 1.0}; }

// --- FrequencyBank ------------------------------------------------------------------

FrequencyBank FrequencyBank::stationary(DenseMatrix omega) {
  if (omega.rows() < 1 || omega.cols() < 1) throw Error(ErrorCode::InvalidArgument, "empty frequency bank");
  if (!omega.allFinite()) throw Error(ErrorCode::InvalidArgument, "frequency bank has non-finite entries");
  return FrequencyBank(std::move(omega), DenseMatrix(), true);
}

FrequencyBank FrequencyBank::nonstationary(DenseMatrix omega1, DenseMatrix omega2) {
  if (omega1.rows() < 1 || omega1.cols() < 1) throw Error(ErrorCode::InvalidArgument, "empty frequency bank");
  if (omega1.rows() != omega2.rows() || omega1.cols() != omega2.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "omega1 and omega2 must have equal shapes");
  }
  if (!omega1.allFinite() || !omega2.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "frequency bank has non-finite entries");
  }
  return FrequencyBank(std::move(omega1), std::move(omega2), false);
}

bool FrequencyBank::operator==(const FrequencyBank& other) const {
  return stationary_ == other.stationary_ && omega1_ == other.omega1_ && omega2() == other.omega2();
}

// --- sampling -------------------------------------------------------------------------

DenseMatrix sample_frequencies(const SpectralMeasureSpec& spec, Index m, Index dims, SeededRng& rng) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "need at least one frequency");
  if (dims < 1) throw Error(ErrorCode::InvalidArgument, "need at least one input dimension");
  validate_spec(spec);
  if (const auto d = spec_dims(spec); d && *d != dims) {
    throw Error(ErrorCode::IncompatibleDims, spec_family_name(spec) + " spec has " + std::to_string(*d) +
                                                 " dims, data has " + std::to_string(dims));
  }

  DenseMatrix out(m, dims);
  std::visit(
      Overloaded{
          [&](const GaussianSE& s) {
            for (Index k = 0; k < m; ++k)
              for (Index d = 0; d < dims; ++d) out(k, d) = rng.normal() / s.lengthscales[d];
          },
          [&](const LaplacianCauchy& s) {
            for (Index k = 0; k < m; ++k)
              for (Index d = 0; d < dims; ++d) out(k, d) = Marginal1D::cauchy(s.scales[d]).sample(rng);
          },
          [&](const MaternT& s) {
            const double dof = 2.0 * s.smoothness;
            for (Index k = 0; k < m; ++k) {
              for (Index d = 0; d < dims; ++d) out(k, d) = rng.normal();
              const double g = rng.chi_squared(dof);
              out.row(k) /= std::sqrt(g / dof) * s.lengthscale;
            }
          },
          [&](const MixtureOfGaussians& s) {
            std::vector<DenseMatrix> factors;
            for (const auto& c : s.covariances) factors.push_back(cholesky(c).factor.matrix());
            std::vector<double> cumulative(s.weights.size());
            std::partial_sum(s.weights.begin(), s.weights.end(), cumulative.begin());
            for (Index k = 0; k < m; ++k) {
              const double u = rng.uniform01() * cumulative.back();
              auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
              const auto j = std::min<std::size_t>(std::size_t(it - cumulative.begin()), s.weights.size() - 1);
              out.row(k) = (s.means[j] + correlated_normal(factors[j], rng)).transpose();
            }
          },
          [&](const GaussianCopula& s) {
            const DenseMatrix lower = cholesky(s.correlation).factor.matrix();
            DenseMatrix z(m, dims);
            for (Index k = 0; k < m; ++k) z.row(k) = correlated_normal(lower, rng).transpose();
            out = gaussian_copula_transform(z, s.marginals);
          },
          [&](const PerDimProduct& s) {
            for (Index k = 0; k < m; ++k)
              for (Index d = 0; d < dims; ++d) out(k, d) = s.marginals[d].sample(rng);
          },
          [&](const Empirical& s) {
            if (s.frequencies.rows() == m) {
              out = s.frequencies;
              return;
            }
            for (Index k = 0; k < m; ++k) {
              out.row(k) = s.frequencies.row(Index(rng.uniform_index(std::size_t(s.frequencies.rows()))));
            }
          },
      },
      spec);
  return out;
}

FrequencyBank sample_stationary(const SpectralMeasureSpec& spec, Index m, Index dims, SeededRng& rng) {
  return FrequencyBank::stationary(sample_frequencies(spec, m, dims, rng));
}

FrequencyBank sample_nonstationary(const SpectralMeasureSpec& spec1, const SpectralMeasureSpec& spec2,
                                   Index m, Index dims, SeededRng& rng) {
  DenseMatrix o1 = sample_frequencies(spec1, m, dims, rng);
  DenseMatrix o2 = sample_frequencies(spec2, m, dims, rng);
  return FrequencyBank::nonstationary(std::move(o1), std::move(o2));
}

FrequencyBank sample_nonstationary(const SpectralMeasureSpec& spec1, const SpectralMeasureSpec& spec2,
                                   Index m, Index dims, SeededRng& rng1, SeededRng& rng2) {
  DenseMatrix o1 = sample_frequencies(spec1, m, dims, rng1);
  DenseMatrix o2 = sample_frequencies(spec2, m, dims, rng2);
  return FrequencyBank::nonstationary(std::move(o1), std::move(o2));
}

// --- copula ---------------------------------------------------------------------------

DenseMatrix gaussian_copula_transform(const DenseMatrix& z, std::span<const Marginal1D> marginals) {
  if (Index(marginals.size()) != z.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one marginal per column required");
  }
  for (const auto& m : marginals) {
    if (!(m.scale > 0.0) || !std::isfinite(m.scale)) {
      throw Error(ErrorCode::NonMonotoneMarginal, "marginal with non-positive scale is not increasing");
    }
  }
  DenseMatrix out(z.rows(), z.cols());
  for (Index d = 0; d < z.cols(); ++d) {
    const auto& marginal = marginals[std::size_t(d)];
    for (Index k = 0; k < z.rows(); ++k) {
      const double v = z(k, d);
      // Evaluate in the tail that keeps the probability small.
      out(k, d) = v <= 0.0 ? marginal.quantile(standard_normal_cdf(v))
                           : marginal.quantile_upper(standard_normal_cdf(-v));
    }
  }
  return out;
}

DenseMatrix gaussian_copula_transform(const DenseMatrix& z,
                                      std::span<const std::function<double(double)>> quantiles) {
  if (Index(quantiles.size()) != z.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one quantile function per column required");
  }
  constexpr int kProbes = 999;
  for (std::size_t d = 0; d < quantiles.size(); ++d) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= kProbes; ++i) {
      const double q = quantiles[d](double(i) / (kProbes + 1));
      if (!(q > prev)) {
        throw Error(ErrorCode::NonMonotoneMarginal,
                    "quantile function for column " + std::to_string(d) + " is not strictly increasing");
      }
      prev = q;
    }
  }
  DenseMatrix out(z.rows(), z.cols());
  for (Index d = 0; d < z.cols(); ++d) {
    for (Index k = 0; k < z.rows(); ++k) out(k, d) = quantiles[std::size_t(d)](standard_normal_cdf(z(k, d)));
  }
  return out;
}

// --- densities ----------------------------------------------------------------------

double spectral_density_eval(const SpectralMeasureSpec& spec, const Vector& omega) {
  validate_spec(spec);
  if (const auto d = spec_dims(spec); d && *d != omega.size()) {
    throw Error(ErrorCode::IncompatibleDims, "frequency length does not match spec dimension");
  }
  return std::visit(
      Overloaded{
          [&](const GaussianSE& s) {
            double p = 1.0;
            for (Index d = 0; d < omega.size(); ++d) p *= Marginal1D::gaussian(s.lengthscales[d]).density(omega(d));
            return p;
          },
          [&](const LaplacianCauchy& s) {
            double p = 1.0;
            for (Index d = 0; d < omega.size(); ++d) p *= Marginal1D::cauchy(s.scales[d]).density(omega(d));
            return p;
          },
          [&](const MaternT& s) {
            const double dof = 2.0 * s.smoothness;
            const double dims = double(omega.size());
            const double r2 = s.lengthscale * s.lengthscale * omega.squaredNorm();
            const double log_p = std::lgamma(0.5 * (dof + dims)) - std::lgamma(0.5 * dof) -
                                 0.5 * dims * std::log(dof * kPi) + dims * std::log(s.lengthscale) -
                                 0.5 * (dof + dims) * std::log1p(r2 / dof);
            return std::exp(log_p);
          },
          [&](const MixtureOfGaussians& s) {
            const double dims = double(omega.size());
            double p = 0.0;
            for (std::size_t j = 0; j < s.weights.size(); ++j) {
              const auto chol = cholesky(s.covariances[j]);
              const Vector white = solve_lower(chol.factor, Vector(omega - s.means[j]));
              p += s.weights[j] * std::exp(-0.5 * white.squaredNorm() - 0.5 * dims * std::log(2.0 * kPi) -
                                           0.5 * chol.factor.log_det_product());
            }
            return p;
          },
          [&](const GaussianCopula& s) {
            const Index dims = omega.size();
            Vector z(dims);
            double marginal_product = 1.0;
            for (Index d = 0; d < dims; ++d) {
              const auto& m = s.marginals[std::size_t(d)];
              z(d) = standard_normal_quantile(m.cdf(omega(d)));
              marginal_product *= m.density(omega(d));
            }
            const auto chol = cholesky(s.correlation);
            const Vector white = solve_lower(chol.factor, z);
            const double log_c = -0.5 * chol.factor.log_det_product() - 0.5 * (white.squaredNorm() - z.squaredNorm());
            return std::exp(log_c) * marginal_product;
          },
          [&](const PerDimProduct& s) {
            double p = 1.0;
            for (Index d = 0; d < omega.size(); ++d) p *= s.marginals[std::size_t(d)].density(omega(d));
            return p;
          },
          [&](const Empirical&) -> double {
            throw Error(ErrorCode::UnsupportedSpec, "empirical measures have no density");
          },
      },
      spec);
}

}  // namespace srff
