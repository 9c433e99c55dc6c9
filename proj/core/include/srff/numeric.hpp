#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "srff/error.hpp"

namespace srff {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Diagonal jitter levels tried in order, as multiples of mean(diag A).
struct JitterPolicy {
  std::vector<double> ladder{0.0, 1e-10, 1e-8, 1e-6};

  static JitterPolicy none() { return JitterPolicy{{0.0}}; }
};

/// Lower-triangular factor with a strictly positive diagonal.
class LowerTriangular {
 public:
  /// Validates shape, zero upper part and positive finite diagonal.
  static LowerTriangular from_matrix(DenseMatrix lower);

  Index order() const noexcept { return l_.rows(); }
  const DenseMatrix& matrix() const noexcept { return l_; }
  double diagonal(Index i) const { return l_(i, i); }

  /// sum_i log(R_ii^2), i.e. log det(R R^T).
  double log_det_product() const;

 private:
  explicit LowerTriangular(DenseMatrix l) : l_(std::move(l)) {}

  DenseMatrix l_;
};

struct Cholesky {
  LowerTriangular factor;
  double jitter = 0.0;  // absolute value added to the diagonal
};

/// Factor A + jI = R R^T with the smallest ladder jitter that succeeds.
Cholesky cholesky(const DenseMatrix& a, const JitterPolicy& policy = {});

/// Forward substitution: R x = b.
Vector solve_lower(const LowerTriangular& r, const Vector& b);
DenseMatrix solve_lower(const LowerTriangular& r, const DenseMatrix& b);

/// Back substitution against the transpose: R^T x = b.
Vector solve_upper(const LowerTriangular& r, const Vector& b);
DenseMatrix solve_upper(const LowerTriangular& r, const DenseMatrix& b);

/// (R R^T)^{-1} formed from the factor.
DenseMatrix inverse_from_factor(const LowerTriangular& r);

bool all_finite(const DenseMatrix& m);

/// Seeded pseudo-random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; distributions come from
/// Boost.Random, whose algorithms are header-defined and platform
/// independent. Not thread-safe: one owner at a time.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double normal();
  double uniform01();
  double gamma(double shape);
  double chi_squared(double dof);
  std::size_t uniform_index(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Seed for an independent sub-stream (splitmix64 of base and index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// rows x cols i.i.d. N(0,1), filled row by row.
DenseMatrix standard_normal(SeededRng& rng, Index rows, Index cols);

}  // namespace srff

namespace srff {

/// Worker count for run-level parallelism: SPECTRAL_RFF_THREADS when set to a
/// positive integer, else the hardware concurrency (at least 1).
unsigned configured_threads();

}  // namespace srff
