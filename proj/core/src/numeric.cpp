#include "srff/numeric.hpp"

#include <cmath>
#include <string>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace srff {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FactorizationFailed: return "FactorizationFailed";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IncompatibleDims: return "IncompatibleDims";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NonMonotoneMarginal: return "NonMonotoneMarginal";
    case ErrorCode::UnsupportedSpec: return "UnsupportedSpec";
    case ErrorCode::ModeNormalizerMismatch: return "ModeNormalizerMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::ConstantVector: return "ConstantVector";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

LowerTriangular LowerTriangular::from_matrix(DenseMatrix lower) {
  if (lower.rows() != lower.cols()) {
    throw Error(ErrorCode::NonSquare, "triangular factor must be square");
  }
  for (Index j = 0; j < lower.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (lower(i, j) != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "factor has nonzero entries above the diagonal");
      }
    }
    const double d = lower(j, j);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::InvalidArgument,
                  "factor diagonal must be strictly positive, got " + std::to_string(d) +
                      " at " + std::to_string(j));
    }
  }
  return LowerTriangular(std::move(lower));
}

double LowerTriangular::log_det_product() const {
  double s = 0.0;
  for (Index i = 0; i < l_.rows(); ++i) s += 2.0 * std::log(l_(i, i));
  return s;
}

namespace {

bool positive_finite_diagonal(const DenseMatrix& l) {
  for (Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  }
  return true;
}

}  // namespace

Cholesky cholesky(const DenseMatrix& a, const JitterPolicy& policy) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::NonSquare, "cholesky needs a square matrix");
  const Index n = a.rows();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cholesky of an empty matrix");
  if (!all_finite(a)) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (((a - a.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale) {
    throw Error(ErrorCode::NonSymmetric, "cholesky needs a symmetric matrix");
  }

  const double mean_diag = a.diagonal().mean();
  for (const double level : policy.ladder) {
    const double jitter = level * mean_diag;
    DenseMatrix shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<DenseMatrix, Eigen::Lower> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    DenseMatrix l = llt.matrixL();
    if (!positive_finite_diagonal(l)) continue;
    return Cholesky{LowerTriangular::from_matrix(std::move(l)), jitter};
  }
  throw Error(ErrorCode::FactorizationFailed,
              "matrix of order " + std::to_string(n) + " not positive definite at any jitter level");
}

Vector solve_lower(const LowerTriangular& r, const Vector& b) {
  if (b.size() != r.order()) throw Error(ErrorCode::DimensionMismatch, "solve_lower: length mismatch");
  return r.matrix().triangularView<Eigen::Lower>().solve(b);
}

DenseMatrix solve_lower(const LowerTriangular& r, const DenseMatrix& b) {
  if (b.rows() != r.order()) throw Error(ErrorCode::DimensionMismatch, "solve_lower: row mismatch");
  return r.matrix().triangularView<Eigen::Lower>().solve(b);
}

Vector solve_upper(const LowerTriangular& r, const Vector& b) {
  if (b.size() != r.order()) throw Error(ErrorCode::DimensionMismatch, "solve_upper: length mismatch");
  return r.matrix().transpose().triangularView<Eigen::Upper>().solve(b);
}

DenseMatrix solve_upper(const LowerTriangular& r, const DenseMatrix& b) {
  if (b.rows() != r.order()) throw Error(ErrorCode::DimensionMismatch, "solve_upper: row mismatch");
  return r.matrix().transpose().triangularView<Eigen::Upper>().solve(b);
}

DenseMatrix inverse_from_factor(const LowerTriangular& r) {
  const Index p = r.order();
  DenseMatrix linv = solve_lower(r, DenseMatrix(DenseMatrix::Identity(p, p)));
  DenseMatrix inv(p, p);
  inv.setZero();
  inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  return inv.selfadjointView<Eigen::Lower>();
}

bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

double SeededRng::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double SeededRng::uniform01() {
  boost::random::uniform_01<double> dist;
  return dist(engine_);
}

double SeededRng::gamma(double shape) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double SeededRng::chi_squared(double dof) {
  boost::random::chi_squared_distribution<double> dist(dof);
  return dist(engine_);
}

std::size_t SeededRng::uniform_index(std::size_t n) {
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DenseMatrix standard_normal(SeededRng& rng, Index rows, Index cols) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::InvalidArgument, "standard_normal needs rows, cols >= 1");
  }
  DenseMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  }
  return out;
}

}  // namespace srff

#include <cstdlib>
#include <thread>

namespace srff {

unsigned configured_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECTRAL_RFF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return unsigned(v);
  }
  return hw;
}

}  // namespace srff
