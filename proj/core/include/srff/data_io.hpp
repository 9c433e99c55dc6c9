#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srff/numeric.hpp"

namespace srff {

struct Dataset {
  DenseMatrix x;  // n x D
  Vector y;       // n
  std::vector<std::string> input_columns;
  std::string output_column;
  bool standardized = false;

  Index n() const noexcept { return x.rows(); }
  Index dims() const noexcept { return x.cols(); }
};

struct StandardizationStats {
  Vector input_mean;
  Vector input_std;
  double output_mean = 0.0;
  double output_std = 1.0;

  /// Identity transform for D inputs.
  static StandardizationStats identity(Index dims);

  DenseMatrix apply_inputs(const DenseMatrix& x) const;
  Vector apply_outputs(const Vector& y) const;
};

struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  Index count = 2;
};

struct GridSpec {
  std::vector<GridAxis> axes;
};

/// Comma-separated, header row required, '.' decimal separator.
Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
                 const std::string& output_column);

/// Reads just the named columns; a header-only file yields a 0-row matrix.
DenseMatrix load_input_matrix(const std::filesystem::path& path, const std::vector<std::string>& columns);

/// Column names of a CSV header.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

/// Writes inputs then output with 17 significant digits.
void write_csv(const std::filesystem::path& path, const Dataset& ds);

/// Per-column zero mean and unit population standard deviation.
std::pair<Dataset, StandardizationStats> standardize(const Dataset& ds);
Dataset apply_standardization(const Dataset& ds, const StandardizationStats& stats);

struct Prediction {
  Vector mean;
  Vector variance;
};

/// mean * sd_y + mu_y and var * sd_y^2.
Prediction destandardize_predictions(const Prediction& p, const StandardizationStats& stats);

/// Uniform random partition; train gets round(n * train_fraction) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);
/// Row indices of the partition used by split().
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double train_fraction,
                                                                std::uint64_t seed);
Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows);

/// Row-major Cartesian product of per-axis linspaces (last axis varies fastest).
DenseMatrix make_grid(const GridSpec& spec);
void validate_grid(const GridSpec& spec);

/// Header: input columns..., mean, variance.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
                           const DenseMatrix& x, const Prediction& p);

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);

/// 8-bit binary PGM, min-max scaled; row 0 of the matrix is the top image row.
void write_pgm(const std::filesystem::path& path, const DenseMatrix& image);

}  // namespace srff
