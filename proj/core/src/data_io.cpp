#include "srff/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace srff {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                         : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    table.rows.push_back(split_line(line));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, path.string() + " has no header row");
  return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name, const std::filesystem::path& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in " + path.string());
  return std::size_t(it - table.header.begin());
}

double cell_value(const CsvTable& table, std::size_t row, std::size_t col, const std::string& name) {
  const auto& cells = table.rows[row];
  double v = 0.0;
  if (col >= cells.size() || !parse_double(cells[col], v)) {
    const std::string raw = col < cells.size() ? cells[col] : std::string("<missing>");
    throw Error(ErrorCode::NonNumericCell, fmt::format("row {} (line {}), column '{}': '{}'", row,
                                                       table.line_numbers[row], name, raw));
  }
  return v;
}

DenseMatrix read_columns(const CsvTable& table, const std::vector<std::string>& columns,
                         const std::filesystem::path& path) {
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(column_index(table, c, path));
  DenseMatrix out(Index(table.rows.size()), Index(columns.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t j = 0; j < idx.size(); ++j) out(Index(r), Index(j)) = cell_value(table, r, idx[j], columns[j]);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

StandardizationStats StandardizationStats::identity(Index dims) {
  return {Vector::Zero(dims), Vector::Ones(dims), 0.0, 1.0};
}

DenseMatrix StandardizationStats::apply_inputs(const DenseMatrix& x) const {
  if (x.cols() != input_mean.size()) {
    throw Error(ErrorCode::SchemaMismatch, "inputs have " + std::to_string(x.cols()) + " columns, expected " +
                                               std::to_string(input_mean.size()));
  }
  return (x.rowwise() - input_mean.transpose()).array().rowwise() / input_std.transpose().array();
}

Vector StandardizationStats::apply_outputs(const Vector& y) const {
  return (y.array() - output_mean) / output_std;
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
                 const std::string& output_column) {
  if (input_columns.empty()) throw Error(ErrorCode::InvalidArgument, "at least one input column is required");
  const CsvTable table = read_table(path);
  if (table.rows.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no data rows");
  Dataset ds;
  ds.x = read_columns(table, input_columns, path);
  ds.y = read_columns(table, {output_column}, path).col(0);
  ds.input_columns = input_columns;
  ds.output_column = output_column;
  if (ds.n() < 2) throw Error(ErrorCode::InvalidArgument, "a dataset needs at least two rows");
  return ds;
}

DenseMatrix load_input_matrix(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  return read_columns(read_table(path), columns, path);
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) { return read_table(path).header; }

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  auto out = open_out(path);
  for (const auto& c : ds.input_columns) out << c << ',';
  out << ds.output_column << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dims(); ++j) out << fmt::format("{:.17g},", ds.x(i, j));
    out << fmt::format("{:.17g}\n", ds.y(i));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::pair<Dataset, StandardizationStats> standardize(const Dataset& ds) {
  if (ds.n() < 2) throw Error(ErrorCode::InvalidArgument, "standardize needs at least two rows");
  StandardizationStats stats;
  stats.input_mean = ds.x.colwise().mean().transpose();
  stats.input_std = ((ds.x.rowwise() - stats.input_mean.transpose()).array().square().colwise().mean().sqrt())
                        .transpose();
  for (Index j = 0; j < ds.dims(); ++j) {
    if (!(stats.input_std(j) > 0.0)) {
      throw Error(ErrorCode::ConstantColumn, "input column '" +
                                                 (j < Index(ds.input_columns.size()) ? ds.input_columns[j] : std::to_string(j)) +
                                                 "' is constant");
    }
  }
  stats.output_mean = ds.y.mean();
  stats.output_std = std::sqrt((ds.y.array() - stats.output_mean).square().mean());
  if (!(stats.output_std > 0.0)) throw Error(ErrorCode::ConstantColumn, "output column is constant");
  return {apply_standardization(ds, stats), stats};
}

Dataset apply_standardization(const Dataset& ds, const StandardizationStats& stats) {
  Dataset out = ds;
  out.x = stats.apply_inputs(ds.x);
  out.y = stats.apply_outputs(ds.y);
  out.standardized = true;
  return out;
}

Prediction destandardize_predictions(const Prediction& p, const StandardizationStats& stats) {
  return {(p.mean.array() * stats.output_std + stats.output_mean).matrix(),
          (p.variance.array() * stats.output_std * stats.output_std).matrix()};
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0, 1)");
  }
  const auto n_train = Index(std::llround(train_fraction * double(n)));
  if (n_train < 1 || n_train >= n) {
    throw Error(ErrorCode::DegenerateSplit, fmt::format("fraction {} of {} rows leaves an empty side", train_fraction, n));
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index(0));
  SeededRng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  std::vector<Index> train(perm.begin(), perm.begin() + n_train);
  std::vector<Index> test(perm.begin() + n_train, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.x = ds.x(rows, Eigen::all);
  out.y = ds.y(rows);
  out.input_columns = ds.input_columns;
  out.output_column = ds.output_column;
  out.standardized = ds.standardized;
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(ds.n(), train_fraction, seed);
  return {take_rows(ds, train), take_rows(ds, test)};
}

void validate_grid(const GridSpec& spec) {
  if (spec.axes.empty()) throw Error(ErrorCode::InvalidArgument, "grid needs at least one axis");
  for (const auto& a : spec.axes) {
    if (!(std::isfinite(a.min) && std::isfinite(a.max) && a.max > a.min)) {
      throw Error(ErrorCode::InvalidArgument, "grid axis needs finite max > min");
    }
    if (a.count < 2) throw Error(ErrorCode::InvalidArgument, "grid axis needs count >= 2");
  }
}

DenseMatrix make_grid(const GridSpec& spec) {
  validate_grid(spec);
  Index total = 1;
  for (const auto& a : spec.axes) total *= a.count;
  const auto dims = Index(spec.axes.size());
  DenseMatrix out(total, dims);
  for (Index row = 0; row < total; ++row) {
    Index rest = row;
    for (Index d = dims - 1; d >= 0; --d) {
      const auto& a = spec.axes[std::size_t(d)];
      const Index i = rest % a.count;
      rest /= a.count;
      out(row, d) = i == a.count - 1 ? a.max : a.min + (a.max - a.min) * double(i) / double(a.count - 1);
    }
  }
  return out;
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
                           const DenseMatrix& x, const Prediction& p) {
  auto out = open_out(path);
  for (const auto& c : input_columns) out << c << ',';
  out << "mean,variance\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) out << fmt::format("{:.17g},", x(i, j));
    out << fmt::format("{:.17g},{:.17g}\n", p.mean(i), p.variance(i));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j == 0 ? "" : ",") << fmt::format("{:.17g}", m(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void write_pgm(const std::filesystem::path& path, const DenseMatrix& image) {
  if (image.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty image");
  auto out = open_out(path);
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  const double span = hi - lo;
  std::string pixels;
  pixels.reserve(std::size_t(image.size()));
  for (Index i = 0; i < image.rows(); ++i) {
    for (Index j = 0; j < image.cols(); ++j) {
      const double t = span > 0.0 ? (image(i, j) - lo) / span : 0.0;
      pixels.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  }
  out.write(pixels.data(), std::streamsize(pixels.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace srff
