#include "srff/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace srff {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000FFFFFFFFULL) << 32) | ((v & 0xFFFFFFFF00000000ULL) >> 32);
    v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v & 0xFFFF0000FFFF0000ULL) >> 16);
    v = ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v & 0xFF00FF00FF00FF00ULL) >> 8);
  }
  return v;
}

json matrix_to_json(const DenseMatrix& m) {
  std::vector<std::uint8_t> bytes(std::size_t(m.size()) * 8);
  std::size_t at = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(m(i, j)));
      std::memcpy(bytes.data() + at, &bits, 8);
      at += 8;
    }
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", base64_encode(bytes)}};
}

DenseMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  if (rows < 0 || cols < 0) throw Error(ErrorCode::Format, "negative matrix shape");
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != std::size_t(rows * cols) * 8) throw Error(ErrorCode::Format, "matrix payload size mismatch");
  DenseMatrix m(rows, cols);
  std::size_t at = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes.data() + at, 8);
      m(i, k) = std::bit_cast<double>(to_little_endian(bits));
      at += 8;
    }
  }
  return m;
}

json vector_to_json(const Vector& v) { return matrix_to_json(DenseMatrix(v)); }

Vector vector_from_json(const json& j) {
  const DenseMatrix m = matrix_from_json(j);
  if (m.cols() != 1) throw Error(ErrorCode::Format, "expected a column vector");
  return m.col(0);
}

const char* marginal_kind_name(Marginal1D::Kind kind) {
  switch (kind) {
    case Marginal1D::Kind::Gaussian: return "gaussian";
    case Marginal1D::Kind::Cauchy: return "cauchy";
    case Marginal1D::Kind::StudentT: return "student_t";
    case Marginal1D::Kind::Laplace: return "laplace";
  }
  return "unknown";
}

json marginal_to_json(const Marginal1D& m) {
  json j{{"type", marginal_kind_name(m.kind)}, {"scale", m.scale}};
  if (m.kind == Marginal1D::Kind::StudentT) j["smoothness"] = m.smoothness;
  return j;
}

Marginal1D marginal_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  const double scale = j.at("scale").get<double>();
  if (type == "gaussian") return Marginal1D::gaussian(scale);
  if (type == "cauchy") return Marginal1D::cauchy(scale);
  if (type == "student_t") return Marginal1D::student_t(j.at("smoothness").get<double>(), scale);
  if (type == "laplace") return Marginal1D::laplace(scale);
  throw Error(ErrorCode::InvalidSpec, "unknown marginal type '" + type + "'");
}

json dense_to_nested(const DenseMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseMatrix nested_to_dense(const json& j) {
  const auto rows = Index(j.size());
  const Index cols = rows == 0 ? 0 : Index(j.at(0).size());
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (Index(j.at(std::size_t(i)).size()) != cols) throw Error(ErrorCode::InvalidSpec, "ragged matrix");
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(std::size_t(i)).at(std::size_t(k)).get<double>();
  }
  return m;
}

json spec_json(const SpectralMeasureSpec& spec) {
  json j = std::visit(
      Overloaded{
          [](const GaussianSE& s) { return json{{"lengthscales", s.lengthscales}}; },
          [](const LaplacianCauchy& s) { return json{{"scales", s.scales}}; },
          [](const MaternT& s) { return json{{"smoothness", s.smoothness}, {"lengthscale", s.lengthscale}}; },
          [](const MixtureOfGaussians& s) {
            json means = json::array();
            json covs = json::array();
            for (const auto& m : s.means) means.push_back(dense_to_nested(DenseMatrix(m.transpose())).at(0));
            for (const auto& c : s.covariances) covs.push_back(dense_to_nested(c));
            return json{{"weights", s.weights}, {"means", means}, {"covariances", covs}};
          },
          [](const GaussianCopula& s) {
            json margins = json::array();
            for (const auto& m : s.marginals) margins.push_back(marginal_to_json(m));
            return json{{"correlation", dense_to_nested(s.correlation)}, {"marginals", margins}};
          },
          [](const PerDimProduct& s) {
            json margins = json::array();
            for (const auto& m : s.marginals) margins.push_back(marginal_to_json(m));
            return json{{"marginals", margins}};
          },
          [](const Empirical& s) { return json{{"frequencies", matrix_to_json(s.frequencies)}}; },
      },
      spec);
  j["family"] = spec_family_name(spec);
  return j;
}

SpectralMeasureSpec spec_from(const json& j) {
  const auto family = j.at("family").get<std::string>();
  SpectralMeasureSpec spec;
  if (family == "gaussian_se") {
    spec = GaussianSE{j.at("lengthscales").get<std::vector<double>>()};
  } else if (family == "laplacian_cauchy") {
    spec = LaplacianCauchy{j.at("scales").get<std::vector<double>>()};
  } else if (family == "matern_t") {
    spec = MaternT{j.at("smoothness").get<double>(), j.value("lengthscale", 1.0)};
  } else if (family == "mixture") {
    MixtureOfGaussians s;
    s.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& m : j.at("means")) {
      const auto v = m.get<std::vector<double>>();
      s.means.emplace_back(Eigen::Map<const Vector>(v.data(), Index(v.size())));
    }
    for (const auto& c : j.at("covariances")) s.covariances.push_back(nested_to_dense(c));
    spec = std::move(s);
  } else if (family == "gaussian_copula") {
    GaussianCopula s;
    s.correlation = nested_to_dense(j.at("correlation"));
    for (const auto& m : j.at("marginals")) s.marginals.push_back(marginal_from_json(m));
    spec = std::move(s);
  } else if (family == "product") {
    PerDimProduct s;
    for (const auto& m : j.at("marginals")) s.marginals.push_back(marginal_from_json(m));
    spec = std::move(s);
  } else if (family == "empirical") {
    spec = Empirical{matrix_from_json(j.at("frequencies"))};
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown spectral family '" + family + "'");
  }
  validate_spec(spec);
  return spec;
}

json bank_json(const FrequencyBank& bank) {
  json j{{"format", "srff-bank"},
         {"version", kBankFormatVersion},
         {"stationary", bank.is_stationary()},
         {"omega1", matrix_to_json(bank.omega1())}};
  if (!bank.is_stationary()) j["omega2"] = matrix_to_json(bank.omega2());
  return j;
}

FrequencyBank bank_from(const json& j) {
  if (j.at("format").get<std::string>() != "srff-bank") throw Error(ErrorCode::Format, "not a frequency bank");
  if (j.at("version").get<int>() != kBankFormatVersion) throw Error(ErrorCode::Format, "unsupported bank version");
  DenseMatrix o1 = matrix_from_json(j.at("omega1"));
  if (j.at("stationary").get<bool>()) return FrequencyBank::stationary(std::move(o1));
  return FrequencyBank::nonstationary(std::move(o1), matrix_from_json(j.at("omega2")));
}

template <class F>
auto parse_guard(std::string_view text, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, e.what());
  }
}

}  // namespace

std::string spec_to_json(const SpectralMeasureSpec& spec) { return spec_json(spec).dump(2); }

SpectralMeasureSpec spec_from_json(std::string_view text) {
  return parse_guard(text, [](const json& j) { return spec_from(j); });
}

std::string bank_to_json(const FrequencyBank& bank) { return bank_json(bank).dump(2); }

FrequencyBank bank_from_json(std::string_view text) {
  return parse_guard(text, [](const json& j) { return bank_from(j); });
}

std::string model_to_json(const ModelFile& model) {
  const auto& s = model.state.system;
  const auto& st = model.state.standardization;
  json j{
      {"format", "srff-model"},
      {"version", kModelFormatVersion},
      {"mode", to_string(model.mode)},
      {"input_columns", model.input_columns},
      {"output_column", model.output_column},
      {"hyper", {{"log_sigma_f2", s.hyper.log_sigma_f2}, {"log_sigma_n2", s.hyper.log_sigma_n2}}},
      {"standardization",
       {{"input_mean", vector_to_json(st.input_mean)},
        {"input_std", vector_to_json(st.input_std)},
        {"output_mean", st.output_mean},
        {"output_std", st.output_std}}},
      {"bank", bank_json(model.state.bank)},
      {"fit",
       {{"chol", matrix_to_json(s.r.matrix())},
        {"alpha1", vector_to_json(s.alpha1)},
        {"alpha2", vector_to_json(s.alpha2)},
        {"ridge", s.ridge},
        {"jitter", s.jitter}}},
  };
  return j.dump(2);
}

ModelFile model_from_json(std::string_view text) {
  return parse_guard(text, [](const json& j) {
    if (j.at("format").get<std::string>() != "srff-model") throw Error(ErrorCode::Format, "not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw Error(ErrorCode::Format, "unsupported model version");
    const TrainMode mode = parse_train_mode(j.at("mode").get<std::string>());
    FrequencyBank bank = bank_from(j.at("bank"));
    const auto& h = j.at("hyper");
    const Hyperparams hyper{h.at("log_sigma_f2").get<double>(), h.at("log_sigma_n2").get<double>()};
    const auto& st = j.at("standardization");
    StandardizationStats stats{vector_from_json(st.at("input_mean")), vector_from_json(st.at("input_std")),
                               st.at("output_mean").get<double>(), st.at("output_std").get<double>()};
    const auto& f = j.at("fit");
    auto r = LowerTriangular::from_matrix(matrix_from_json(f.at("chol")));
    const FeatureMode fmode = feature_mode(mode);
    if (r.order() != 2 * bank.m() || stats.input_mean.size() != bank.dims()) {
      throw Error(ErrorCode::Format, "model file pieces disagree in shape");
    }
    ReducedSystem system{std::move(r), vector_from_json(f.at("alpha1")), vector_from_json(f.at("alpha2")), hyper,
                         fmode, bank.m(), f.at("ridge").get<double>(), f.at("jitter").get<double>()};
    ModelFile model{FitState{std::move(system), std::move(bank), std::move(stats)}, mode,
                    j.at("input_columns").get<std::vector<std::string>>(), j.at("output_column").get<std::string>()};
    return model;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace srff
