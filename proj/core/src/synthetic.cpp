#include "srff/synthetic.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

namespace srff {

void SyntheticSpec::validate() const {
  if (n < 50) throw Error(ErrorCode::InvalidArgument, "synthetic datasets need n >= 50");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (!(lengthscale_left > 0.0) || !(lengthscale_right > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lengthscales must be > 0");
  }
}

Dataset gen_chirp(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  Dataset ds;
  ds.x.resize(spec.n, 1);
  ds.y.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    const double t = double(i) / double(spec.n - 1);
    ds.x(i, 0) = t;
    ds.y(i) = std::sin(2.0 * std::numbers::pi * (spec.chirp_a * t + spec.chirp_b * t * t)) +
              spec.noise_sigma * rng.normal();
  }
  ds.input_columns = {"t"};
  ds.output_column = "y";
  return ds;
}

Dataset gen_step_lengthscale(const SyntheticSpec& spec) {
  spec.validate();
  constexpr Index kMaxN = 1500;
  if (spec.n > kMaxN) throw Error(ErrorCode::InvalidArgument, "step-lengthscale field is limited to n <= 1500");
  SeededRng rng(spec.seed);
  const Index n = spec.n;
  DenseMatrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform01();
    x(i, 1) = rng.uniform01();
  }
  auto lengthscale = [&](Index i) { return x(i, 0) < spec.changepoint ? spec.lengthscale_left : spec.lengthscale_right; };
  // Gibbs kernel in 2-d: (2 l_i l_j / (l_i^2 + l_j^2)) exp(-|xi - xj|^2 / (l_i^2 + l_j^2)).
  DenseMatrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double li = lengthscale(i);
      const double lj = lengthscale(j);
      const double s = li * li + lj * lj;
      const double v = (2.0 * li * lj / s) * std::exp(-(x.row(i) - x.row(j)).squaredNorm() / s);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  const auto chol = cholesky(k);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = rng.normal();
  Dataset ds;
  ds.x = std::move(x);
  ds.y = chol.factor.matrix().triangularView<Eigen::Lower>() * z;
  for (Index i = 0; i < n; ++i) ds.y(i) += spec.noise_sigma * rng.normal();
  ds.input_columns = {"x1", "x2"};
  ds.output_column = "y";
  return ds;
}

Metrics metrics(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorCode::DimensionMismatch, "metric vectors differ in length");
  if (y_true.size() < 2) throw Error(ErrorCode::InvalidArgument, "metrics need at least two values");
  Metrics out;
  out.mse = (y_true - y_pred).squaredNorm() / double(y_true.size());
  const Eigen::ArrayXd a = y_true.array() - y_true.mean();
  const Eigen::ArrayXd b = y_pred.array() - y_pred.mean();
  const double saa = a.square().sum();
  const double sbb = b.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorCode::ConstantVector, "correlation of a constant vector");
  out.pearson = (a * b).sum() / std::sqrt(saa * sbb);
  return out;
}

BenchmarkKind parse_benchmark(const std::string& name) {
  if (name == "chirp") return BenchmarkKind::Chirp;
  if (name == "step-lengthscale") return BenchmarkKind::StepLengthscale;
  if (name == "stock-csv") return BenchmarkKind::StockCsv;
  throw Error(ErrorCode::InvalidArgument, "unknown benchmark '" + name + "'");
}

std::string to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::Chirp: return "chirp";
    case BenchmarkKind::StepLengthscale: return "step-lengthscale";
    case BenchmarkKind::StockCsv: return "stock-csv";
  }
  return "unknown";
}

Metrics CompareReport::mean(TrainMode mode) const {
  Metrics out;
  int count = 0;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    out.mse += r.metrics.mse;
    out.pearson += r.metrics.pearson;
    ++count;
  }
  if (count > 0) {
    out.mse /= count;
    out.pearson /= count;
  }
  return out;
}

Index frequency_entries(const CompareArm& arm, Index dims) {
  return (arm.mode == TrainMode::NonstationaryLearned ? 2 : 1) * arm.m * dims;
}

namespace {

RunResult run_arm(const CompareArm& arm, const Dataset& train_std, const StandardizationStats& stats,
                  const Dataset& test, int run, std::uint64_t run_seed) {
  const auto started = std::chrono::steady_clock::now();
  SeededRng bank_rng(derive_seed(run_seed, 2));
  const FrequencyBank bank = initial_bank(train_std.x, arm.mode, arm.m, std::nullopt, bank_rng);
  TrainConfig cfg = arm.config;
  cfg.mode = arm.mode;
  cfg.seed = derive_seed(run_seed, 3);
  const TrainResult result = train(train_std, bank, cfg, stats);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const Prediction p = destandardize_predictions(predict(result.state, stats.apply_inputs(test.x)), stats);
  RunResult out;
  out.run = run;
  out.seed = run_seed;
  out.mode = arm.mode;
  out.metrics = metrics(test.y, p.mean);
  out.train_seconds = cfg.record_timing ? seconds : 0.0;
  return out;
}

}  // namespace

CompareReport compare(const std::function<Dataset(std::uint64_t)>& make_data, const CompareConfig& config) {
  if (config.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  std::vector<std::pair<RunResult, RunResult>> results(std::size_t(config.runs));
  std::vector<std::exception_ptr> errors(std::size_t(config.runs));
  Index dims = 0;
  std::mutex dims_mutex;

  auto one_run = [&](int run) {
    const std::uint64_t run_seed = derive_seed(config.seed, std::uint64_t(run));
    const Dataset data = make_data(derive_seed(run_seed, 0));
    {
      std::lock_guard lock(dims_mutex);
      dims = data.dims();
    }
    auto [train_raw, test] = split(data, config.train_fraction, derive_seed(run_seed, 1));
    auto [train_std, stats] = standardize(train_raw);
    results[std::size_t(run)] = {run_arm(config.baseline, train_std, stats, test, run, run_seed),
                                 run_arm(config.candidate, train_std, stats, test, run, run_seed)};
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, unsigned(config.runs)));
  if (workers == 1) {
    for (int r = 0; r < config.runs; ++r) one_run(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next++; r < config.runs; r = next++) {
          try {
            one_run(r);
          } catch (...) {
            errors[std::size_t(r)] = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CompareReport report;
  for (auto& [a, b] : results) {
    report.rows.push_back(a);
    report.rows.push_back(b);
  }
  const Index base_entries = frequency_entries(config.baseline, dims);
  const Index cand_entries = frequency_entries(config.candidate, dims);
  report.fairness = fmt::format("{} m={} entries={}; {} m={} entries={}; ratio={:.4g}", to_string(config.baseline.mode),
                                config.baseline.m, base_entries, to_string(config.candidate.mode),
                                config.candidate.m, cand_entries, double(cand_entries) / double(base_entries));
  return report;
}

void write_report_csv(const std::filesystem::path& path, const CompareReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "# frequency budget: " << report.fairness << '\n';
  out << "run,seed,mode,mse,corr,train_seconds\n";
  for (const auto& r : report.rows) {
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.3f}\n", r.run, r.seed, to_string(r.mode), r.metrics.mse,
                       r.metrics.pearson, r.train_seconds);
  }
  if (!report.rows.empty()) {
    for (TrainMode mode : {report.rows[0].mode, report.rows.size() > 1 ? report.rows[1].mode : report.rows[0].mode}) {
      double seconds = 0.0;
      int count = 0;
      for (const auto& r : report.rows) {
        if (r.mode != mode) continue;
        seconds += r.train_seconds;
        ++count;
      }
      const Metrics m = report.mean(mode);
      out << fmt::format("mean,,{},{:.17g},{:.17g},{:.3f}\n", to_string(mode), m.mse, m.pearson, seconds / count);
      if (report.rows.size() < 2 || report.rows[1].mode == report.rows[0].mode) break;
    }
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace srff
