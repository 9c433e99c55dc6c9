#include "srff_cli/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "output_set.hpp"
#include "srff/data_io.hpp"
#include "srff/gp_model.hpp"
#include "srff/serialization.hpp"
#include "srff/synthetic.hpp"
#include "srff/trainer.hpp"

namespace srff::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw UsageError("invalid number '" + text + "' in " + what);
  return v;
}

Index parse_count(const std::string& text, const std::string& what) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw UsageError("invalid count '" + text + "' in " + what);
  return Index(v);
}

// "min:max:count" per axis, axes separated by commas.
GridSpec parse_grid(const std::string& text) {
  GridSpec spec;
  for (const auto& axis : split_on(text, ',')) {
    const auto parts = split_on(axis, ':');
    if (parts.size() != 3) throw UsageError("grid axis '" + axis + "' is not min:max:count");
    spec.axes.push_back({parse_double(parts[0], "--grid"), parse_double(parts[1], "--grid"),
                         parse_count(parts[2], "--grid")});
  }
  try {
    validate_grid(spec);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

Vector parse_point(const std::string& text, Index dims) {
  const auto parts = split_on(text, ',');
  if (Index(parts.size()) != dims) {
    throw UsageError(fmt::format("anchor '{}' has {} coordinates, model has {} inputs", text, parts.size(), dims));
  }
  Vector v(dims);
  for (Index d = 0; d < dims; ++d) v(d) = parse_double(parts[std::size_t(d)], "--anchors");
  return v;
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::FactorizationFailed:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::ConstantVector:
      return true;
    default:
      return false;
  }
}

/// Defaults: output is the last header column, inputs are all the others.
std::pair<std::vector<std::string>, std::string> resolve_columns(const fs::path& data, const std::string& inputs,
                                                                 const std::string& output) {
  const auto header = read_csv_header(data);
  std::string out_col = output.empty() ? header.back() : output;
  std::vector<std::string> in_cols;
  if (inputs.empty()) {
    for (const auto& h : header)
      if (h != out_col) in_cols.push_back(h);
  } else {
    in_cols = split_on(inputs, ',');
  }
  if (in_cols.empty()) throw UsageError("no input columns");
  return {in_cols, out_col};
}

struct TrainFlags {
  std::string mode = "nonstationary";
  Index m = 300;
  std::string spec_path;
  double sigma_p = 0.05;
  double lr = 1e-3;
  int max_steps = 2000;
  int patience = 10;
  int eval_every = 10;
  double val_frac = 0.1;
  double split = 0.7;
  std::uint64_t seed = 0;
  bool no_timing = false;

  void add_to(CLI::App* cmd, bool with_mode) {
    if (with_mode) {
      cmd->add_option("--mode", mode, "stationary-fixed, stationary-learned or nonstationary-learned")
          ->capture_default_str();
    }
    cmd->add_option("--sigma-p", sigma_p, "Gaussian dropout standard deviation")->capture_default_str();
    cmd->add_option("--lr", lr, "ADAM learning rate")->capture_default_str();
    cmd->add_option("--max-steps", max_steps, "maximum optimizer steps")->capture_default_str();
    cmd->add_option("--patience", patience, "non-improving validation checks before stopping")->capture_default_str();
    cmd->add_option("--eval-every", eval_every, "steps between validation checks")->capture_default_str();
    cmd->add_option("--val-frac", val_frac, "fraction of training rows held out for early stopping")
        ->capture_default_str();
    cmd->add_option("--split", split, "training fraction of the train/test split")->capture_default_str();
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd->add_flag("--no-timing", no_timing, "write zero wall-clock columns so outputs are byte-reproducible");
  }

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.max_steps = max_steps;
    cfg.patience = patience;
    cfg.eval_every = eval_every;
    cfg.validation_fraction = val_frac;
    cfg.dropout_sigma_p = sigma_p;
    cfg.seed = seed;
    cfg.record_timing = !no_timing;
    try {
      cfg.mode = parse_train_mode(mode);
      cfg.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (!(split > 0.0 && split < 1.0)) throw UsageError("--split must be in (0, 1)");
    if (m < 1) throw UsageError("--m must be >= 1");
    return cfg;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
};

int cmd_fit(Context& ctx, const TrainFlags& flags, const std::string& data, const std::string& inputs,
            const std::string& output, const std::string& model_path, const std::string& out_dir) {
  const TrainConfig cfg = flags.config();
  const auto [in_cols, out_col] = resolve_columns(data, inputs, output);
  std::optional<SpectralMeasureSpec> spec;
  if (!flags.spec_path.empty()) spec = spec_from_json(read_text_file(flags.spec_path));

  const Dataset ds = load_csv(data, in_cols, out_col);
  auto [train_raw, test] = split(ds, flags.split, derive_seed(flags.seed, 10));
  auto [train_std, stats] = standardize(train_raw);
  SeededRng bank_rng(derive_seed(flags.seed, 11));
  const FrequencyBank bank = initial_bank(train_std.x, cfg.mode, flags.m, spec, bank_rng);

  ctx.err << fmt::format("fitting {} with m={} on {} rows ({} held out for testing)\n", to_string(cfg.mode), flags.m,
                         train_std.n(), test.n());
  const TrainResult result = train(train_std, bank, cfg, stats);
  ctx.err << fmt::format("stopped after {} steps ({}), best step {}\n", result.trace.train_neg_lml.size(),
                         result.trace.stop_reason == StopReason::Patience ? "patience" : "max steps",
                         result.trace.best_step);

  const Prediction p = destandardize_predictions(predict(result.state, stats.apply_inputs(test.x)), stats);
  const Metrics mt = metrics(test.y, p.mean);

  const fs::path model_file = model_path.empty() ? fs::path(out_dir) / "model.json" : fs::path(model_path);
  OutputSet outputs;
  write_text_file(outputs.stage(model_file), model_to_json({result.state, cfg.mode, in_cols, out_col}));
  write_trace_csv(outputs.stage(fs::path(out_dir) / "trace.csv"), result.trace);
  outputs.commit();
  ctx.out << fmt::format("mse={:.17g} corr={:.17g}\n", mt.mse, mt.pearson);
  return 0;
}

ModelFile load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

int cmd_predict(Context& ctx, const std::string& model_path, const std::string& data, const std::string& out_path) {
  const ModelFile model = load_model(model_path);
  const auto header = read_csv_header(data);
  for (const auto& col : model.input_columns) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw Error(ErrorCode::SchemaMismatch, "input file lacks model column '" + col + "'");
    }
  }
  const DenseMatrix x = load_input_matrix(data, model.input_columns);
  Prediction p;
  if (x.rows() > 0) {
    const auto& stats = model.state.standardization;
    p = destandardize_predictions(predict(model.state, stats.apply_inputs(x)), stats);
  }
  OutputSet outputs;
  write_predictions_csv(outputs.stage(out_path), model.input_columns, x, p);
  outputs.commit();
  ctx.err << fmt::format("wrote {} predictions to {}\n", x.rows(), out_path);
  return 0;
}

DenseMatrix as_image(const Vector& values, Index rows, Index cols) {
  DenseMatrix img(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) img(i, j) = values(i * cols + j);
  return img;
}

int cmd_grid(Context& ctx, const std::string& model_path, const std::string& grid_text, const std::string& out_dir) {
  const GridSpec grid = parse_grid(grid_text);
  const ModelFile model = load_model(model_path);
  const Index dims = model.state.bank.dims();
  if (Index(grid.axes.size()) != dims) {
    throw Error(ErrorCode::SchemaMismatch,
                fmt::format("grid has {} axes, model has {} inputs", grid.axes.size(), dims));
  }
  const DenseMatrix x = make_grid(grid);
  const auto& stats = model.state.standardization;
  const Prediction p = destandardize_predictions(predict(model.state, stats.apply_inputs(x)), stats);

  OutputSet outputs;
  const fs::path dir(out_dir);
  write_predictions_csv(outputs.stage(dir / "grid.csv"), model.input_columns, x, p);
  if (dims == 2) {
    const Index rows = grid.axes[0].count;
    const Index cols = grid.axes[1].count;
    write_pgm(outputs.stage(dir / "mean.pgm"), as_image(p.mean, rows, cols));
    write_pgm(outputs.stage(dir / "variance.pgm"), as_image(p.variance, rows, cols));
  }
  outputs.commit();
  ctx.err << fmt::format("wrote {} grid rows to {}\n", x.rows(), (dir / "grid.csv").string());
  return 0;
}

int cmd_kernel_dump(Context& ctx, const std::string& model_path, const std::vector<std::string>& anchors,
                    double radius, Index count, const std::string& out_dir) {
  if (!(radius > 0.0)) throw UsageError("--radius must be > 0");
  if (count < 2) throw UsageError("--count must be >= 2");
  if (anchors.empty()) throw UsageError("at least one anchor is required");
  const ModelFile model = load_model(model_path);
  const Index dims = model.state.bank.dims();
  std::vector<Vector> points;
  for (const auto& a : anchors) points.push_back(parse_point(a, dims));

  GridSpec window;
  for (Index d = 0; d < dims; ++d) window.axes.push_back({-radius, radius, count});
  const DenseMatrix offsets = make_grid(window);
  const auto& stats = model.state.standardization;
  const double out_var = stats.output_std * stats.output_std;

  std::vector<std::string> columns;
  for (const auto& c : model.input_columns) columns.push_back("d_" + c);
  for (const auto& c : model.input_columns) columns.push_back(c);

  OutputSet outputs;
  const fs::path dir(out_dir);
  for (std::size_t i = 0; i < points.size(); ++i) {
    DenseMatrix absolute = offsets.rowwise() + points[i].transpose();
    const Vector field = out_var * anchor_field(model.state, stats.apply_inputs(points[i].transpose()).row(0).transpose(),
                                                stats.apply_inputs(absolute));
    DenseMatrix table(offsets.rows(), 2 * dims + 1);
    table << offsets, absolute, field;
    const fs::path csv = dir / fmt::format("kernel_{}.csv", i);
    {
      std::ofstream f(outputs.stage(csv), std::ios::binary);
      for (std::size_t c = 0; c < columns.size(); ++c) f << columns[c] << ',';
      f << "k\n";
      for (Index r = 0; r < table.rows(); ++r) {
        for (Index c = 0; c < table.cols(); ++c) f << (c == 0 ? "" : ",") << fmt::format("{:.17g}", table(r, c));
        f << '\n';
      }
      if (!f) throw Error(ErrorCode::Io, "failed writing " + csv.string());
    }
    const Index rows = dims == 1 ? 1 : count;
    const Index cols = dims == 1 ? count : offsets.rows() / count;
    write_pgm(outputs.stage(dir / fmt::format("kernel_{}.pgm", i)), as_image(field, rows, cols));
  }
  outputs.commit();
  ctx.err << fmt::format("wrote {} kernel fields to {}\n", points.size(), dir.string());
  return 0;
}

int cmd_sample(Context& ctx, const std::string& spec_path, Index m, Index dims, std::uint64_t seed, bool nonstationary,
               const std::string& out_path) {
  if (m < 1 || dims < 1) throw UsageError("--m and --dims must be >= 1");
  const SpectralMeasureSpec spec = spec_from_json(read_text_file(spec_path));
  SeededRng rng(seed);
  const FrequencyBank bank =
      nonstationary ? sample_nonstationary(spec, spec, m, dims, rng) : sample_stationary(spec, m, dims, rng);
  OutputSet outputs;
  write_text_file(outputs.stage(out_path), bank_to_json(bank));
  outputs.commit();
  ctx.err << fmt::format("wrote {} {} frequencies to {}\n", m, spec_family_name(spec), out_path);
  return 0;
}

int cmd_benchmark(Context& ctx, const TrainFlags& flags, const std::string& name, int runs, Index n,
                  const std::string& data, const std::string& inputs, const std::string& output,
                  const std::string& out_dir) {
  TrainConfig cfg = flags.config();
  if (runs < 1) throw UsageError("--runs must be >= 1");
  BenchmarkKind kind;
  try {
    kind = parse_benchmark(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  std::function<Dataset(std::uint64_t)> make_data;
  if (kind == BenchmarkKind::StockCsv) {
    if (data.empty()) throw UsageError("stock-csv needs --data");
    const auto [in_cols, out_col] = resolve_columns(data, inputs, output);
    auto ds = std::make_shared<Dataset>(load_csv(data, in_cols, out_col));
    make_data = [ds](std::uint64_t) { return *ds; };
  } else {
    SyntheticSpec base;
    base.name = name;
    base.n = n;
    base.validate();
    const bool chirp = kind == BenchmarkKind::Chirp;
    make_data = [base, chirp](std::uint64_t seed) {
      SyntheticSpec s = base;
      s.seed = seed;
      return chirp ? gen_chirp(s) : gen_step_lengthscale(s);
    };
  }

  CompareConfig cc;
  cc.runs = runs;
  cc.seed = flags.seed;
  cc.train_fraction = flags.split;
  cc.threads = configured_threads();
  cc.baseline.mode = TrainMode::StationaryFixed;
  cc.baseline.m = 2 * flags.m;
  cc.baseline.config = cfg;
  cc.candidate.mode = TrainMode::NonstationaryLearned;
  cc.candidate.m = flags.m;
  cc.candidate.config = cfg;

  ctx.err << fmt::format("benchmark {}: {} runs on {} threads\n", name, runs, cc.threads);
  const CompareReport report = compare(make_data, cc);
  OutputSet outputs;
  write_report_csv(outputs.stage(fs::path(out_dir) / "report.csv"), report);
  outputs.commit();
  for (TrainMode mode : {TrainMode::StationaryFixed, TrainMode::NonstationaryLearned}) {
    const Metrics mean = report.mean(mode);
    ctx.out << fmt::format("mode={} mse={:.17g} corr={:.17g}\n", to_string(mode), mean.mse, mean.pearson);
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Gaussian process regression with trainable random Fourier features", "srff"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 on success, 1 on invalid input, 2 on numerical failure.");

  std::string data, inputs, output, model, out_dir = ".", out_path, grid, spec_path;
  TrainFlags flags;

  auto* fit = app.add_subcommand("fit", "train a model; prints mse=<v> corr=<v> on the test split");
  fit->add_option("--data", data, "training CSV")->required();
  fit->add_option("--inputs", inputs, "comma-separated input columns (default: all but the output)");
  fit->add_option("--output-col", output, "output column (default: last column)");
  fit->add_option("--m", flags.m, "frequencies (pairs in nonstationary mode)")->capture_default_str();
  fit->add_option("--spec", flags.spec_path, "JSON spectral measure for the initial bank");
  fit->add_option("--model", model, "model path (default: <out-dir>/model.json)");
  fit->add_option("--out-dir", out_dir, "directory for model.json and trace.csv")->capture_default_str();
  flags.add_to(fit, true);

  auto* pred = app.add_subcommand("predict", "predict mean and variance at the rows of a CSV");
  pred->add_option("--model", model, "model JSON")->required();
  pred->add_option("--data", data, "input CSV with the model's input columns")->required();
  pred->add_option("--out", out_path, "prediction CSV (default: <out-dir>/predictions.csv)");
  pred->add_option("--out-dir", out_dir)->capture_default_str();

  auto* grd = app.add_subcommand("grid", "predict on a regular grid; 2-d grids also write PGM heatmaps");
  grd->add_option("--model", model, "model JSON")->required();
  grd->add_option("--grid", grid, "min:max:count per axis, comma-separated")->required();
  grd->add_option("--out-dir", out_dir)->capture_default_str();

  std::vector<std::string> anchors;
  double radius = 0.5;
  Index count = 41;
  auto* kd = app.add_subcommand("kernel-dump", "export the fitted covariance around anchor points");
  kd->add_option("--model", model, "model JSON")->required();
  kd->add_option("--anchors", anchors, "anchor points, each as comma-separated coordinates")->required();
  kd->add_option("--radius", radius, "half-width of the window around each anchor")->capture_default_str();
  kd->add_option("--count", count, "window points per axis")->capture_default_str();
  kd->add_option("--out-dir", out_dir)->capture_default_str();

  Index dims = 1;
  bool pairs = false;
  auto* smp = app.add_subcommand("sample", "draw a frequency bank from a spectral measure");
  smp->add_option("--spec", spec_path, "JSON spectral measure")->required();
  smp->add_option("--m", flags.m, "frequencies")->capture_default_str();
  smp->add_option("--dims", dims, "input dimensions")->capture_default_str();
  smp->add_option("--seed", flags.seed)->capture_default_str();
  smp->add_flag("--nonstationary", pairs, "draw omega1 and omega2");
  smp->add_option("--out", out_path, "bank JSON (default: <out-dir>/bank.json)");
  smp->add_option("--out-dir", out_dir)->capture_default_str();

  std::string bench_name;
  int runs = 20;
  Index n = 600;
  TrainFlags bench_flags;
  bench_flags.lr = 0.3;
  bench_flags.max_steps = 300;
  auto* bench = app.add_subcommand("benchmark", "stationary-fixed (2m) against nonstationary-learned (m pairs)");
  bench->add_option("name", bench_name, "chirp, step-lengthscale or stock-csv")->required();
  bench->add_option("--runs", runs, "independent runs")->capture_default_str();
  bench->add_option("--m", bench_flags.m, "nonstationary frequency pairs")->capture_default_str();
  bench->add_option("--n", n, "synthetic sample size")->capture_default_str();
  bench->add_option("--data", data, "CSV for stock-csv");
  bench->add_option("--inputs", inputs);
  bench->add_option("--output-col", output);
  bench->add_option("--out-dir", out_dir)->capture_default_str();
  bench_flags.add_to(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*fit) return cmd_fit(ctx, flags, data, inputs, output, model, out_dir);
    if (*pred) return cmd_predict(ctx, model, data, out_path.empty() ? (fs::path(out_dir) / "predictions.csv").string() : out_path);
    if (*grd) return cmd_grid(ctx, model, grid, out_dir);
    if (*kd) return cmd_kernel_dump(ctx, model, anchors, radius, count, out_dir);
    if (*smp) return cmd_sample(ctx, spec_path, flags.m, dims, flags.seed, pairs,
                                out_path.empty() ? (fs::path(out_dir) / "bank.json").string() : out_path);
    if (*bench) return cmd_benchmark(ctx, bench_flags, bench_name, runs, n, data, inputs, output, out_dir);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace srff::cli
