#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "srff/data_io.hpp"
#include "srff/trainer.hpp"

namespace srff {

/// Parameters for the synthetic benchmark generators.
struct SyntheticSpec {
  std::string name = "chirp";
  Index n = 600;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  // chirp: y = sin(2 pi (a t + b t^2)) on t in [0, 1]
  double chirp_a = 2.0;
  double chirp_b = 8.0;

  // step-lengthscale: 2-d field whose lengthscale jumps at x1 = changepoint
  double lengthscale_left = 0.3;
  double lengthscale_right = 0.06;
  double changepoint = 0.5;

  void validate() const;
};

/// Equispaced t in [0, 1]; columns "t", "y".
Dataset gen_chirp(const SyntheticSpec& spec);

/// Uniform points in the unit square drawn from a dense GP whose Gibbs kernel
/// uses lengthscale_left for x1 < changepoint and lengthscale_right otherwise.
/// Columns "x1", "x2", "y". n is capped at 1500.
Dataset gen_step_lengthscale(const SyntheticSpec& spec);

struct Metrics {
  double mse = 0.0;
  double pearson = 0.0;
};

Metrics metrics(const Vector& y_true, const Vector& y_pred);

enum class BenchmarkKind { Chirp, StepLengthscale, StockCsv };
BenchmarkKind parse_benchmark(const std::string& name);
std::string to_string(BenchmarkKind kind);

/// One side of a comparison: a mode, its frequency count and optimizer settings.
struct CompareArm {
  TrainMode mode = TrainMode::StationaryFixed;
  Index m = 600;
  TrainConfig config;
};

struct CompareConfig {
  int runs = 20;
  std::uint64_t seed = 1;
  double train_fraction = 0.7;
  CompareArm baseline;
  CompareArm candidate;
  unsigned threads = 1;
};

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::StationaryFixed;
  Metrics metrics;
  double train_seconds = 0.0;
};

struct CompareReport {
  std::vector<RunResult> rows;  // baseline then candidate for each run
  std::string fairness;         // frequency-budget note for the report header

  Metrics mean(TrainMode mode) const;
};

/// Trainable frequency entries an arm spends: m * D per bank.
Index frequency_entries(const CompareArm& arm, Index dims);

/// Runs both arms on `runs` independent draws. `make_data` receives a per-run
/// seed; each run gets its own 70-30 split. Metrics are in original units.
CompareReport compare(const std::function<Dataset(std::uint64_t)>& make_data, const CompareConfig& config);

/// Comment line with the fairness note, then run,seed,mode,mse,corr,train_seconds.
void write_report_csv(const std::filesystem::path& path, const CompareReport& report);

}  // namespace srff
