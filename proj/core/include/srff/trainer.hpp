#pragma once

#include <cstdint>
#include <limits>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srff/data_io.hpp"
#include "srff/gp_model.hpp"
#include "srff/spectral.hpp"

namespace srff {

enum class TrainMode { StationaryFixed, StationaryLearned, NonstationaryLearned };

FeatureMode feature_mode(TrainMode mode) noexcept;
bool learns_frequencies(TrainMode mode) noexcept;
std::string to_string(TrainMode mode);
/// Accepts "stationary-fixed", "stationary_fixed", "nonstationary", ...
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_steps = 2000;
  int patience = 10;      // non-improving validation checks before stopping
  int eval_every = 10;    // steps between validation checks
  double validation_fraction = 0.1;
  double dropout_sigma_p = 0.05;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::NonstationaryLearned;
  bool record_timing = true;

  void validate() const;
};

/// Learnable quantities: the bank and the two variances.
struct TrainParams {
  FrequencyBank bank;
  Hyperparams hyper;
};

enum class StopReason { MaxSteps, Patience };

struct TrainTrace {
  struct Check {
    int step;
    double val_neg_lml;
  };
  struct JitterEvent {
    int step;
    double jitter;
  };

  std::vector<double> train_neg_lml;  // one per step, step s at index s - 1
  std::vector<double> wall_ms;        // one per step
  std::vector<Check> validation;      // includes the initial check at step 0
  std::vector<JitterEvent> jitter_events;
  StopReason stop_reason = StopReason::MaxSteps;
  int best_step = 0;
};

/// Thrown when the objective stops being finite; carries the trace so far.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& what, TrainTrace trace)
      : Error(ErrorCode::NonFiniteLoss, what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Multiplies every frequency entry by an independent N(1, sigma_p^2) draw.
/// Stationary banks stay stationary. sigma_p = 0 returns the bank unchanged.
FrequencyBank apply_gaussian_dropout(const FrequencyBank& bank, double sigma_p, SeededRng& rng);

struct LmlGradient {
  double value = 0.0;  // log marginal likelihood
  std::optional<DenseMatrix> d_omega1;
  std::optional<DenseMatrix> d_omega2;  // nonstationary mode only
  double d_log_sigma_f2 = 0.0;
  double d_log_sigma_n2 = 0.0;
  double jitter = 0.0;
};

/// Reduced log marginal likelihood and its analytic gradient in O(n m^2).
LmlGradient lml_gradient(const TrainParams& params, const DenseMatrix& x, const Vector& y, TrainMode mode);

struct AdamState {
  Vector first;
  Vector second;
  long step = 0;
};

/// One bias-corrected ADAM descent step on `params` given the gradient of the
/// loss (callers pass -grad LML).
void adam_step(Vector& params, AdamState& state, const Vector& loss_gradient, const TrainConfig& config);

/// Tracks the best validation value; reports when patience is exhausted.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when this value is a new best.
  bool update(double value);
  bool should_stop() const noexcept { return stale_ >= patience_; }
  double best() const noexcept { return best_; }

 private:
  int patience_;
  int stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

/// Median of pairwise absolute differences per input column (at most 1000
/// evenly strided rows are used). Zero medians become 1.
std::vector<double> median_heuristic_lengthscales(const DenseMatrix& x);

/// Initial bank: draws from `spec` when given, otherwise from GaussianSE with
/// median-heuristic lengthscales. Nonstationary modes draw omega1 and omega2
/// independently.
FrequencyBank initial_bank(const DenseMatrix& x, TrainMode mode, Index m,
                           const std::optional<SpectralMeasureSpec>& spec, SeededRng& rng);

/// sigma_f2 = var(y), sigma_n2 = 0.1 var(y) (population variance).
Hyperparams initial_hyperparams(const Vector& y);

struct TrainResult {
  FitState state;
  TrainTrace trace;
  TrainParams best;
};

/// Maximizes the reduced log marginal likelihood. Dropout perturbs the bank
/// used for each gradient; ADAM updates the clean bank. Validation uses the
/// clean bank and scores -log p(y_val | y_fit). The returned state is rebuilt
/// from the best-scoring clean parameters on all rows of `ds`.
TrainResult train(const Dataset& ds, const FrequencyBank& initial, const TrainConfig& config,
                  const StandardizationStats& stats);
TrainResult train(const Dataset& ds, const TrainParams& initial, const TrainConfig& config,
                  const StandardizationStats& stats);

/// CSV with columns step, train_neg_lml, val_neg_lml, wall_ms.
void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace);

}  // namespace srff
