#include "srff/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <fmt/os.h>

namespace srff {

FeatureMode feature_mode(TrainMode mode) noexcept {
  return mode == TrainMode::NonstationaryLearned ? FeatureMode::Nonstationary : FeatureMode::Stationary;
}

bool learns_frequencies(TrainMode mode) noexcept { return mode != TrainMode::StationaryFixed; }

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::StationaryFixed: return "stationary_fixed";
    case TrainMode::StationaryLearned: return "stationary_learned";
    case TrainMode::NonstationaryLearned: return "nonstationary_learned";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  std::string key = name;
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "stationary_fixed") return TrainMode::StationaryFixed;
  if (key == "stationary_learned" || key == "stationary") return TrainMode::StationaryLearned;
  if (key == "nonstationary_learned" || key == "nonstationary") return TrainMode::NonstationaryLearned;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + name + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(learning_rate > 0.0)) fail("learning rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam eps must be > 0");
  if (max_steps < 1) fail("max steps must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (eval_every < 1) fail("eval interval must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation fraction must be in [0, 1)");
  if (!(dropout_sigma_p >= 0.0) || !std::isfinite(dropout_sigma_p)) fail("dropout sigma must be >= 0");
}

FrequencyBank apply_gaussian_dropout(const FrequencyBank& bank, double sigma_p, SeededRng& rng) {
  if (!(sigma_p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dropout sigma must be >= 0");
  if (sigma_p == 0.0) return bank;
  auto noisy = [&](const DenseMatrix& omega) {
    DenseMatrix out = omega;
    for (Index k = 0; k < out.rows(); ++k)
      for (Index d = 0; d < out.cols(); ++d) out(k, d) *= 1.0 + sigma_p * rng.normal();
    return out;
  };
  if (bank.is_stationary()) return FrequencyBank::stationary(noisy(bank.omega1()));
  DenseMatrix o1 = noisy(bank.omega1());
  DenseMatrix o2 = noisy(bank.omega2());
  return FrequencyBank::nonstationary(std::move(o1), std::move(o2));
}

LmlGradient lml_gradient(const TrainParams& params, const DenseMatrix& x, const Vector& y, TrainMode mode) {
  const FeatureMode fmode = feature_mode(mode);
  const FrequencyBank& bank = params.bank;
  if (fmode == FeatureMode::Stationary && !bank.is_stationary()) {
    throw Error(ErrorCode::InvalidArgument, "stationary modes need a stationary bank");
  }
  if (x.cols() != bank.dims()) throw Error(ErrorCode::DimensionMismatch, "inputs and bank disagree in D");
  const Index m = bank.m();
  const double n = double(x.rows());

  const DenseMatrix proj1 = x * bank.omega1().transpose();
  const DenseMatrix cos1 = proj1.array().cos();
  const DenseMatrix sin1 = proj1.array().sin();
  DenseMatrix cos2, sin2;
  FeatureMatrix phi{DenseMatrix(x.rows(), 2 * m), m, fmode};
  if (fmode == FeatureMode::Stationary) {
    phi.phi << cos1, sin1;
  } else {
    const DenseMatrix proj2 = x * bank.omega2().transpose();
    cos2 = proj2.array().cos();
    sin2 = proj2.array().sin();
    phi.phi << cos1 + cos2, sin1 + sin2;
  }

  const ReducedSystem sys = fit_state(phi, y, params.hyper);
  LmlGradient out;
  out.value = log_marginal_likelihood(sys, y);
  out.jitter = sys.jitter;

  const double noise = params.hyper.sigma_n2();
  const double signal = params.hyper.sigma_f2() * feature_normalizer(fmode, m);
  const Vector beta = (y - phi.phi * sys.alpha2) / noise;  // (K + sn2 I)^{-1} y
  const Vector u = phi.phi.transpose() * beta;
  // Phi A^{-1}, n x 2m. For tall Phi one GEMM against A^{-1} beats n-column triangular solves.
  DenseMatrix phi_ainv;
  if (x.rows() >= 2 * m) {
    phi_ainv = phi.phi * solve_upper(sys.r, solve_lower(sys.r, DenseMatrix(DenseMatrix::Identity(2 * m, 2 * m))));
  } else {
    phi_ainv = solve_upper(sys.r, solve_lower(sys.r, DenseMatrix(phi.phi.transpose()))).transpose();
  }
  const double trace_term = (phi_ainv.array() * phi.phi.array()).sum();  // tr(A^{-1} Phi^T Phi)

  out.d_log_sigma_n2 = 0.5 * (noise * beta.squaredNorm() - (n - trace_term));
  out.d_log_sigma_f2 = 0.5 * (signal * u.squaredNorm() - trace_term);

  if (!learns_frequencies(mode)) return out;

  // dL/dPhi = signal * beta u^T - Phi A^{-1}
  const DenseMatrix grad_phi = signal * beta * u.transpose() - phi_ainv;
  const auto grad_cos = grad_phi.leftCols(m).array();
  const auto grad_sin = grad_phi.rightCols(m).array();
  const DenseMatrix d_proj1 = grad_sin * cos1.array() - grad_cos * sin1.array();
  out.d_omega1 = d_proj1.transpose() * x;
  if (fmode == FeatureMode::Nonstationary) {
    const DenseMatrix d_proj2 = grad_sin * cos2.array() - grad_cos * sin2.array();
    out.d_omega2 = d_proj2.transpose() * x;
  }
  return out;
}

void adam_step(Vector& params, AdamState& state, const Vector& loss_gradient, const TrainConfig& config) {
  if (loss_gradient.size() != params.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient and parameter sizes differ");
  }
  if (state.first.size() != params.size()) {
    state.first = Vector::Zero(params.size());
    state.second = Vector::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  state.first = b1 * state.first + (1.0 - b1) * loss_gradient;
  state.second = b2 * state.second + (1.0 - b2) * loss_gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  params.array() -= config.learning_rate * (state.first.array() / c1) /
                    ((state.second.array() / c2).sqrt() + config.adam_eps);
}

bool EarlyStopping::update(double value) {
  if (value < best_) {
    best_ = value;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

std::vector<double> median_heuristic_lengthscales(const DenseMatrix& x) {
  constexpr Index kMaxRows = 1000;
  const Index n = x.rows();
  const Index stride = std::max<Index>(1, (n + kMaxRows - 1) / kMaxRows);
  std::vector<double> out;
  std::vector<double> diffs;
  for (Index d = 0; d < x.cols(); ++d) {
    diffs.clear();
    for (Index i = 0; i < n; i += stride)
      for (Index j = i + stride; j < n; j += stride) diffs.push_back(std::abs(x(i, d) - x(j, d)));
    double med = 0.0;
    if (!diffs.empty()) {
      auto mid = diffs.begin() + std::ptrdiff_t(diffs.size() / 2);
      std::nth_element(diffs.begin(), mid, diffs.end());
      med = *mid;
      if (diffs.size() % 2 == 0) med = 0.5 * (med + *std::max_element(diffs.begin(), mid));
    }
    out.push_back(med > 0.0 && std::isfinite(med) ? med : 1.0);
  }
  return out;
}

FrequencyBank initial_bank(const DenseMatrix& x, TrainMode mode, Index m,
                           const std::optional<SpectralMeasureSpec>& spec, SeededRng& rng) {
  const SpectralMeasureSpec measure = spec ? *spec : SpectralMeasureSpec{GaussianSE{median_heuristic_lengthscales(x)}};
  if (feature_mode(mode) == FeatureMode::Stationary) return sample_stationary(measure, m, x.cols(), rng);
  return sample_nonstationary(measure, measure, m, x.cols(), rng);
}

Hyperparams initial_hyperparams(const Vector& y) {
  double var = 1.0;
  if (y.size() >= 2) {
    var = (y.array() - y.mean()).square().mean();
  }
  if (!(var > 0.0) || !std::isfinite(var)) var = 1.0;
  return Hyperparams::from_variances(var, 0.1 * var);
}

namespace {

// Closed-form LML over (sigma_f2, sigma_n2) for a fixed feature map, through
// the spectrum of Phi^T Phi from a thin SVD of Phi.
class FixedSpectrum {
 public:
  FixedSpectrum(const FeatureMatrix& phi, const Vector& y)
      : n_(phi.rows()), m_(phi.m), mode_(phi.mode), yy_(y.squaredNorm()) {
    const Index p = phi.phi.cols();
    Eigen::BDCSVD<DenseMatrix> svd(phi.phi, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    lambda_ = sv.cwiseAbs2();
    b2_ = (sv.array() * (svd.matrixU().transpose() * y).array()).square();
    null_dims_ = p - sv.size();
  }

  LmlGradient evaluate(const Hyperparams& hyper) const {
    const double noise = hyper.sigma_n2();
    const double signal = hyper.sigma_f2() * feature_normalizer(mode_, m_);
    const double ridge = noise / signal;
    const Eigen::ArrayXd shifted = lambda_.array() + ridge;
    const double alpha1_sq = (b2_.array() / shifted).sum();
    const double log_det = shifted.log().sum() + double(null_dims_) * std::log(ridge);
    const double s2 = (b2_.array() / shifted.square()).sum();
    const double s3 = (lambda_.array() * b2_.array() / shifted.square()).sum();
    const double trace_term = (lambda_.array() / shifted).sum();

    LmlGradient out;
    out.value = -(yy_ - alpha1_sq) / (2.0 * noise) - 0.5 * log_det + double(m_) * std::log(ridge) -
                0.5 * double(n_) * std::log(2.0 * std::numbers::pi * noise);
    const double beta_sq = (yy_ - 2.0 * alpha1_sq + s3) / (noise * noise);
    const double u_sq = ridge * ridge * s2 / (noise * noise);
    out.d_log_sigma_n2 = 0.5 * (noise * beta_sq - (double(n_) - trace_term));
    out.d_log_sigma_f2 = 0.5 * (signal * u_sq - trace_term);
    return out;
  }

 private:
  Index n_;
  Index m_;
  FeatureMode mode_;
  double yy_;
  Vector lambda_;
  Vector b2_;
  Index null_dims_ = 0;
};

Vector pack(const TrainParams& p, TrainMode mode) {
  const Index block = p.bank.m() * p.bank.dims();
  Index size = 2;
  if (learns_frequencies(mode)) size += feature_mode(mode) == FeatureMode::Nonstationary ? 2 * block : block;
  Vector out(size);
  Index at = 0;
  if (learns_frequencies(mode)) {
    out.segment(at, block) = p.bank.omega1().reshaped();
    at += block;
    if (feature_mode(mode) == FeatureMode::Nonstationary) {
      out.segment(at, block) = p.bank.omega2().reshaped();
      at += block;
    }
  }
  out(at) = p.hyper.log_sigma_f2;
  out(at + 1) = p.hyper.log_sigma_n2;
  return out;
}

TrainParams unpack(const Vector& v, const TrainParams& like, TrainMode mode) {
  const Index m = like.bank.m();
  const Index dims = like.bank.dims();
  const Index block = m * dims;
  Index at = 0;
  FrequencyBank bank = like.bank;
  if (learns_frequencies(mode)) {
    DenseMatrix o1 = v.segment(at, block).reshaped(m, dims);
    at += block;
    if (feature_mode(mode) == FeatureMode::Nonstationary) {
      DenseMatrix o2 = v.segment(at, block).reshaped(m, dims);
      at += block;
      bank = FrequencyBank::nonstationary(std::move(o1), std::move(o2));
    } else {
      bank = FrequencyBank::stationary(std::move(o1));
    }
  }
  Hyperparams hyper{v(at), std::max(v(at + 1), std::log(kNoiseVarianceFloor))};
  return TrainParams{std::move(bank), hyper};
}

Vector pack_loss_gradient(const LmlGradient& g, TrainMode mode) {
  Index size = 2;
  if (g.d_omega1) size += g.d_omega1->size();
  if (g.d_omega2) size += g.d_omega2->size();
  Vector out(size);
  Index at = 0;
  if (learns_frequencies(mode)) {
    out.segment(at, g.d_omega1->size()) = -g.d_omega1->reshaped();
    at += g.d_omega1->size();
    if (g.d_omega2) {
      out.segment(at, g.d_omega2->size()) = -g.d_omega2->reshaped();
      at += g.d_omega2->size();
    }
  }
  out(at) = -g.d_log_sigma_f2;
  out(at + 1) = -g.d_log_sigma_n2;
  return out;
}

}  // namespace

TrainResult train(const Dataset& ds, const FrequencyBank& initial, const TrainConfig& config,
                  const StandardizationStats& stats) {
  return train(ds, TrainParams{initial, initial_hyperparams(ds.y)}, config, stats);
}

TrainResult train(const Dataset& ds, const TrainParams& initial, const TrainConfig& config,
                  const StandardizationStats& stats) {
  config.validate();
  if (!ds.standardized) throw Error(ErrorCode::InvalidArgument, "training expects a standardized dataset");
  if (ds.n() < 2) throw Error(ErrorCode::InvalidArgument, "training needs at least two rows");
  if (ds.dims() != initial.bank.dims()) throw Error(ErrorCode::DimensionMismatch, "data and bank disagree in D");

  const TrainMode mode = config.mode;
  const FeatureMode fmode = feature_mode(mode);
  TrainParams params = initial;
  if (fmode == FeatureMode::Stationary && !params.bank.is_stationary()) {
    throw Error(ErrorCode::InvalidArgument, "stationary modes need a stationary initial bank");
  }
  if (fmode == FeatureMode::Nonstationary && params.bank.is_stationary()) {
    params.bank = FrequencyBank::nonstationary(params.bank.omega1(), params.bank.omega1());
  }
  params.hyper.log_sigma_n2 = std::max(params.hyper.log_sigma_n2, std::log(kNoiseVarianceFloor));

  // Hold out validation rows from the fitting rows.
  std::vector<Index> fit_rows, val_rows;
  const auto val_count = Index(std::llround(config.validation_fraction * double(ds.n())));
  if (val_count >= 1 && ds.n() - val_count >= 1) {
    auto [keep, held] = split_indices(ds.n(), double(ds.n() - val_count) / double(ds.n()), derive_seed(config.seed, 2));
    fit_rows = std::move(keep);
    val_rows = std::move(held);
  } else {
    for (Index i = 0; i < ds.n(); ++i) fit_rows.push_back(i);
  }
  // Fitting rows first, then validation rows, so "all rows" is a stacked copy.
  const Dataset fit_ds = take_rows(ds, fit_rows);
  std::vector<Index> ordered = fit_rows;
  ordered.insert(ordered.end(), val_rows.begin(), val_rows.end());
  const Dataset all_ds = take_rows(ds, ordered);
  const bool has_validation = !val_rows.empty();

  std::optional<FixedSpectrum> fixed_fit, fixed_all;
  if (!learns_frequencies(mode)) {
    fixed_fit.emplace(features_for(fit_ds.x, params.bank, fmode), fit_ds.y);
    if (has_validation) fixed_all.emplace(features_for(all_ds.x, params.bank, fmode), all_ds.y);
  }

  auto lml_at = [&](const TrainParams& p, const Dataset& d, const std::optional<FixedSpectrum>& fixed) {
    if (fixed) return fixed->evaluate(p.hyper).value;
    return log_marginal_likelihood_reduced(features_for(d.x, p.bank, fmode), d.y, p.hyper);
  };
  // -log p(y_val | y_fit) = -(LML(all) - LML(fit)); training -LML without held-out rows.
  auto validation_score = [&](const TrainParams& p) {
    const double fit_lml = lml_at(p, fit_ds, fixed_fit);
    if (!has_validation) return -fit_lml;
    return -(lml_at(p, all_ds, fixed_all) - fit_lml);
  };

  TrainTrace trace;
  SeededRng dropout_rng(derive_seed(config.seed, 1));
  EarlyStopping stopper(config.patience);
  AdamState adam;
  Vector flat = pack(params, mode);
  TrainParams best = params;

  auto check = [&](int step) {
    const double score = validation_score(params);
    if (!std::isfinite(score)) {
      throw TrainingAborted("validation score is not finite at step " + std::to_string(step), trace);
    }
    trace.validation.push_back({step, score});
    if (stopper.update(score)) {
      best = params;
      trace.best_step = step;
    }
  };

  check(0);
  int last_checked = 0;
  for (int step = 1; step <= config.max_steps; ++step) {
    const auto started = std::chrono::steady_clock::now();
    LmlGradient grad;
    if (fixed_fit) {
      grad = fixed_fit->evaluate(params.hyper);
    } else {
      const TrainParams noisy{apply_gaussian_dropout(params.bank, config.dropout_sigma_p, dropout_rng), params.hyper};
      grad = lml_gradient(noisy, fit_ds.x, fit_ds.y, mode);
    }
    const Vector loss_grad = pack_loss_gradient(grad, mode);
    if (!std::isfinite(grad.value) || !loss_grad.allFinite()) {
      throw TrainingAborted("objective is not finite at step " + std::to_string(step), trace);
    }
    if (grad.jitter > 0.0) trace.jitter_events.push_back({step, grad.jitter});
    trace.train_neg_lml.push_back(-grad.value);

    adam_step(flat, adam, loss_grad, config);
    params = unpack(flat, params, mode);
    flat = pack(params, mode);  // keeps the noise floor in the optimizer's copy

    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
    trace.wall_ms.push_back(config.record_timing ? elapsed.count() : 0.0);

    if (step % config.eval_every == 0) {
      check(step);
      last_checked = step;
      if (stopper.should_stop()) {
        trace.stop_reason = StopReason::Patience;
        break;
      }
    }
  }
  if (trace.stop_reason == StopReason::MaxSteps && last_checked != int(trace.train_neg_lml.size())) {
    check(int(trace.train_neg_lml.size()));
  }

  FitState state = build_fit_state(ds.x, ds.y, best.bank, fmode, best.hyper, stats);
  return TrainResult{std::move(state), std::move(trace), std::move(best)};
}

void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "step,train_neg_lml,val_neg_lml,wall_ms\n";
  std::size_t v = 0;
  // Step 0 has only the initial validation score.
  while (v < trace.validation.size() && trace.validation[v].step == 0) {
    out << fmt::format("0,,{:.17g},0\n", trace.validation[v].val_neg_lml);
    ++v;
  }
  for (std::size_t i = 0; i < trace.train_neg_lml.size(); ++i) {
    const int step = int(i) + 1;
    std::string val;
    if (v < trace.validation.size() && trace.validation[v].step == step) {
      val = fmt::format("{:.17g}", trace.validation[v].val_neg_lml);
      ++v;
    }
    out << fmt::format("{},{:.17g},{},{:.3f}\n", step, trace.train_neg_lml[i], val, trace.wall_ms[i]);
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace srff
