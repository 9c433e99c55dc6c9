#include <benchmark/benchmark.h>

#include "srff/features.hpp"
#include "srff/gp_model.hpp"
#include "srff/trainer.hpp"

using namespace srff;

namespace {

struct Problem {
  DenseMatrix x;
  Vector y;
  FrequencyBank bank;
  FeatureMode mode;
};

Problem make_problem(Index n, Index m, FeatureMode mode) {
  SeededRng rng(derive_seed(n, std::uint64_t(m)));
  DenseMatrix x = standard_normal(rng, n, 2);
  Vector y = x.col(0).array().sin().matrix() + 0.1 * standard_normal(rng, n, 1);
  DenseMatrix o1 = standard_normal(rng, m, 2);
  DenseMatrix o2 = standard_normal(rng, m, 2);
  auto bank = mode == FeatureMode::Stationary ? FrequencyBank::stationary(std::move(o1))
                                              : FrequencyBank::nonstationary(std::move(o1), std::move(o2));
  return {std::move(x), std::move(y), std::move(bank), mode};
}

FeatureMode mode_arg(const benchmark::State& state) {
  return state.range(2) == 0 ? FeatureMode::Stationary : FeatureMode::Nonstationary;
}

void BM_Features(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), mode_arg(state));
  for (auto _ : state) benchmark::DoNotOptimize(features_for(p.x, p.bank, p.mode));
}

void BM_LogMarginalLikelihood(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), mode_arg(state));
  const auto hyper = Hyperparams::from_variances(1.0, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_marginal_likelihood_reduced(features_for(p.x, p.bank, p.mode), p.y, hyper));
  }
}

void BM_Gradient(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), mode_arg(state));
  const TrainParams params{p.bank, Hyperparams::from_variances(1.0, 0.1)};
  const TrainMode mode = p.mode == FeatureMode::Stationary ? TrainMode::StationaryLearned : TrainMode::NonstationaryLearned;
  for (auto _ : state) benchmark::DoNotOptimize(lml_gradient(params, p.x, p.y, mode));
}

void BM_Predict(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), mode_arg(state));
  const auto fit = build_fit_state(p.x, p.y, p.bank, p.mode, Hyperparams::from_variances(1.0, 0.1),
                                   StandardizationStats::identity(2));
  for (auto _ : state) benchmark::DoNotOptimize(predict(fit, p.x));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int mode : {0, 1})
    for (int n : {500, 1000, 2000}) b->Args({n, 100, mode});
  b->ArgNames({"n", "m", "nonstationary"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Features)->Apply(sizes);
BENCHMARK(BM_LogMarginalLikelihood)->Apply(sizes);
BENCHMARK(BM_Gradient)->Apply(sizes);
BENCHMARK(BM_Predict)->Apply(sizes);
BENCHMARK_MAIN();
