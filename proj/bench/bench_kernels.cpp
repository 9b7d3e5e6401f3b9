#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "nof1/design_search.hpp"
#include "nof1/estimation.hpp"
#include "nof1/reference.hpp"
#include "nof1/sequences.hpp"

using namespace nof1;

namespace {

const ModelForm kForms[] = {kFixedCommon, kFixedRandom, kRandomCommon, kRandomRandom};

// Args: model form index, K, J, L.
void BM_VarPopulationKernel(benchmark::State& state) {
  const auto form = kForms[state.range(0)];
  const int K = static_cast<int>(state.range(1));
  const auto seqs = enumerate_sequences({SchemeKind::pairwise}, K);
  const std::vector<int> counts(seqs.size(), static_cast<int>(state.range(2)));
  const int L = static_cast<int>(state.range(3));
  for (auto _ : state) {
    const auto info = PopulationInformation::build(seqs, counts, L, form, {}, {});
    benchmark::DoNotOptimize(info.var_treatment());
  }
  state.SetLabel(form.name());
}

void BM_VarPopulationReference(benchmark::State& state) {
  const auto form = kForms[state.range(0)];
  const int K = static_cast<int>(state.range(1));
  const auto seqs = enumerate_sequences({SchemeKind::pairwise}, K);
  const std::vector<int> counts(seqs.size(), static_cast<int>(state.range(2)));
  const int L = static_cast<int>(state.range(3));
  for (auto _ : state) benchmark::DoNotOptimize(reference::var_population(seqs, counts, L, form, {}, {}));
  state.SetLabel(form.name());
}

void population_args(benchmark::internal::Benchmark* b) {
  for (int form = 0; form < 4; ++form) {
    b->Args({form, 4, 8, 6});
    b->Args({form, 8, 2, 3});
  }
}

BENCHMARK(BM_VarPopulationKernel)->Apply(population_args);
BENCHMARK(BM_VarPopulationReference)->Apply(population_args)->Unit(benchmark::kMicrosecond);

void BM_ShrunkenKernel(benchmark::State& state) {
  const auto seqs = enumerate_sequences({SchemeKind::pairwise}, 4);
  const BalancedDesign d{SchemeKind::pairwise, seqs, 8, 4, 6};
  for (auto _ : state) benchmark::DoNotOptimize(var_shrunken(d, 0, 0, kRandomRandom, {}, {}));
}

void BM_ShrunkenReference(benchmark::State& state) {
  const auto seqs = enumerate_sequences({SchemeKind::pairwise}, 4);
  const std::vector<int> counts(seqs.size(), 8);
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::var_shrunken(seqs, counts, 6, 0, 0, kRandomRandom, {}, {}));
}

BENCHMARK(BM_ShrunkenKernel);
BENCHMARK(BM_ShrunkenReference)->Unit(benchmark::kMicrosecond);

// Arg: thread count. Fixed-I*J curve over 1..64 with per-sequence SEs.
void BM_TotalCurve(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  SearchConstraint c;
  c.fix = FixedAxis::participants;
  for (auto _ : state) benchmark::DoNotOptimize(optimize_total_measurements_curve(c, 1, 64).points.size());
  omp_set_num_threads(saved);
  state.SetLabel(std::to_string(threads) + " thread(s)");
}

BENCHMARK(BM_TotalCurve)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
