#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/clustering.hpp"
#include "shiftcp/synthetic.hpp"
#include "shiftcp/text.hpp"

using namespace shiftcp;

namespace {

std::string sentence(std::mt19937_64& rng, std::size_t words) {
  static const char* vocab[] = {"the", "capital", "of", "france", "is", "paris", "city", "river", "seine", "north"};
  std::uniform_int_distribution<int> pick(0, 9);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + std::string(vocab[pick(rng)]);
  return s;
}

void BM_RougeL(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto a = sentence(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = sentence(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(4)->Arg(16)->Arg(64);

void BM_ClusterAnswers(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<std::string> samples;
  for (int i = 0; i < state.range(0); ++i) samples.push_back(sentence(rng, 6));
  for (auto _ : state) benchmark::DoNotOptimize(cluster_answers(samples));
}
BENCHMARK(BM_ClusterAnswers)->Arg(10)->Arg(20)->Arg(50);

void BM_ConformalQuantile(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scores) s = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(conformal_quantile(scores, 0.1));
}
BENCHMARK(BM_ConformalQuantile)->Arg(1000)->Arg(10000);

void BM_WeightedQuantile(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0))), weights(scores.size());
  for (auto& s : scores) s = u(rng);
  for (auto& w : weights) w = 0.5 + u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_quantile(scores, weights, 0.1));
}
BENCHMARK(BM_WeightedQuantile)->Arg(1000)->Arg(10000);

void BM_GridSearch(benchmark::State& state) {
  auto specs = orthogonal_domains(1, 2, 0.1);
  specs[0].answerable_rate = 0.7;
  specs[0].m = 20;
  const auto gen = generate_dataset(specs, {static_cast<std::size_t>(state.range(0))}, 5);
  const auto items = score_calibration(gen.dataset, CalibrationConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(grid_search(items, 0.1, 20, false));
}
BENCHMARK(BM_GridSearch)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
