#include <benchmark/benchmark.h>

#include <vector>

#include "uxai/classifiers.hpp"
#include "uxai/evidence.hpp"
#include "uxai/explain.hpp"
#include "uxai/rng.hpp"

namespace {

uxai::Dataset synth(std::size_t n, std::size_t q, int classes,
                    std::uint64_t seed) {
  uxai::Rng rng(seed);
  uxai::Dataset d;
  d.features = uxai::Matrix(n, q);
  d.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    d.labels[r] = c;
    for (std::size_t j = 0; j < q; ++j) {
      d.features(r, j) = 0.15 * rng.normal() + (j % classes == std::size_t(c) ? 0.8 : 0.2);
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    d.feature_names.push_back("f" + std::to_string(j));
  }
  for (int c = 0; c < classes; ++c) {
    d.class_names.push_back("c" + std::to_string(c));
  }
  return d;
}

void BM_knn_predict(benchmark::State& state) {
  auto train = synth(static_cast<std::size_t>(state.range(0)), 16, 3, 7);
  auto model = uxai::KnnModel::fit(train, 7);
  std::vector<double> x(16, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(x));
  }
}
BENCHMARK(BM_knn_predict)->Arg(200)->Arg(1000)->Arg(5000);

void BM_shapley_sampled_generic(benchmark::State& state) {
  auto train = synth(300, static_cast<std::size_t>(state.range(0)), 3, 7);
  auto model = uxai::KnnModel::fit(train, 7);
  uxai::Matrix background(32, train.num_features());
  for (std::size_t r = 0; r < 32; ++r) {
    auto src = train.features.row(r);
    std::copy(src.begin(), src.end(), background.row(r).begin());
  }
  std::vector<double> x(train.num_features(), 0.5);
  auto fn = uxai::score_fn(model);
  for (auto _ : state) {
    auto scorer = uxai::make_generic_scorer(fn, background, x);
    benchmark::DoNotOptimize(uxai::shapley_sampled(*scorer, 0, 8, 42));
  }
}
BENCHMARK(BM_shapley_sampled_generic)->Arg(8)->Arg(16)->Arg(32);

void BM_shapley_sampled_knn(benchmark::State& state) {
  auto train = synth(300, static_cast<std::size_t>(state.range(0)), 3, 7);
  auto model = uxai::KnnModel::fit(train, 7);
  uxai::Matrix background(32, train.num_features());
  for (std::size_t r = 0; r < 32; ++r) {
    auto src = train.features.row(r);
    std::copy(src.begin(), src.end(), background.row(r).begin());
  }
  std::vector<double> x(train.num_features(), 0.5);
  for (auto _ : state) {
    auto scorer = uxai::make_hybrid_scorer(model, background, x);
    benchmark::DoNotOptimize(uxai::shapley_sampled(*scorer, 0, 8, 42));
  }
}
BENCHMARK(BM_shapley_sampled_knn)->Arg(8)->Arg(16)->Arg(32);

void BM_dempster_combine(benchmark::State& state) {
  auto c = static_cast<std::size_t>(state.range(0));
  uxai::MassFunction a(c), b(c);
  a.set(a.full_set(), 0.3);
  b.set(b.full_set(), 0.4);
  for (std::size_t i = 0; i < c; ++i) {
    a.set(1u << i, 0.7 / static_cast<double>(c));
    b.set(1u << i, 0.6 / static_cast<double>(c));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(uxai::dempster_combine(a, b));
  }
}
BENCHMARK(BM_dempster_combine)->Arg(2)->Arg(6)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
