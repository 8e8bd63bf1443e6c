/**
 * @file kernels_bench.cpp
 * @brief Serial reference vs OpenMP kernels at encoder-sized shapes.
 *
 * Arguments are (rows, inner) with 400 output columns; the OpenMP variants
 * take a thread count as a third argument.
 */
#include <benchmark/benchmark.h>

#include "ahp/kernels.hpp"
#include "ahp/synth.hpp"

using namespace ahp;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& x : m.data) x = n(rng);
  return m;
}

// Edge-by-node incidence of a planted hypergraph with `nodes` nodes.
CsrMatrix incidence(std::size_t nodes) {
  const SynthData d = make_planted({.nodes = nodes, .edges = 3 * nodes / 2, .communities = nodes / 20});
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> t;
  const auto& edges = d.hypergraph.hyperedges();
  for (std::uint32_t e = 0; e < edges.size(); ++e)
    for (auto v : edges[e]) t.emplace_back(e, v, 1.0 / static_cast<double>(edges[e].size()));
  return CsrMatrix::from_triplets(edges.size(), nodes, std::move(t));
}

void BM_GemmSerial(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1), b = random_matrix(state.range(1), 400, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::gemm(a, b));
}

void BM_GemmParallel(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1), b = random_matrix(state.range(1), 400, 2);
  kernels::set_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gemm(a, b));
}

void BM_GemmTnSerial(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1), b = random_matrix(state.range(0), 400, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::gemm_tn(a, b));
}

void BM_GemmTnParallel(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1), b = random_matrix(state.range(0), 400, 2);
  kernels::set_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gemm_tn(a, b));
}

void BM_SpmmSerial(benchmark::State& state) {
  const CsrMatrix s = incidence(state.range(0));
  const Matrix x = random_matrix(state.range(0), 400, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::spmm(s, x));
}

void BM_SpmmParallel(benchmark::State& state) {
  const CsrMatrix s = incidence(state.range(0));
  const Matrix x = random_matrix(state.range(0), 400, 3);
  kernels::set_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::spmm(s, x));
}

}  // namespace

BENCHMARK(BM_GemmSerial)->Args({200, 400})->Args({1500, 400});
BENCHMARK(BM_GemmParallel)->Args({200, 400, 1})->Args({200, 400, 4})->Args({1500, 400, 1})->Args({1500, 400, 4});
BENCHMARK(BM_GemmTnSerial)->Args({1500, 400});
BENCHMARK(BM_GemmTnParallel)->Args({1500, 400, 1})->Args({1500, 400, 4});
BENCHMARK(BM_SpmmSerial)->Args({200, 0})->Args({2000, 0});
BENCHMARK(BM_SpmmParallel)->Args({200, 0, 1})->Args({200, 0, 4})->Args({2000, 0, 1})->Args({2000, 0, 4});

BENCHMARK_MAIN();
