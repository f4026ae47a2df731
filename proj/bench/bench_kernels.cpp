#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "toxictrap/kernels.hpp"
#include "toxictrap/surrogate.hpp"

namespace tk = toxictrap::kernels;

namespace {

constexpr std::size_t kDim = toxictrap::kDefaultFeatureDim;
constexpr std::size_t kLabels = 3;

struct LinearCase {
  tk::SparseRows x;
  std::vector<double> weights, bias, out;
};

LinearCase make_linear(std::size_t rows) {
  std::mt19937_64 rng(1);
  LinearCase c;
  c.weights.resize(kLabels * kDim);
  for (auto& w : c.weights) w = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
  c.bias = {0.1, -0.2, 0.05};
  for (std::size_t r = 0; r < rows; ++r) {
    for (int k = 0; k < 30; ++k) {
      c.x.index.push_back(static_cast<std::uint32_t>(rng() % kDim));
      c.x.value.push_back(1.0);
    }
    c.x.offsets.push_back(c.x.index.size());
  }
  c.out.resize(rows * kLabels);
  return c;
}

struct ScanCase {
  std::vector<float> matrix, query;
  std::vector<double> norms, out;
};

ScanCase make_scan(std::size_t vocab, std::size_t dim) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ScanCase c;
  c.matrix.resize(vocab * dim);
  for (auto& v : c.matrix) v = u(rng);
  c.norms.resize(vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    double s = 0;
    for (std::size_t d = 0; d < dim; ++d) s += double(c.matrix[i * dim + d]) * c.matrix[i * dim + d];
    c.norms[i] = std::sqrt(s);
  }
  c.query.assign(c.matrix.begin(), c.matrix.begin() + static_cast<std::ptrdiff_t>(dim));
  c.out.resize(vocab);
  return c;
}

void BM_LinearSerial(benchmark::State& state) {
  auto c = make_linear(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    tk::serial::linear_scores(c.x, c.weights, c.bias, kDim, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LinearOmp(benchmark::State& state) {
  auto c = make_linear(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    tk::omp::linear_scores(c.x, c.weights, c.bias, kDim, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CosineSerial(benchmark::State& state) {
  auto c = make_scan(static_cast<std::size_t>(state.range(0)), 300);
  for (auto _ : state) {
    tk::serial::cosine_scan(c.matrix, c.norms, c.query, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CosineOmp(benchmark::State& state) {
  auto c = make_scan(static_cast<std::size_t>(state.range(0)), 300);
  for (auto _ : state) {
    tk::omp::cosine_scan(c.matrix, c.norms, c.query, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LinearSerial)->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_LinearOmp)->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_CosineSerial)->Arg(4096)->Arg(65536);
BENCHMARK(BM_CosineOmp)->Arg(4096)->Arg(65536);

BENCHMARK_MAIN();
