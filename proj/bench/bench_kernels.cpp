#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "headline/corpus.hpp"
#include "headline/kernels.hpp"
#include "headline/metrics.hpp"

using namespace headline;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (double& v : m.values()) v = d(rng);
  return m;
}

template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&, kernels::Mode)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out, kernels::Mode::kOverwrite);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <void (*Kernel)(Matrix&)>
void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix src = random_matrix(n, n, 3);
  for (auto _ : state) {
    Matrix m = src;
    Kernel(m);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_EvaluateCorpus(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 40), len(5, 20);
  std::vector<std::string> gen, ref;
  for (int i = 0; i < 500; ++i) {
    for (auto* side : {&gen, &ref}) {
      std::string s;
      for (int k = len(rng); k > 0; --k) s += "w" + std::to_string(word(rng)) + " ";
      side->push_back(s);
    }
  }
  const metrics::HashEmbedding embed;
  metrics::EvaluationOptions options;
  options.parallel = parallel;
  for (auto _ : state) {
    auto e = metrics::evaluate_corpus(gen, ref, corpus::word_tokenize, embed, options);
    benchmark::DoNotOptimize(e.unit.bleu);
  }
}

}  // namespace

BENCHMARK(BM_Matmul<kernels::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<kernels::reference::matmul>)->Name("matmul/reference")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<kernels::matmul_a_bt>)->Name("matmul_a_bt/parallel")->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<kernels::reference::matmul_a_bt>)->Name("matmul_a_bt/reference")->Arg(128)->Arg(256);
BENCHMARK(BM_Softmax<kernels::softmax_rows>)->Name("softmax/parallel")->Arg(256)->Arg(512);
BENCHMARK(BM_Softmax<kernels::reference::softmax_rows>)->Name("softmax/reference")->Arg(256)->Arg(512);
BENCHMARK(BM_EvaluateCorpus)->Name("evaluate_corpus")->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
