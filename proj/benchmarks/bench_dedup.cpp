#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include <vulnpipe/dedup.hpp>
#include <vulnpipe/random.hpp>

namespace {

using vulnpipe::extraction::FunctionSpan;

// n functions of 80 tokens drawn from a 5000-word vocabulary, every tenth a copy.
std::vector<FunctionSpan> corpus(std::size_t n) {
  vulnpipe::Rng rng(n);
  std::vector<FunctionSpan> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 10 == 9) {
      out[i].tokens = out[rng.below(i)].tokens;
      continue;
    }
    for (int t = 0; t < 80; ++t) out[i].tokens.push_back("t" + std::to_string(rng.below(5000)));
  }
  return out;
}

void BM_DedupCorpus(benchmark::State& state) {
  const auto spans = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vulnpipe::dedup::dedup_corpus(spans));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DedupCorpus)->Arg(200)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Jaccard(benchmark::State& state) {
  const auto spans = corpus(2);
  for (auto _ : state) benchmark::DoNotOptimize(vulnpipe::dedup::jaccard(spans[0], spans[1]));
}
BENCHMARK(BM_Jaccard);

}  // namespace
