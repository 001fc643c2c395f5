#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/random.hpp>

namespace {

using namespace vulnpipe;

struct Inputs {
  std::vector<extraction::FunctionSpan> functions;
  std::vector<annotation::Finding> findings;
};

// Functions of 5-40 lines laid end to end across 50 files; findings at random lines.
Inputs inputs(std::size_t n_functions, std::size_t n_findings) {
  Rng rng(n_functions ^ n_findings);
  Inputs in;
  std::vector<int> next_line(50, 1);
  for (std::size_t i = 0; i < n_functions; ++i) {
    const auto file = rng.below(50);
    extraction::FunctionSpan fn;
    fn.source.path = "src/f" + std::to_string(file) + ".php";
    fn.start_line = next_line[file];
    fn.end_line = fn.start_line + 4 + static_cast<int>(rng.below(36));
    next_line[file] = fn.end_line + 2;
    in.functions.push_back(std::move(fn));
  }
  const auto levels = annotation::taxonomy(annotation::Tool::SonarQube);
  for (std::size_t i = 0; i < n_findings; ++i) {
    const auto file = rng.below(50);
    const int line = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(next_line[file])));
    in.findings.push_back({annotation::Tool::SonarQube, "php:S1", levels[rng.below(levels.size())],
                           "src/f" + std::to_string(file) + ".php", line, line});
  }
  return in;
}

void BM_Fuse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Inputs in = inputs(n, n / 2);
  const auto filter = annotation::SeverityFilter::defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(annotation::fuse_annotations(in.functions, in.findings, filter));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fuse)->Arg(100)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

}  // namespace
