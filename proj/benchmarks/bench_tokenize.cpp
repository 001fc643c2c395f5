#include <benchmark/benchmark.h>

#include <string>

#include <vulnpipe/extraction.hpp>
#include <vulnpipe/tokenizer.hpp>

namespace {

std::string php_source(int functions) {
  std::string src = "<?php\n";
  for (int i = 0; i < functions; ++i) {
    src += "function handler_" + std::to_string(i) + "($req, array $opts = []) {\n"
           "  $id = (int) $req['id'] ?? 0;\n"
           "  $sql = \"SELECT * FROM t WHERE id = {$id}\";\n"
           "  foreach ($opts as $k => $v) { $sql .= ' AND ' . $k . \" = '\" . $v . \"'\"; }\n"
           "  return $db->query($sql); // TODO escape\n"
           "}\n\n";
  }
  return src;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string src = php_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vulnpipe::extraction::tokenize(src));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(src.size()));
}
BENCHMARK(BM_Tokenize)->Arg(10)->Arg(1000);

void BM_ExtractFile(benchmark::State& state) {
  const std::string src = php_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(vulnpipe::extraction::extract_functions({"", "", "bench.php", src}));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(src.size()));
}
BENCHMARK(BM_ExtractFile)->Arg(10)->Arg(1000);

}  // namespace
