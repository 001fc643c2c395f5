#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpipe/extraction.hpp"

namespace vulnpipe::dedup {

using extraction::FunctionSpan;

struct DedupConfig {
  std::size_t window_size = 30;
  double jaccard_threshold = 0.99;

  /// Throws UsageError on window_size == 0 or a threshold outside [0, 1].
  void validate() const;
};

/// Corpus indices of two spans, first < second.
using SpanPair = std::pair<std::size_t, std::size_t>;

/// Pairs of spans sharing at least one identical run of `window_size`
/// consecutive tokens. Window hashes only bucket candidates; every pair is
/// confirmed by comparing the windows token by token.
std::set<SpanPair> window_candidates(std::span<const FunctionSpan> corpus,
                                     const DedupConfig& cfg);

/// Jaccard index of the two token sets; 1.0 when both are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);
double jaccard(const FunctionSpan& a, const FunctionSpan& b);

struct Removal {
  std::size_t removed;         // corpus index
  std::size_t representative;  // earlier kept corpus index
  double similarity;
};

struct DedupReport {
  std::vector<std::size_t> kept;  // corpus indices, ascending
  std::vector<Removal> removed;   // ascending by `removed`
  std::size_t pair_count_examined = 0;
};

/// Keep-first sweep in corpus order: a span is dropped when it shares a
/// window with an earlier kept span and their Jaccard index reaches the
/// threshold. The representative is the earliest such kept span.
DedupReport dedup_corpus(std::span<const FunctionSpan> corpus, const DedupConfig& cfg = {});

std::vector<FunctionSpan> kept_spans(const DedupReport& report,
                                     std::span<const FunctionSpan> corpus);

/// JSON document describing the run; spans are referenced by
/// repo/commit/path/start_line.
nlohmann::json report_to_json(const DedupReport& report, std::span<const FunctionSpan> corpus,
                              const DedupConfig& cfg);

}  // namespace vulnpipe::dedup
