#include "vulnpipe/dedup.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "vulnpipe/error.hpp"

namespace vulnpipe::dedup {
namespace {

using TokenId = std::uint32_t;

// Corpus-wide token interning so windows compare as integer runs.
struct InternedCorpus {
  std::vector<std::vector<TokenId>> sequences;
  std::vector<std::vector<TokenId>> sets;  // sorted, unique
};

InternedCorpus intern(std::span<const FunctionSpan> corpus) {
  std::unordered_map<std::string, TokenId> ids;
  InternedCorpus out;
  out.sequences.reserve(corpus.size());
  out.sets.reserve(corpus.size());
  for (const FunctionSpan& span : corpus) {
    std::vector<TokenId> seq;
    seq.reserve(span.tokens.size());
    for (const std::string& tok : span.tokens) {
      auto [it, inserted] = ids.try_emplace(tok, static_cast<TokenId>(ids.size()));
      seq.push_back(it->second);
    }
    std::vector<TokenId> set = seq;
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    out.sequences.push_back(std::move(seq));
    out.sets.push_back(std::move(set));
  }
  return out;
}

double set_jaccard(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::uint64_t mix(std::uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

struct WindowRef {
  std::uint32_t span;
  std::uint32_t offset;
};

std::set<SpanPair> candidates_from(const InternedCorpus& ic, std::size_t window) {
  const auto& seqs = ic.sequences;
  auto same_window = [&](WindowRef a, WindowRef b) {
    return std::equal(seqs[a.span].begin() + a.offset, seqs[a.span].begin() + a.offset + window,
                      seqs[b.span].begin() + b.offset);
  };

  // Rolling polynomial hash over interned ids. Within a span only distinct
  // windows are indexed per bucket.
  constexpr std::uint64_t kBase = 1'000'003ULL;
  std::uint64_t top = 1;
  for (std::size_t i = 1; i < window; ++i) top *= kBase;

  std::unordered_map<std::uint64_t, std::vector<WindowRef>> index;
  for (std::uint32_t s = 0; s < seqs.size(); ++s) {
    const auto& seq = seqs[s];
    if (seq.size() < window) continue;
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i >= window) h -= top * (mix(seq[i - window]) | 1U);
      h = h * kBase + (mix(seq[i]) | 1U);
      if (i + 1 < window) continue;
      const WindowRef ref{s, static_cast<std::uint32_t>(i + 1 - window)};
      auto& bucket = index[h];
      const bool dup_in_span = std::any_of(bucket.rbegin(), bucket.rend(), [&](WindowRef o) {
        return o.span == s && same_window(o, ref);
      });
      if (!dup_in_span) bucket.push_back(ref);
    }
  }

  std::set<SpanPair> pairs;
  for (const auto& [hash, bucket] : index) {
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      for (std::size_t j = i + 1; j < bucket.size(); ++j) {
        if (bucket[i].span == bucket[j].span) continue;
        const std::size_t a = bucket[i].span;
        const std::size_t b = bucket[j].span;
        const SpanPair key{std::min(a, b), std::max(a, b)};
        if (pairs.contains(key)) continue;
        if (same_window(bucket[i], bucket[j])) pairs.insert(key);
      }
    }
  }
  return pairs;
}

}  // namespace

void DedupConfig::validate() const {
  if (window_size == 0) throw UsageError("dedup window_size must be >= 1");
  if (!(jaccard_threshold >= 0.0 && jaccard_threshold <= 1.0)) {
    throw UsageError("dedup jaccard_threshold must lie in [0, 1]");
  }
}

std::set<SpanPair> window_candidates(std::span<const FunctionSpan> corpus,
                                     const DedupConfig& cfg) {
  cfg.validate();
  return candidates_from(intern(corpus), cfg.window_size);
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  std::set<std::string_view> sa(a.begin(), a.end());
  std::set<std::string_view> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (std::string_view t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

double jaccard(const FunctionSpan& a, const FunctionSpan& b) { return jaccard(a.tokens, b.tokens); }

DedupReport dedup_corpus(std::span<const FunctionSpan> corpus, const DedupConfig& cfg) {
  cfg.validate();
  const InternedCorpus ic = intern(corpus);
  const std::set<SpanPair> pairs = candidates_from(ic, cfg.window_size);

  // earlier[i]: candidate partners j < i, ascending (std::set iteration order).
  std::vector<std::vector<std::size_t>> earlier(corpus.size());
  for (const auto& [lo, hi] : pairs) earlier[hi].push_back(lo);

  DedupReport report;
  std::vector<bool> kept(corpus.size(), false);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bool removed = false;
    for (std::size_t j : earlier[i]) {
      if (!kept[j]) continue;
      ++report.pair_count_examined;
      const double sim = set_jaccard(ic.sets[i], ic.sets[j]);
      if (sim >= cfg.jaccard_threshold) {
        report.removed.push_back({i, j, sim});
        removed = true;
        break;
      }
    }
    if (!removed) {
      kept[i] = true;
      report.kept.push_back(i);
    }
  }
  return report;
}

std::vector<FunctionSpan> kept_spans(const DedupReport& report,
                                     std::span<const FunctionSpan> corpus) {
  std::vector<FunctionSpan> out;
  out.reserve(report.kept.size());
  for (std::size_t i : report.kept) out.push_back(corpus[i]);
  return out;
}

namespace {

nlohmann::json span_ref(const FunctionSpan& s) {
  return {{"repo_url", s.source.repo_url},
          {"commit_id", s.source.commit_id},
          {"path", s.source.path},
          {"start_line", s.start_line}};
}

}  // namespace

nlohmann::json report_to_json(const DedupReport& report, std::span<const FunctionSpan> corpus,
                              const DedupConfig& cfg) {
  nlohmann::json kept = nlohmann::json::array();
  for (std::size_t i : report.kept) kept.push_back(span_ref(corpus[i]));
  nlohmann::json removed = nlohmann::json::array();
  for (const Removal& r : report.removed) {
    removed.push_back({{"span", span_ref(corpus[r.removed])},
                       {"representative", span_ref(corpus[r.representative])},
                       {"jaccard", r.similarity}});
  }
  return {{"config", {{"window_size", cfg.window_size}, {"jaccard_threshold", cfg.jaccard_threshold}}},
          {"input_count", corpus.size()},
          {"kept_count", report.kept.size()},
          {"removed_count", report.removed.size()},
          {"pair_count_examined", report.pair_count_examined},
          {"kept", std::move(kept)},
          {"removed", std::move(removed)}};
}

}  // namespace vulnpipe::dedup
