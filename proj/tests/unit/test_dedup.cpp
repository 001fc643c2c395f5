#include <gtest/gtest.h>

#include <fmt/format.h>

#include <vulnpipe/dedup.hpp>
#include <vulnpipe/random.hpp>

#include "generators.hpp"
#include "oracles.hpp"

namespace {

using namespace vulnpipe::dedup;
using vulnpipe::extraction::FunctionSpan;
using vulnpipe::testing::dedup_oracle;
using vulnpipe::testing::jaccard_oracle;
using vulnpipe::testing::shares_window;
using Tokens = std::vector<std::string>;

FunctionSpan span_of(Tokens tokens, std::string path = "a.php") {
  FunctionSpan s;
  s.source.path = std::move(path);
  s.tokens = std::move(tokens);
  return s;
}

Tokens seq(const std::string& prefix, std::size_t n) {
  Tokens t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(fmt::format("{}{}", prefix, i));
  return t;
}

TEST(Jaccard, Definitions) {
  EXPECT_DOUBLE_EQ(jaccard(Tokens{"a", "b"}, Tokens{"b", "a", "a"}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(Tokens{"a"}, Tokens{"b"}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(Tokens{"a", "b", "c"}, Tokens{"b", "c", "d"}), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(Tokens{}, Tokens{}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(Tokens{}, Tokens{"x"}), 0.0);
}

TEST(Jaccard, MatchesOracleOnRandomSets) {
  vulnpipe::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens a, b;
    for (std::size_t i = rng.below(30); i > 0; --i) a.push_back(fmt::format("t{}", rng.below(20)));
    for (std::size_t i = rng.below(30); i > 0; --i) b.push_back(fmt::format("t{}", rng.below(20)));
    EXPECT_DOUBLE_EQ(jaccard(a, b), jaccard_oracle(a, b));
  }
}

TEST(DedupConfig, Validation) {
  EXPECT_THROW((DedupConfig{0, 0.99}.validate()), vulnpipe::UsageError);
  EXPECT_THROW((DedupConfig{30, 1.01}.validate()), vulnpipe::UsageError);
  EXPECT_THROW((DedupConfig{30, -0.1}.validate()), vulnpipe::UsageError);
  EXPECT_NO_THROW((DedupConfig{1, 0.0}.validate()));
}

TEST(WindowCandidates, IdenticalFunctions) {
  const Tokens t = seq("x", 40);
  const std::vector<FunctionSpan> corpus{span_of(t), span_of(t)};
  EXPECT_EQ(window_candidates(corpus, {}), (std::set<SpanPair>{{0, 1}}));
}

TEST(WindowCandidates, NoSharedWindow) {
  Tokens a = seq("x", 40);
  Tokens b = a;
  b[10] = "other";  // every 30-window of b covers position 10
  const std::vector<FunctionSpan> corpus{span_of(a), span_of(b)};
  EXPECT_TRUE(window_candidates(corpus, {}).empty());
}

TEST(WindowCandidates, ShorterThanWindow) {
  const Tokens t = seq("x", 29);
  const std::vector<FunctionSpan> corpus{span_of(t), span_of(t)};
  EXPECT_TRUE(window_candidates(corpus, {}).empty());
}

TEST(WindowCandidates, ExactWindowLength) {
  const Tokens t = seq("x", 30);
  const std::vector<FunctionSpan> corpus{span_of(t), span_of(t)};
  EXPECT_EQ(window_candidates(corpus, {}).size(), 1U);
}

TEST(WindowCandidates, SelfRepetitionIsNotAPair) {
  Tokens t = seq("x", 30);
  const Tokens copy = t;
  t.insert(t.end(), copy.begin(), copy.end());
  const std::vector<FunctionSpan> corpus{span_of(t)};
  EXPECT_TRUE(window_candidates(corpus, {}).empty());
}

TEST(WindowCandidates, MatchesExhaustiveScan) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto corpus = vulnpipe::testing::make_dedup_corpus(seed, 80, 3, 3).spans;
    std::set<SpanPair> expected;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (std::size_t j = i + 1; j < corpus.size(); ++j) {
        if (shares_window(corpus[i].tokens, corpus[j].tokens, 30)) expected.insert({i, j});
      }
    }
    EXPECT_EQ(window_candidates(corpus, {}), expected) << "seed " << seed;
  }
}

TEST(DedupCorpus, UniqueFunctionsKept) {
  const std::vector<FunctionSpan> corpus{span_of(seq("a", 40)), span_of(seq("b", 40)),
                                         span_of(seq("c", 40))};
  const DedupReport r = dedup_corpus(corpus);
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(r.removed.empty());
}

TEST(DedupCorpus, KeepFirst) {
  const Tokens t = seq("x", 40);
  const std::vector<FunctionSpan> corpus{span_of(t, "f.php"), span_of(t, "f_copy.php")};
  const DedupReport r = dedup_corpus(corpus);
  EXPECT_EQ(r.kept, std::vector<std::size_t>{0});
  ASSERT_EQ(r.removed.size(), 1U);
  EXPECT_EQ(r.removed[0].removed, 1U);
  EXPECT_EQ(r.removed[0].representative, 0U);
  EXPECT_DOUBLE_EQ(r.removed[0].similarity, 1.0);
  EXPECT_EQ(kept_spans(r, corpus).size(), 1U);
}

TEST(DedupCorpus, BothConditionsRequired) {
  // Same token set but no shared 30-window: reversed order.
  Tokens a = seq("x", 40);
  Tokens b(a.rbegin(), a.rend());
  const std::vector<FunctionSpan> corpus{span_of(a), span_of(b)};
  EXPECT_TRUE(dedup_corpus(corpus).removed.empty());

  // Shared window but Jaccard below threshold.
  Tokens c = a;
  for (std::size_t i = 35; i < 40; ++i) c[i] = fmt::format("y{}", i);
  const std::vector<FunctionSpan> corpus2{span_of(a), span_of(c)};
  EXPECT_TRUE(dedup_corpus(corpus2).removed.empty());
}

TEST(DedupCorpus, ReportPartitionsInput) {
  const auto corpus = vulnpipe::testing::make_dedup_corpus(3).spans;
  const DedupReport r = dedup_corpus(corpus);
  std::vector<bool> seen(corpus.size(), false);
  for (auto k : r.kept) seen[k] = true;
  for (const auto& rm : r.removed) {
    EXPECT_FALSE(seen[rm.removed]);
    seen[rm.removed] = true;
  }
  EXPECT_EQ(std::count(seen.begin(), seen.end(), true), static_cast<long>(corpus.size()));
}

TEST(DedupCorpus, MatchesOracleAndPlantedPairs) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto gen = vulnpipe::testing::make_dedup_corpus(seed);
    const DedupReport r = dedup_corpus(gen.spans);
    const auto oracle = dedup_oracle(gen.spans, 30, 0.99);
    ASSERT_EQ(r.removed.size(), oracle.size()) << "seed " << seed;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(r.removed[i].removed, oracle[i].removed);
      EXPECT_EQ(r.removed[i].representative, oracle[i].representative);
    }
    ASSERT_EQ(r.removed.size(), gen.clones.size());
    for (std::size_t i = 0; i < gen.clones.size(); ++i) {
      const bool found = std::any_of(r.removed.begin(), r.removed.end(), [&](const Removal& rm) {
        return rm.removed == gen.clones[i].second && rm.representative == gen.clones[i].first;
      });
      EXPECT_TRUE(found) << "planted clone " << i;
    }
  }
}

TEST(DedupCorpus, SoundAndComplete) {
  const auto corpus = vulnpipe::testing::make_dedup_corpus(42).spans;
  const DedupReport r = dedup_corpus(corpus);
  for (const Removal& rm : r.removed) {
    EXPECT_GE(jaccard_oracle(corpus[rm.removed].tokens, corpus[rm.representative].tokens), 0.99);
    EXPECT_TRUE(shares_window(corpus[rm.removed].tokens, corpus[rm.representative].tokens, 30));
  }
  for (std::size_t i = 0; i < r.kept.size(); ++i) {
    for (std::size_t j = i + 1; j < r.kept.size(); ++j) {
      const auto& a = corpus[r.kept[i]].tokens;
      const auto& b = corpus[r.kept[j]].tokens;
      EXPECT_FALSE(shares_window(a, b, 30) && jaccard_oracle(a, b) >= 0.99);
    }
  }
}

TEST(DedupCorpus, Deterministic) {
  const auto corpus = vulnpipe::testing::make_dedup_corpus(9).spans;
  const DedupConfig cfg;
  EXPECT_EQ(report_to_json(dedup_corpus(corpus), corpus, cfg),
            report_to_json(dedup_corpus(corpus), corpus, cfg));
}

// Star-shaped clusters (one hub, independent leaves) cannot trigger the
// keep-first chain effect, so removal counts must be monotone there.
TEST(DedupCorpus, MonotoneInThresholdOnClusters) {
  vulnpipe::Rng rng(77);
  std::vector<FunctionSpan> corpus;
  for (int cluster = 0; cluster < 12; ++cluster) {
    const Tokens hub = seq(fmt::format("c{}_", cluster), 100);
    corpus.push_back(span_of(hub));
    for (int leaf = 0; leaf < 4; ++leaf) {
      Tokens t = hub;
      const std::size_t edits = rng.below(6);
      for (std::size_t e = 0; e < edits; ++e) t[99 - e] = fmt::format("l{}_{}_{}", cluster, leaf, e);
      corpus.push_back(span_of(t));
    }
  }
  std::size_t previous = corpus.size();
  for (double th : {0.90, 0.93, 0.95, 0.97, 0.98, 0.99, 1.0}) {
    const std::size_t removed = dedup_corpus(corpus, {30, th}).removed.size();
    EXPECT_LE(removed, previous) << "threshold " << th;
    previous = removed;
  }
}

TEST(DedupReportJson, Fields) {
  const Tokens t = seq("x", 40);
  std::vector<FunctionSpan> corpus{span_of(t, "a.php"), span_of(t, "b.php")};
  corpus[0].start_line = 3;
  corpus[1].start_line = 9;
  const auto j = report_to_json(dedup_corpus(corpus), corpus, {});
  EXPECT_EQ(j.at("input_count"), 2);
  EXPECT_EQ(j.at("kept_count"), 1);
  EXPECT_EQ(j.at("removed_count"), 1);
  EXPECT_EQ(j.at("config").at("window_size"), 30);
  EXPECT_EQ(j.at("removed")[0].at("jaccard"), 1.0);
}

}  // namespace
