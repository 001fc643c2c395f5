#include <gtest/gtest.h>

#include <fstream>

#include <vulnpipe/io.hpp>
#include <vulnpipe/review.hpp>
#include <vulnpipe/scoring.hpp>

#include "generators.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vulnpipe::review;
using vulnpipe::io::read_file;
using vulnpipe::testing::fixtures_dir;
using vulnpipe::testing::TempDir;

// Records every request and answers with a fixed score.
class RecordingScorer final : public vulnpipe::scoring::Scorer {
 public:
  explicit RecordingScorer(double score) : score_(score) {}
  vulnpipe::scoring::ScoreResponse score_batch(const vulnpipe::scoring::ScoreRequest& req) override {
    requests.push_back(req);
    vulnpipe::scoring::ScoreResponse resp;
    for (auto it = req.items.rbegin(); it != req.items.rend(); ++it) resp.items.push_back({it->id, score_});
    return resp;
  }
  std::vector<vulnpipe::scoring::ScoreRequest> requests;

 private:
  double score_;
};

class FailingScorer final : public vulnpipe::scoring::Scorer {
 public:
  vulnpipe::scoring::ScoreResponse score_batch(const vulnpipe::scoring::ScoreRequest&) override {
    throw vulnpipe::TransportError("connection refused");
  }
};

const char* kThreeFunctions =
    "<?php\n"                 // 1
    "function one() {\n"      // 2
    "  return 1;\n"           // 3
    "}\n"                     // 4
    "\n"                      // 5
    "function two() {\n"      // 6
    "  return 2;\n"           // 7
    "}\n"                     // 8
    "\n"                      // 9
    "function three() {\n"    // 10
    "  return 3;\n"           // 11
    "}\n";                    // 12

TEST(ChangedFunctions, ChangeInsideSecondFunction) {
  TempDir dir;
  std::ofstream(dir / "f.php") << kThreeFunctions;
  const auto sel = changed_functions(dir.path(), {{{"f.php", {7}}}});
  ASSERT_EQ(sel.spans.size(), 1U);
  EXPECT_EQ(sel.spans[0].name, "two");
}

TEST(ChangedFunctions, WhitespaceBetweenFunctions) {
  TempDir dir;
  std::ofstream(dir / "f.php") << kThreeFunctions;
  EXPECT_TRUE(changed_functions(dir.path(), {{{"f.php", {5, 9}}}}).spans.empty());
}

TEST(ChangedFunctions, MissingFileAndOtherExtensions) {
  TempDir dir;
  const auto sel = changed_functions(dir.path(), {{{"gone.php", {1}}, {"README.md", {1}}}});
  EXPECT_TRUE(sel.spans.empty());
  ASSERT_EQ(sel.warnings.size(), 1U);
  EXPECT_EQ(sel.warnings[0].path, "gone.php");
}

TEST(ChangedFunctions, ToyRepoMatchesOverlapOracle) {
  const fs::path repo = fixtures_dir() / "repo";
  const ChangedLines changes = parse_unified_diff(read_file(fixtures_dir() / "pr.diff"));
  const auto sel = changed_functions(repo, changes);

  const auto files = vulnpipe::extraction::enumerate_files(repo, {});
  std::vector<std::string> expected;
  for (const auto& f : files.files) {
    for (const auto& s : vulnpipe::extraction::extract_functions(f)) {
      auto it = changes.files.find(s.source.path);
      if (it == changes.files.end()) continue;
      for (int line : it->second) {
        if (line >= s.start_line && line <= s.end_line) {
          expected.push_back(s.source.path + ":" + *s.name);
          break;
        }
      }
    }
  }
  std::vector<std::string> got;
  for (const auto& s : sel.spans) got.push_back(s.source.path + ":" + *s.name);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got, (std::vector<std::string>{"src/auth.php:logout", "src/db.php:query"}));
}

TEST(RunReview, NoChangedFunctionsSkipsScorer) {
  RecordingScorer scorer(0.9);
  const auto run = run_review(fixtures_dir() / "repo", "", scorer);
  EXPECT_TRUE(run.findings.empty());
  EXPECT_TRUE(scorer.requests.empty());
}

TEST(RunReview, OneChangedFunctionFlagged) {
  TempDir dir;
  std::ofstream(dir / "f.php") << kThreeFunctions;
  RecordingScorer scorer(0.9);
  const auto run = run_review(dir.path(), "--- a/f.php\n+++ b/f.php\n@@ -11 +11 @@\n-x\n+  return 3;\n",
                              scorer, {.threshold = 0.5, .extraction = {}});
  ASSERT_EQ(run.findings.size(), 1U);
  EXPECT_EQ(run.findings[0].function, "three");
  EXPECT_TRUE(run.findings[0].flagged);
  EXPECT_EQ(run.findings[0].score, 0.9);
  ASSERT_EQ(scorer.requests.size(), 1U);
  EXPECT_EQ(scorer.requests[0].items.size(), 1U);
}

TEST(RunReview, ThresholdIsInclusive) {
  TempDir dir;
  std::ofstream(dir / "f.php") << kThreeFunctions;
  RecordingScorer scorer(0.5);
  const auto run =
      run_review(dir.path(), "--- a/f.php\n+++ b/f.php\n@@ -3 +3 @@\n-x\n+  return 1;\n", scorer);
  ASSERT_EQ(run.findings.size(), 1U);
  EXPECT_TRUE(run.findings[0].flagged);
}

TEST(RunReview, ScorerErrorsPropagate) {
  FailingScorer scorer;
  EXPECT_THROW(run_review(fixtures_dir() / "repo", read_file(fixtures_dir() / "pr.diff"), scorer),
               vulnpipe::TransportError);
}

TEST(RunReview, ToyRepoGolden) {
  vulnpipe::scoring::StubScorer stub;
  const auto run = run_review(fixtures_dir() / "repo", read_file(fixtures_dir() / "pr.diff"), stub);
  const auto rendered = render_review(run.findings);
  EXPECT_EQ(rendered.json, read_file(fixtures_dir() / "golden/review.json"));
  EXPECT_EQ(rendered.markdown, read_file(fixtures_dir() / "golden/review.md"));
}

TEST(RunReview, DoesNotModifyCheckout) {
  TempDir dir;
  fs::copy(fixtures_dir() / "repo", dir.path(), fs::copy_options::recursive);
  std::map<std::string, std::string> before;
  for (const auto& e : fs::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file()) before[e.path().string()] = read_file(e.path());
  }
  vulnpipe::scoring::StubScorer stub;
  run_review(dir.path(), read_file(fixtures_dir() / "pr.diff"), stub);
  std::map<std::string, std::string> after;
  for (const auto& e : fs::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file()) after[e.path().string()] = read_file(e.path());
  }
  EXPECT_EQ(before, after);
}

TEST(RenderReview, Empty) {
  const auto r = render_review({});
  EXPECT_EQ(r.json, read_file(fixtures_dir() / "golden/review_empty.json"));
  EXPECT_EQ(r.markdown, read_file(fixtures_dir() / "golden/review_empty.md"));
}

TEST(RenderReview, OrderedByPathThenLine) {
  const std::vector<ReviewFinding> findings{
      {"b.php", "late", 40, 50, 0.9, true, 0.5},
      {"b.php", "early", 2, 9, 0.8, true, 0.5},
      {"a.php", std::nullopt, 7, 8, 0.1, false, 0.5},
  };
  const auto r = render_review(findings);
  const auto j = nlohmann::json::parse(r.json);
  ASSERT_EQ(j.size(), 3U);
  EXPECT_EQ(j[0]["path"], "a.php");
  EXPECT_TRUE(j[0]["function"].is_null());
  EXPECT_EQ(j[1]["function"], "early");
  EXPECT_EQ(j[2]["function"], "late");
  EXPECT_LT(r.markdown.find("`early`"), r.markdown.find("`late`"));
  EXPECT_EQ(r.markdown.find("a.php"), std::string::npos);  // not flagged
}

TEST(RenderReview, ScoredButNothingFlagged) {
  const std::vector<ReviewFinding> findings{{"a.php", "f", 1, 3, 0.2, false, 0.5}};
  const auto md = render_review(findings).markdown;
  EXPECT_NE(md.find("No flagged functions."), std::string::npos);
  EXPECT_NE(md.find("1 changed function(s) scored, 0 flagged"), std::string::npos);
}

}  // namespace
