#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <vulnpipe/dataset.hpp>
#include <vulnpipe/io.hpp>
#include <vulnpipe/metrics.hpp>
#include <vulnpipe/serialization.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "generators.hpp"

namespace {

namespace fs = std::filesystem;
using vulnpipe::io::read_file;
using vulnpipe::testing::fixtures_dir;
using vulnpipe::testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vulnpipe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = vulnpipe::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& rel) { return (fixtures_dir() / rel).string(); }

TEST(Cli, HelpForEverySubcommand) {
  for (std::vector<std::string> cmd :
       {std::vector<std::string>{"--help"}, {"extract", "--help"}, {"dedup", "--help"},
        {"annotate", "--help"}, {"dataset", "--help"}, {"dataset", "build", "--help"},
        {"dataset", "validate", "--help"}, {"split", "--help"}, {"balance", "--help"},
        {"eval", "--help"}, {"review", "--help"}}) {
    const Result r = cli(cmd);
    EXPECT_EQ(r.code, 0) << cmd.front();
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << cmd.front();
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, vulnpipe::cli::kUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, vulnpipe::cli::kUsage);
  EXPECT_EQ(cli({"extract", "--root", "x"}).code, vulnpipe::cli::kUsage);  // --out missing
  EXPECT_EQ(cli({"dedup", "--in", "x", "--out", "y", "--window", "0"}).code, vulnpipe::cli::kUsage);
}

TEST(Cli, IoAndDataErrors) {
  TempDir dir;
  EXPECT_EQ(cli({"extract", "--root", "/nonexistent/vp", "--out", (dir / "f.jsonl").string()}).code,
            vulnpipe::cli::kIo);
  vulnpipe::io::write_file(dir / "fns.jsonl", "");
  const Result bad = cli({"annotate", "--functions", (dir / "fns.jsonl").string(), "--semgrep",
                          fx("reports/semgrep_bad_severity.json"), "--out",
                          (dir / "ann.jsonl").string()});
  EXPECT_EQ(bad.code, vulnpipe::cli::kData);
  EXPECT_NE(bad.err.find("CRITICAL"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "ann.jsonl"));
}

TEST(Cli, ExtractToyRepo) {
  TempDir dir;
  const Result r = cli({"extract", "--root", fx("repo"), "--out", (dir / "fns.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(vulnpipe::serialization::read_spans(read_file(dir / "fns.jsonl")).size(), 7U);
}

TEST(Cli, EvalMatchesMetrics) {
  TempDir dir;
  vulnpipe::io::write_file(dir / "cells.json", R"({"cells": [
    {"trained_on": "GOD", "tested_on": "TOD", "strategy": "NB",
     "labels": [1, 1, 1, 1, 0], "predictions": [1, 1, 0, 0, 1]}]})");
  const Result r = cli({"eval", "--cells", (dir / "cells.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto& row = j.at("cells").at(0);
  EXPECT_DOUBLE_EQ(row.at("precision").get<double>(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(row.at("recall").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(row.at("f1").get<double>(), 4.0 / 7.0);
}

TEST(Cli, ReviewGoldensAndExitCode) {
  TempDir dir;
  const Result r = cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff"), "--scorer", "stub",
                        "--out-json", (dir / "r.json").string(), "--out-md",
                        (dir / "r.md").string()});
  EXPECT_EQ(r.code, vulnpipe::cli::kFlagged) << r.err;
  EXPECT_EQ(read_file(dir / "r.json"), read_file(fx("golden/review.json")));
  EXPECT_EQ(read_file(dir / "r.md"), read_file(fx("golden/review.md")));
}

TEST(Cli, ReviewBelowThresholdExitsZero) {
  const Result r = cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff"), "--scorer", "stub",
                        "--threshold", "0.99"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("No flagged functions."), std::string::npos);
}

TEST(Cli, ReviewScorerResolution) {
  ::unsetenv("VULNPIPE_SCORER_URL");
  EXPECT_EQ(cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff")}).code,
            vulnpipe::cli::kUsage);
  ::setenv("VULNPIPE_SCORER_URL", "stub", 1);
  EXPECT_EQ(cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff")}).code,
            vulnpipe::cli::kFlagged);
  ::setenv("VULNPIPE_SCORER_URL", "http://127.0.0.1:1", 1);
  EXPECT_EQ(cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff"), "--scorer", "stub"}).code,
            vulnpipe::cli::kFlagged);
  ::unsetenv("VULNPIPE_SCORER_URL");
}

TEST(Cli, ReviewUnreachableScorer) {
  const Result r = cli({"review", "--repo", fx("repo"), "--diff", fx("pr.diff"), "--scorer",
                        "http://127.0.0.1:1"});
  EXPECT_EQ(r.code, vulnpipe::cli::kUnavailable);
}

TEST(Cli, FullChain) {
  TempDir dir;
  vulnpipe::testing::write_php_tree(dir / "src", 5, 20);
  auto p = [&](const char* name) { return (dir / name).string(); };
  ASSERT_EQ(cli({"extract", "--root", p("src"), "--repo-url", "https://example.org/app.git",
                 "--commit", "0123abcd", "--out", p("fns.jsonl"), "--jobs", "3"})
                .code,
            0);
  ASSERT_EQ(cli({"dedup", "--in", p("fns.jsonl"), "--out", p("kept.jsonl"), "--report",
                 p("dedup.json")})
                .code,
            0);
  const auto dedup = nlohmann::json::parse(read_file(p("dedup.json")));
  EXPECT_GT(dedup.at("removed_count").get<int>(), 0);

  ASSERT_EQ(cli({"annotate", "--functions", p("kept.jsonl"), "--out", p("ann.jsonl"), "--orphans",
                 p("orphans.jsonl")})
                .code,
            0);
  ASSERT_EQ(cli({"dataset", "build", "--in", p("ann.jsonl"), "--out", p("data.csv")}).code, 0);
  const Result v = cli({"dataset", "validate", "--csv", p("data.csv")});
  EXPECT_EQ(v.code, 0) << v.out;
  ASSERT_EQ(cli({"split", "--csv", p("data.csv"), "--seed", "4", "--out", p("split.json")}).code, 0);
  const Result b = cli({"balance", "--csv", p("data.csv"), "--split", p("split.json"), "--strategy",
                        "NB", "--out", p("balance.json"), "--out-train", p("train.csv")});
  EXPECT_EQ(b.code, 0) << b.err;
  const auto records = vulnpipe::dataset::read_csv(read_file(p("data.csv")));
  const auto split = nlohmann::json::parse(read_file(p("split.json")));
  EXPECT_EQ(split.at("train").size() + split.at("val").size() + split.at("test").size(),
            records.size());
}

TEST(Cli, ConfigFileApplies) {
  TempDir dir;
  vulnpipe::io::write_file(dir / "vp.toml",
                           "seed = 9\n[review]\nthreshold = 0.99\n[scoring]\nscorer = \"stub\"\n");
  const Result r = cli({"--config", (dir / "vp.toml").string(), "review", "--repo", fx("repo"),
                        "--diff", fx("pr.diff")});
  EXPECT_EQ(r.code, 0) << r.err;
  const Result flagged = cli({"review", "--config", (dir / "vp.toml").string(), "--repo", fx("repo"),
                              "--diff", fx("pr.diff"), "--threshold", "0.5"});
  EXPECT_EQ(flagged.code, vulnpipe::cli::kFlagged) << flagged.err;
}

TEST(Cli, ConfigUnknownKeyRejected) {
  TempDir dir;
  vulnpipe::io::write_file(dir / "vp.toml", "[dedup]\nwindow = 12\n");
  const Result r = cli({"--config", (dir / "vp.toml").string(), "eval", "--cells", "x"});
  EXPECT_EQ(r.code, vulnpipe::cli::kUsage);
  EXPECT_NE(r.err.find("dedup.window"), std::string::npos);
}

TEST(Config, ParsesAllSections) {
  const auto cfg = vulnpipe::cli::parse_config(R"(
seed = 17

[extraction]
extensions = ["php", "inc"]
ignore = [".git", "tests"]
include_methods = false
nested_functions = true
repo_url = "https://example.org/a.git"
commit_id = "deadbeef"

[dedup]
window_size = 20
jaccard_threshold = 0.95

[annotation]
semgrep = ["Error", "Warning"]
strict = false
strip_prefix = "/ci/work"

[split]
train = 0.7
val = 0.15
test = 0.15

[balance]
strategy = "USC"
global_min = 4934

[scoring]
scorer = "http://127.0.0.1:8000"
batch_size = 16
timeout_ms = 2000
markers = ["VULN_MARKER", "EVIL"]

[review]
threshold = 0.7
)");
  EXPECT_EQ(cfg.seed, 17U);
  EXPECT_EQ(cfg.extraction.extensions, (std::vector<std::string>{"php", "inc"}));
  EXPECT_FALSE(cfg.extraction.include_methods);
  EXPECT_TRUE(cfg.extraction.nested_functions);
  EXPECT_EQ(cfg.provenance.commit_id, "deadbeef");
  EXPECT_EQ(cfg.dedup.window_size, 20U);
  EXPECT_DOUBLE_EQ(cfg.dedup.jaccard_threshold, 0.95);
  using vulnpipe::annotation::Severity;
  EXPECT_TRUE(cfg.severity.qualifies(Severity::SemgrepWarning));
  EXPECT_TRUE(cfg.severity.qualifies(Severity::SonarMajor));  // sonarqube keeps its defaults
  EXPECT_FALSE(cfg.parse.strict);
  EXPECT_EQ(cfg.parse.strip_prefix, "/ci/work");
  EXPECT_DOUBLE_EQ(cfg.ratios.train, 0.7);
  EXPECT_EQ(cfg.balance.kind, vulnpipe::dataset::BalanceKind::USC);
  EXPECT_EQ(cfg.balance.global_min, 4934U);
  EXPECT_EQ(cfg.scorer, "http://127.0.0.1:8000");
  EXPECT_EQ(cfg.batch_size, 16U);
  EXPECT_EQ(cfg.stub_markers.size(), 2U);
  EXPECT_DOUBLE_EQ(cfg.review_threshold, 0.7);
}

TEST(Config, Validation) {
  using vulnpipe::cli::parse_config;
  EXPECT_THROW(parse_config("[split]\ntrain = 0.9\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[balance]\nstrategy = \"USC\"\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[balance]\nstrategy = \"SMOTE\"\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[annotation]\nsemgrep = [\"Minor\"]\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[review]\nthreshold = 1.5\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[dedup]\nwindow_size = ten\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[extraction]\ninclude_methods = maybe\n"), vulnpipe::UsageError);
  EXPECT_THROW(parse_config("[mystery]\nx = 1\n"), vulnpipe::UsageError);
  EXPECT_NO_THROW(parse_config(""));
}

}  // namespace
