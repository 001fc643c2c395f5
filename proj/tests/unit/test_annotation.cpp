#include <gtest/gtest.h>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/io.hpp>

#include "generators.hpp"
#include "oracles.hpp"

namespace {

using namespace vulnpipe::annotation;
using vulnpipe::extraction::FunctionSpan;
using vulnpipe::testing::fixtures_dir;

std::string report(const char* name) {
  return vulnpipe::io::read_file(fixtures_dir() / "reports" / name);
}

FunctionSpan fn(std::string path, int start, int end) {
  FunctionSpan s;
  s.source.path = std::move(path);
  s.start_line = start;
  s.end_line = end;
  return s;
}

Finding finding(Severity sev, std::string path, int start, int end) {
  return {tool_of(sev), "r", sev, std::move(path), start, end};
}

TEST(Severity, KeysRoundTrip) {
  for (Tool tool : {Tool::Semgrep, Tool::SonarQube}) {
    for (Severity s : taxonomy(tool)) {
      EXPECT_EQ(parse_severity_key(severity_key(s)), s);
      EXPECT_EQ(tool_of(s), tool);
    }
  }
  EXPECT_EQ(severity_key(Severity::SonarMajor), "sonarqube:Major");
  EXPECT_EQ(parse_level(Tool::Semgrep, "ERROR"), Severity::SemgrepError);
  EXPECT_FALSE(parse_level(Tool::Semgrep, "Minor").has_value());
  EXPECT_FALSE(parse_severity_key("semgrep").has_value());
}

TEST(SeverityFilter, Defaults) {
  const auto f = SeverityFilter::defaults();
  EXPECT_EQ(f.qualifying(), (std::set<Severity>{Severity::SonarMajor, Severity::SonarCritical,
                                                 Severity::SonarBlocker, Severity::SemgrepError}));
}

TEST(SeverityFilter, FromNamesRejectsForeignLevels) {
  EXPECT_THROW(SeverityFilter::from_names({{Tool::Semgrep, {"Minor"}}}), vulnpipe::UsageError);
  const auto f = SeverityFilter::from_names({{Tool::Semgrep, {"warning", "Error"}}});
  EXPECT_TRUE(f.qualifies(Severity::SemgrepWarning));
  EXPECT_FALSE(f.qualifies(Severity::SonarMajor));
}

TEST(ParseReport, EmptyResults) {
  EXPECT_TRUE(parse_report(Tool::Semgrep, R"({"results": []})").findings.empty());
  EXPECT_TRUE(parse_report(Tool::SonarQube, R"({"issues": []})").findings.empty());
}

TEST(ParseReport, SemgrepFixture) {
  const ParsedReport r = parse_report(Tool::Semgrep, report("semgrep.json"));
  const std::vector<Finding> expected{
      {Tool::Semgrep, "php.lang.security.injection.tainted-sql-string.tainted-sql-string",
       Severity::SemgrepError, "src/db.php", 10, 10},
      {Tool::Semgrep, "php.lang.best-practice.password-hash-default", Severity::SemgrepInfo,
       "src/auth.php", 7, 7},
      {Tool::Semgrep, "php.lang.security.closure-echo", Severity::SemgrepError, "lib/util.php", 9, 9},
  };
  EXPECT_EQ(r.findings, expected);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(ParseReport, SonarFixture) {
  const ParsedReport r = parse_report(Tool::SonarQube, report("sonarqube.json"));
  const std::vector<Finding> expected{
      {Tool::SonarQube, "php:S2077", Severity::SonarCritical, "src/db.php", 10, 10},
      {Tool::SonarQube, "php:S1172", Severity::SonarMinor, "src/db.php", 17, 17},
      {Tool::SonarQube, "php:S5131", Severity::SonarMajor, "lib/util.php", 5, 5},
  };
  EXPECT_EQ(r.findings, expected);
  ASSERT_EQ(r.warnings.size(), 1U);  // file-level issue without a line
  EXPECT_EQ(r.warnings[0].path, "src/auth.php");
}

TEST(ParseReport, SonarGenericImport) {
  const ParsedReport r = parse_report(Tool::SonarQube, report("sonarqube_generic.json"));
  ASSERT_EQ(r.findings.size(), 1U);
  EXPECT_EQ(r.findings[0], (Finding{Tool::SonarQube, "php:S2077", Severity::SonarBlocker,
                                    "src/db.php", 10, 11}));
}

TEST(ParseReport, Sarif) {
  const ParsedReport r = parse_report(Tool::Semgrep, report("semgrep.sarif"));
  ASSERT_EQ(r.findings.size(), 2U);
  EXPECT_EQ(r.findings[0].severity, Severity::SemgrepError);
  EXPECT_EQ(r.findings[0].path, "src/db.php");
  EXPECT_EQ(r.findings[1].severity, Severity::SemgrepInfo);
  EXPECT_EQ(r.findings[1].start_line, 7);
  EXPECT_EQ(r.findings[1].end_line, 7);
}

TEST(ParseReport, MissingPathStrictVersusLenient) {
  EXPECT_THROW(parse_report(Tool::Semgrep, report("semgrep_missing_path.json")),
               vulnpipe::DataError);
  const ParsedReport r =
      parse_report(Tool::Semgrep, report("semgrep_missing_path.json"), {.strict = false, .strip_prefix = {}});
  ASSERT_EQ(r.findings.size(), 1U);
  EXPECT_EQ(r.findings[0].severity, Severity::SemgrepWarning);
  EXPECT_EQ(r.warnings.size(), 1U);
}

TEST(ParseReport, UnknownSeverityNamesValue) {
  try {
    parse_report(Tool::Semgrep, report("semgrep_bad_severity.json"));
    FAIL() << "expected DataError";
  } catch (const vulnpipe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'CRITICAL'"), std::string::npos);
  }
}

TEST(ParseReport, MalformedJsonNamesOffset) {
  try {
    parse_report(Tool::Semgrep, R"({"results": [)");
    FAIL() << "expected DataError";
  } catch (const vulnpipe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
  EXPECT_THROW(parse_report(Tool::Semgrep, R"({"issues": []})"), vulnpipe::DataError);
}

TEST(NormalizePath, Variants) {
  EXPECT_EQ(normalize_path("./src//a.php"), "src/a.php");
  EXPECT_EQ(normalize_path("src\\win\\a.php"), "src/win/a.php");
  EXPECT_EQ(normalize_path("file:///ci/work/src/a.php", "/ci/work"), "src/a.php");
  EXPECT_EQ(normalize_path("/ci/work/src/a.php", "/ci/work/"), "src/a.php");
  EXPECT_EQ(normalize_path("other/a.php", "/ci/work"), "other/a.php");
}

TEST(Fuse, SingleQualifyingFinding) {
  const std::vector<FunctionSpan> fns{fn("a.php", 3, 10)};
  const std::vector<Finding> fs{finding(Severity::SemgrepError, "a.php", 5, 5)};
  const auto r = fuse_annotations(fns, fs, SeverityFilter::defaults());
  EXPECT_TRUE(r.functions[0].vulnerable);
  EXPECT_EQ(r.functions[0].counts.at(Severity::SemgrepError), 1);
}

TEST(Fuse, TwoFindingsOneVulnerableFunction) {
  const std::vector<FunctionSpan> fns{fn("a.php", 3, 10), fn("a.php", 12, 20)};
  const std::vector<Finding> fs{finding(Severity::SonarMajor, "a.php", 4, 4),
                                finding(Severity::SonarBlocker, "a.php", 9, 9)};
  const auto r = fuse_annotations(fns, fs, SeverityFilter::defaults());
  EXPECT_TRUE(r.functions[0].vulnerable);
  EXPECT_FALSE(r.functions[1].vulnerable);
  EXPECT_EQ(r.functions[0].counts.at(Severity::SonarMajor) +
                r.functions[0].counts.at(Severity::SonarBlocker),
            2);
}

TEST(Fuse, ExcludedSeverityCountedButNotVulnerable) {
  const std::vector<FunctionSpan> fns{fn("a.php", 1, 9)};
  const std::vector<Finding> fs{finding(Severity::SemgrepInfo, "a.php", 2, 2),
                                finding(Severity::SonarMinor, "a.php", 3, 3),
                                finding(Severity::SemgrepWarning, "a.php", 4, 4),
                                finding(Severity::SonarInfo, "a.php", 5, 5)};
  const auto r = fuse_annotations(fns, fs, SeverityFilter::defaults());
  EXPECT_FALSE(r.functions[0].vulnerable);
  EXPECT_EQ(r.functions[0].counts.size(), 4U);
}

TEST(Fuse, SpanningFindingLabelsAllAndOrphansKept) {
  const std::vector<FunctionSpan> fns{fn("a.php", 1, 5), fn("a.php", 6, 9), fn("b.php", 1, 9)};
  const std::vector<Finding> fs{finding(Severity::SemgrepError, "a.php", 5, 6),
                                finding(Severity::SemgrepError, "a.php", 20, 21),
                                finding(Severity::SemgrepError, "c.php", 1, 1)};
  const auto r = fuse_annotations(fns, fs, SeverityFilter::defaults());
  EXPECT_TRUE(r.functions[0].vulnerable);
  EXPECT_TRUE(r.functions[1].vulnerable);
  EXPECT_FALSE(r.functions[2].vulnerable);
  EXPECT_EQ(r.orphans.size(), 2U);
}

TEST(Fuse, EmptyFindings) {
  const auto corpus = vulnpipe::testing::make_fusion_corpus(1);
  const auto r = fuse_annotations(corpus.functions, {}, SeverityFilter::defaults());
  for (const auto& f : r.functions) {
    EXPECT_FALSE(f.vulnerable);
    EXPECT_TRUE(f.counts.empty());
  }
}

TEST(Fuse, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto corpus = vulnpipe::testing::make_fusion_corpus(seed);
    const auto filter = SeverityFilter::defaults();
    const auto r = fuse_annotations(corpus.functions, corpus.findings, filter);
    const auto oracle =
        vulnpipe::testing::fusion_oracle(corpus.functions, corpus.findings, filter.qualifying());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(r.functions[i].counts, oracle[i].counts);
      EXPECT_EQ(r.functions[i].vulnerable, oracle[i].vulnerable);
    }
  }
}

TEST(Fuse, VulnerableIsMonotone) {
  auto corpus = vulnpipe::testing::make_fusion_corpus(7);
  const auto before = fuse_annotations(corpus.functions, corpus.findings, SeverityFilter::defaults());
  corpus.findings.push_back(finding(Severity::SonarCritical, corpus.functions[0].source.path,
                                    corpus.functions[0].start_line, corpus.functions[0].start_line));
  const auto after = fuse_annotations(corpus.functions, corpus.findings, SeverityFilter::defaults());
  for (std::size_t i = 0; i < before.functions.size(); ++i) {
    if (before.functions[i].vulnerable) {
      EXPECT_TRUE(after.functions[i].vulnerable);
    }
  }
  EXPECT_TRUE(after.functions[0].vulnerable);
}

}  // namespace
