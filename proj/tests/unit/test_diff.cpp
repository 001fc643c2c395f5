#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <vulnpipe/diff.hpp>
#include <vulnpipe/error.hpp>
#include <vulnpipe/io.hpp>

#include "generators.hpp"

namespace {

using vulnpipe::review::ChangedLines;
using vulnpipe::review::parse_unified_diff;
using Lines = std::set<int>;

TEST(Diff, Empty) { EXPECT_TRUE(parse_unified_diff("").empty()); }

TEST(Diff, SingleAddition) {
  const auto c = parse_unified_diff(
      "--- a/f.php\n+++ b/f.php\n@@ -1,3 +1,4 @@\n a\n+b\n c\n d\n");
  EXPECT_EQ(c.files, (std::map<std::string, Lines>{{"f.php", {2}}}));
}

TEST(Diff, TwoFileGolden) {
  const auto fx = vulnpipe::testing::fixtures_dir();
  const auto c = parse_unified_diff(vulnpipe::io::read_file(fx / "pr.diff"));
  const auto golden = nlohmann::json::parse(vulnpipe::io::read_file(fx / "golden/pr_changed_lines.json"));
  std::map<std::string, Lines> expected;
  for (const auto& [path, lines] : golden.items()) expected[path] = lines.get<Lines>();
  EXPECT_EQ(c.files, expected);
}

TEST(Diff, ModificationRecordsNewLines) {
  const auto c = parse_unified_diff(
      "--- a/f.php\n+++ b/f.php\n@@ -10,3 +10,3 @@\n x\n-old\n+new\n y\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{11});
}

TEST(Diff, DeletionOnlyAnchorsToNewPosition) {
  // Removal between new lines 5 and 6: recorded at 5.
  auto c = parse_unified_diff("--- a/f.php\n+++ b/f.php\n@@ -4,4 +4,2 @@\n a\n b\n-c\n-d\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{5});
  // Zero-context hunk whose new side is empty: the anchor c itself.
  c = parse_unified_diff("--- a/f.php\n+++ b/f.php\n@@ -8,2 +7,0 @@\n-x\n-y\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{7});
  // Removal at the top of a file.
  c = parse_unified_diff("--- a/f.php\n+++ b/f.php\n@@ -1,2 +1,1 @@\n-x\n y\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{1});
}

TEST(Diff, OmittedCountsDefaultToOne) {
  const auto c = parse_unified_diff("--- a/f.php\n+++ b/f.php\n@@ -3 +3 @@\n-a\n+b\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{3});
}

TEST(Diff, MultipleHunks) {
  const auto c = parse_unified_diff(
      "--- a/f.php\n+++ b/f.php\n"
      "@@ -1,2 +1,3 @@\n+x\n a\n b\n"
      "@@ -20,2 +21,3 @@ function g()\n c\n+y\n d\n");
  EXPECT_EQ(c.files.at("f.php"), (Lines{1, 22}));
}

TEST(Diff, DeletedFileSkippedNewFileKept) {
  const auto c = parse_unified_diff(
      "diff --git a/gone.php b/gone.php\ndeleted file mode 100644\n--- a/gone.php\n+++ /dev/null\n"
      "@@ -1,2 +0,0 @@\n-a\n-b\n"
      "diff --git a/new.php b/new.php\nnew file mode 100644\n--- /dev/null\n+++ b/new.php\n"
      "@@ -0,0 +1,2 @@\n+a\n+b\n");
  EXPECT_FALSE(c.files.contains("gone.php"));
  EXPECT_EQ(c.files.at("new.php"), (Lines{1, 2}));
}

TEST(Diff, RenameMapsToNewPath) {
  const auto c = parse_unified_diff(
      "diff --git a/old.php b/dir/new.php\nsimilarity index 90%\nrename from old.php\n"
      "rename to dir/new.php\n--- a/old.php\n+++ b/dir/new.php\n@@ -1,1 +1,1 @@\n-a\n+b\n");
  EXPECT_EQ(c.files, (std::map<std::string, Lines>{{"dir/new.php", {1}}}));
}

TEST(Diff, NoNewlineMarkerIgnored) {
  const auto c = parse_unified_diff(
      "--- a/f.php\n+++ b/f.php\n@@ -1 +1 @@\n-a\n\\ No newline at end of file\n+b\n"
      "\\ No newline at end of file\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{1});
}

TEST(Diff, TimestampsAndCrLf) {
  const auto c = parse_unified_diff(
      "--- f.php\t2024-01-01 10:00:00\r\n+++ f.php\t2024-01-02 10:00:00\r\n@@ -1,1 +1,2 @@\r\n a\r\n+b\r\n");
  EXPECT_EQ(c.files.at("f.php"), Lines{2});
}

void expect_line(std::string_view diff, int line) {
  try {
    parse_unified_diff(diff);
    FAIL() << "expected DataError";
  } catch (const vulnpipe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos)
        << e.what();
  }
}

TEST(Diff, MalformedHeaderNamesLine) {
  expect_line("--- a/f.php\n+++ b/f.php\n@@ -1,x +1 @@\n a\n", 3);
  expect_line("--- a/f.php\n+++ b/f.php\n@@ nonsense\n", 3);
  expect_line("@@ -1 +1 @@\n-a\n+b\n", 1);  // hunk before any file header
}

TEST(Diff, TruncatedHunk) {
  expect_line("--- a/f.php\n+++ b/f.php\n@@ -1,3 +1,3 @@\n a\n", 4);
}

}  // namespace
