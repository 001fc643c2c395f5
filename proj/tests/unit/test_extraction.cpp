#include <gtest/gtest.h>

#include <fstream>

#include <vulnpipe/extraction.hpp>
#include <vulnpipe/io.hpp>
#include <vulnpipe/tokenizer.hpp>

#include "generators.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vulnpipe::extraction;
using vulnpipe::testing::fixtures_dir;
using vulnpipe::testing::TempDir;

SourceFile php(std::string content, std::string path = "t.php") {
  return {"", "", std::move(path), std::move(content)};
}

void touch(const fs::path& p, const std::string& text = "<?php\n") {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::vector<std::string> paths(const FileSet& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs.files) out.push_back(f.path);
  return out;
}

TEST(EnumerateFiles, EmptyDirectory) {
  TempDir dir;
  EXPECT_TRUE(enumerate_files(dir.path(), {}).files.empty());
}

TEST(EnumerateFiles, FiltersByExtension) {
  TempDir dir;
  touch(dir / "a.php");
  touch(dir / "b.txt");
  EXPECT_EQ(paths(enumerate_files(dir.path(), {})), std::vector<std::string>{"a.php"});
}

TEST(EnumerateFiles, ToyRepoLexicographic) {
  const FileSet set = enumerate_files(fixtures_dir() / "repo", {}, {"https://x/r.git", "abc"});
  EXPECT_EQ(paths(set), (std::vector<std::string>{"lib/util.php", "src/auth.php", "src/db.php"}));
  for (const auto& f : set.files) {
    EXPECT_EQ(f.repo_url, "https://x/r.git");
    EXPECT_EQ(f.commit_id, "abc");
  }
}

TEST(EnumerateFiles, IgnoredDirectoriesSkipped) {
  TempDir dir;
  touch(dir / "vendor/lib.php");
  touch(dir / "node_modules/x/y.php");
  touch(dir / "app/.git/hooks.php");
  touch(dir / "app/main.php");
  touch(dir / "app/Upper.PHP");
  ExtractionConfig cfg;
  cfg.ignore.push_back("*.gen.php");
  touch(dir / "app/z.gen.php");
  EXPECT_EQ(paths(enumerate_files(dir.path(), cfg)),
            (std::vector<std::string>{"app/Upper.PHP", "app/main.php"}));
}

TEST(EnumerateFiles, MissingRootIsIoError) {
  EXPECT_THROW(enumerate_files("/nonexistent/vulnpipe/root", {}), vulnpipe::IoError);
}

TEST(ExtractFunctions, NoFunctions) {
  EXPECT_TRUE(extract_functions(php("<?php\n$a = 1;\necho $a;\n")).empty());
}

TEST(ExtractFunctions, FreeFunctionAndMethod) {
  const std::string src =
      "<?php\n"                         // 1
      "function top($a) {\n"            // 2
      "  return $a;\n"                  // 3
      "}\n"                             // 4
      "class K {\n"                     // 5
      "  public function m() {\n"       // 6
      "    return 1;\n"                 // 7
      "  }\n"                           // 8
      "  abstract function n();\n"      // 9  no body, skipped
      "}\n";
  const auto spans = extract_functions(php(src));
  ASSERT_EQ(spans.size(), 2U);
  EXPECT_EQ(spans[0].name, "top");
  EXPECT_EQ(spans[0].start_line, 2);
  EXPECT_EQ(spans[0].end_line, 4);
  EXPECT_EQ(spans[1].name, "m");
  EXPECT_EQ(spans[1].start_line, 6);
  EXPECT_EQ(spans[1].end_line, 8);
}

TEST(ExtractFunctions, MethodsCanBeExcluded) {
  ExtractionConfig cfg;
  cfg.include_methods = false;
  const auto spans =
      extract_functions(php("<?php\nfunction a() {}\nclass K { function m() {} }\n"), cfg);
  ASSERT_EQ(spans.size(), 1U);
  EXPECT_EQ(spans[0].name, "a");
}

TEST(ExtractFunctions, NestedClosureStaysInOuterSpan) {
  const std::string src =
      "<?php\n"
      "function outer($xs) {\n"
      "  $f = function ($x) { return $x * 2; };\n"
      "  $g = fn($y) => $y + 1;\n"
      "  return array_map($f, $xs);\n"
      "}\n";
  const auto spans = extract_functions(php(src));
  ASSERT_EQ(spans.size(), 1U);
  EXPECT_EQ(spans[0].name, "outer");
  EXPECT_EQ(spans[0].start_line, 2);
  EXPECT_EQ(spans[0].end_line, 6);
  EXPECT_NE(spans[0].body.find("function ($x)"), std::string::npos);
}

TEST(ExtractFunctions, NestedExtractionWhenEnabled) {
  ExtractionConfig cfg;
  cfg.nested_functions = true;
  const std::string src =
      "<?php\nfunction outer() {\n  $f = function () { return 1; };\n  return $f;\n}\n";
  const auto spans = extract_functions(php(src), cfg);
  ASSERT_EQ(spans.size(), 2U);
  EXPECT_EQ(spans[0].name, "outer");
  EXPECT_FALSE(spans[1].name.has_value());
  EXPECT_EQ(spans[1].start_line, 3);
  EXPECT_LT(spans[0].start_byte, spans[1].start_byte);
}

TEST(ExtractFunctions, ToyRepoHandCounted) {
  struct Expected {
    const char* path;
    const char* name;
    int start, end;
  };
  const Expected expected[] = {
      {"lib/util.php", "sanitize", 3, 6}, {"src/auth.php", "login", 5, 13},
      {"src/auth.php", "logout", 15, 20}, {"src/auth.php", "start", 26, 31},
      {"src/db.php", "connect", 3, 6},    {"src/db.php", "query", 8, 13},
      {"src/db.php", "close", 15, 18},
  };
  const FileSet set = enumerate_files(fixtures_dir() / "repo", {});
  const ExtractionResult res = extract_all(set.files, {});
  EXPECT_TRUE(res.errors.empty());
  ASSERT_EQ(res.spans.size(), std::size(expected));
  for (std::size_t i = 0; i < res.spans.size(); ++i) {
    EXPECT_EQ(res.spans[i].source.path, expected[i].path);
    EXPECT_EQ(res.spans[i].name, expected[i].name);
    EXPECT_EQ(res.spans[i].start_line, expected[i].start);
    EXPECT_EQ(res.spans[i].end_line, expected[i].end);
  }
}

TEST(ExtractFunctions, SliceFidelityAndTokens) {
  const FileSet set = enumerate_files(fixtures_dir() / "repo", {});
  for (const SourceFile& f : set.files) {
    for (const FunctionSpan& s : extract_functions(f)) {
      ASSERT_LT(s.start_byte, s.end_byte);
      ASSERT_LE(s.start_line, s.end_line);
      EXPECT_EQ(f.content.substr(s.start_byte, s.end_byte - s.start_byte), s.body);
      EXPECT_EQ(s.tokens, tokenize(s.body));
    }
  }
}

TEST(ExtractFunctions, SyntaxErrorsTolerated) {
  const auto spans =
      extract_functions(php("<?php\nfunction ok() { return 1; }\nfunction broken( {\n"));
  ASSERT_FALSE(spans.empty());
  EXPECT_EQ(spans[0].name, "ok");
}

TEST(ExtractFunctions, InvalidUtf8KeepsOffsets) {
  std::string raw = "<?php\nfunction f() { return \"\xff\xfe\"; }\n";
  SourceFile f = php(sanitize_utf8(raw));
  EXPECT_EQ(f.content.size(), raw.size());
  const auto spans = extract_functions(f);
  ASSERT_EQ(spans.size(), 1U);
  EXPECT_EQ(spans[0].start_byte, raw.find("function"));
  EXPECT_NE(spans[0].body.find("\"??\""), std::string::npos);
}

TEST(SanitizeUtf8, KeepsValidSequences) {
  EXPECT_EQ(sanitize_utf8("a\xc3\xa9\xe6\xbc\xa2"), "a\xc3\xa9\xe6\xbc\xa2");
  EXPECT_EQ(sanitize_utf8("\xc3"), "?");
  EXPECT_EQ(sanitize_utf8("\xed\xa0\x80"), "???");  // surrogate
  EXPECT_EQ(sanitize_utf8("\xc0\xaf"), "??");       // overlong
}

TEST(ExtractFunctions, UnknownLanguage) {
  ExtractionConfig cfg;
  cfg.language = "cobol";
  EXPECT_THROW(extract_functions(php("<?php\n"), cfg), vulnpipe::DataError);
}

TEST(ExtractAll, ParallelMatchesSequential) {
  TempDir dir;
  vulnpipe::testing::write_php_tree(dir.path(), 11, 24);
  const FileSet set = enumerate_files(dir.path(), {});
  const auto seq = extract_all(set.files, {}, 1);
  const auto par = extract_all(set.files, {}, 4);
  EXPECT_EQ(seq.spans, par.spans);
  EXPECT_GT(seq.spans.size(), 24U);
}

TEST(LinesOverlap, ClosedIntervals) {
  static_assert(lines_overlap(1, 3, 3, 5));
  static_assert(!lines_overlap(1, 3, 4, 5));
  static_assert(lines_overlap(2, 2, 1, 9));
}

}  // namespace
