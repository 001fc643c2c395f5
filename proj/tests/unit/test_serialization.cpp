#include <gtest/gtest.h>

#include <vulnpipe/error.hpp>
#include <vulnpipe/serialization.hpp>
#include <vulnpipe/tokenizer.hpp>

namespace {

using namespace vulnpipe::serialization;
using vulnpipe::annotation::Severity;

FunctionSpan sample_span() {
  FunctionSpan s;
  s.source = {"https://x/r.git", "abc123", "src/a.php"};
  s.name = "f";
  s.start_line = 3;
  s.end_line = 5;
  s.start_byte = 10;
  s.end_byte = 60;
  s.body = "function f() {\n  return \"\xc3\xa9\";\n}";
  s.tokens = vulnpipe::extraction::tokenize(s.body);
  return s;
}

TEST(Jsonl, SpansRoundTrip) {
  std::vector<FunctionSpan> spans{sample_span(), sample_span()};
  spans[1].name.reset();
  spans[1].start_line = 8;
  spans[1].end_line = 9;
  const std::string text = write_spans(spans);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(read_spans(text), spans);
  EXPECT_EQ(write_spans(read_spans(text)), text);
}

TEST(Jsonl, AnnotatedRoundTrip) {
  AnnotatedFunction fn{sample_span(), {{Severity::SonarMajor, 2}, {Severity::SemgrepInfo, 1}}, true};
  const std::vector<AnnotatedFunction> fns{fn};
  const std::string text = write_annotated(fns);
  EXPECT_NE(text.find("\"sonarqube:Major\":2"), std::string::npos);
  EXPECT_EQ(read_annotated(text), fns);
}

TEST(Jsonl, FindingsRoundTrip) {
  const std::vector<Finding> fs{
      {vulnpipe::annotation::Tool::Semgrep, "rule.x", Severity::SemgrepError, "a.php", 1, 2},
      {vulnpipe::annotation::Tool::SonarQube, "php:S1", Severity::SonarBlocker, "b.php", 4, 4}};
  EXPECT_EQ(read_findings(write_findings(fs)), fs);
}

TEST(Jsonl, BlankLinesSkipped) {
  const std::string line = write_spans(std::vector<FunctionSpan>{sample_span()});
  EXPECT_EQ(read_spans("\n" + line + "\n  \n").size(), 1U);
}

void expect_line_error(std::string_view text, const std::string& needle) {
  try {
    read_spans(text);
    FAIL() << "expected DataError";
  } catch (const vulnpipe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Jsonl, ErrorsNameLine) {
  const std::string good = write_spans(std::vector<FunctionSpan>{sample_span()});
  expect_line_error(good + "{\"path\": 1}\n", "line 2");
  expect_line_error(good + good + "{oops\n", "line 3");
  auto j = to_json(sample_span());
  j["end_line"] = 1;
  expect_line_error(j.dump() + "\n", "line range");
  j = to_json(sample_span());
  j.erase("body");
  expect_line_error(j.dump() + "\n", "'body'");
}

}  // namespace
