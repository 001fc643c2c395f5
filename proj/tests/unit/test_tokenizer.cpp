#include <gtest/gtest.h>

#include <vulnpipe/tokenizer.hpp>

namespace {

using vulnpipe::extraction::lex;
using vulnpipe::extraction::TokenKind;
using vulnpipe::extraction::tokenize;
using Tokens = std::vector<std::string>;

TEST(Tokenizer, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenizer, ReturnStatement) {
  EXPECT_EQ(tokenize("return $a + 1;"), (Tokens{"return", "$a", "+", "1", ";"}));
}

TEST(Tokenizer, Deterministic) {
  const char* body = "function f($x) { return $x ?? 'd'; }";
  EXPECT_EQ(tokenize(body), tokenize(body));
}

TEST(Tokenizer, CommentsAndWhitespaceDropped) {
  EXPECT_EQ(tokenize("$a = 1; // trailing\n# hash\n/* block\n */ $b"),
            (Tokens{"$a", "=", "1", ";", "$b"}));
}

TEST(Tokenizer, CommentInsertionKeepsTokens) {
  const Tokens plain = tokenize("function f() {\n  $a = g(1);\n  return $a;\n}");
  const Tokens commented =
      tokenize("function f() {\n  // note\n  $a = g(1);\n  /* x */\n  return $a;\n}");
  EXPECT_EQ(plain, commented);
}

TEST(Tokenizer, AttributeIsNotAComment) {
  EXPECT_EQ(tokenize("#[Pure] function f() {}"),
            (Tokens{"#[", "Pure", "]", "function", "f", "(", ")", "{", "}"}));
}

TEST(Tokenizer, LongestOperatorMatch) {
  EXPECT_EQ(tokenize("$a ?\?= $b <=> $c === $d ?-> e"),
            (Tokens{"$a", "?\?=", "$b", "<=>", "$c", "===", "$d", "?->", "e"}));
  EXPECT_EQ(tokenize("$a**=2"), (Tokens{"$a", "**=", "2"}));
}

TEST(Tokenizer, StringsKeptVerbatim) {
  EXPECT_EQ(tokenize(R"($s = "a // not comment \" x"; $t = 'it\'s';)"),
            (Tokens{"$s", "=", R"("a // not comment \" x")", ";", "$t", "=", R"('it\'s')", ";"}));
}

TEST(Tokenizer, NumbersAndNames) {
  EXPECT_EQ(tokenize("\\App\\Foo::bar(0x1F, 1_000, 3.5e-2)"),
            (Tokens{"\\App\\Foo", "::", "bar", "(", "0x1F", ",", "1_000", ",", "3.5e-2", ")"}));
}

TEST(Tokenizer, HeredocIsOneToken) {
  const Tokens t = tokenize("$x = <<<EOT\nline $a\nEOT;\n$y");
  ASSERT_EQ(t.size(), 5U);
  EXPECT_EQ(t[2], "<<<EOT\nline $a\nEOT");
  EXPECT_EQ(t[3], ";");
}

TEST(Tokenizer, NowdocIsOneToken) {
  const Tokens t = tokenize("$x = <<<'RAW'\n  raw /* text */\n  RAW;");
  ASSERT_EQ(t.size(), 4U);
  EXPECT_EQ(t[2], "<<<'RAW'\n  raw /* text */\n  RAW");
}

TEST(Tokenizer, InlineHtmlAndTags) {
  const auto toks = lex("<?php echo 1; ?>\n<b>hi</b>\n<?= $x ?>");
  ASSERT_GE(toks.size(), 7U);
  EXPECT_EQ(toks[0].kind, TokenKind::OpenTag);
  EXPECT_EQ(toks[4].kind, TokenKind::CloseTag);
  EXPECT_EQ(toks[5].kind, TokenKind::InlineHtml);
  EXPECT_EQ(toks[5].text, "<b>hi</b>");
  EXPECT_EQ(toks[6].text, "<?=");
}

TEST(Tokenizer, TotalOnGarbage) {
  const std::string junk = "\x01\xff\xfe`@\"unterminated";
  const auto toks = lex(junk);
  EXPECT_FALSE(toks.empty());
  for (const auto& t : toks) EXPECT_FALSE(t.text.empty());
}

TEST(Tokenizer, Kinds) {
  const auto toks = lex("$v foo 42 'x' +");
  ASSERT_EQ(toks.size(), 5U);
  EXPECT_EQ(toks[0].kind, TokenKind::Variable);
  EXPECT_EQ(toks[1].kind, TokenKind::Identifier);
  EXPECT_EQ(toks[2].kind, TokenKind::Number);
  EXPECT_EQ(toks[3].kind, TokenKind::String);
  EXPECT_EQ(toks[4].kind, TokenKind::Operator);
}

}  // namespace
