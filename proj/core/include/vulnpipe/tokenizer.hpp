#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vulnpipe::extraction {

enum class TokenKind {
  Variable,    // $name
  Identifier,  // names and keywords
  Number,
  String,      // quoted strings, heredoc and nowdoc bodies, verbatim
  Operator,    // punctuation and operators
  OpenTag,     // <?php, <?=
  CloseTag,    // ?>
  InlineHtml,  // text between ?> and the next open tag, trimmed
  Unknown,     // anything the lexer cannot classify (one code point)
};

struct Token {
  TokenKind kind;
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

// PHP lexer. Total: every input produces a token stream; comments and
// whitespace are dropped, everything else is kept verbatim.
std::vector<Token> lex(std::string_view body);

// Token texts only.
std::vector<std::string> tokenize(std::string_view body);

}  // namespace vulnpipe::extraction
