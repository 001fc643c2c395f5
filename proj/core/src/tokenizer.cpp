#include "vulnpipe/tokenizer.hpp"

#include <algorithm>
#include <cctype>

namespace vulnpipe::extraction {
namespace {

constexpr bool is_ident_start(unsigned char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

constexpr bool is_ident_char(unsigned char c) noexcept {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

constexpr bool is_digit(unsigned char c) noexcept { return c >= '0' && c <= '9'; }

constexpr bool is_space(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Longest first so a plain prefix scan yields the longest match.
constexpr std::string_view kOperators[] = {
    "**=", "...", "<=>", "===", "!==", "<<=", ">>=", "?\?=", "?->",
    "**",  "++",  "--",  "->",  "=>",  "::",  "==",  "!=",  "<>",
    "<=",  ">=",  "&&",  "||",  "??",  "+=",  "-=",  "*=",  "/=",
    ".=",  "%=",  "&=",  "|=",  "^=",  "<<",  ">>",  "#[",
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      if (html_mode_) {
        scan_inline_html();
      } else {
        scan_php();
      }
    }
    return std::move(out_);
  }

 private:
  [[nodiscard]] unsigned char peek(std::size_t ahead = 0) const noexcept {
    return pos_ + ahead < src_.size() ? static_cast<unsigned char>(src_[pos_ + ahead]) : '\0';
  }

  [[nodiscard]] bool starts_with(std::string_view s) const noexcept {
    return src_.substr(pos_).starts_with(s);
  }

  void emit(TokenKind kind, std::size_t begin) {
    out_.push_back({kind, std::string(src_.substr(begin, pos_ - begin))});
  }

  void scan_inline_html() {
    const std::size_t begin = pos_;
    std::size_t open = src_.find("<?", pos_);
    if (open == std::string_view::npos) open = src_.size();
    std::string_view html = src_.substr(begin, open - begin);
    const auto first = html.find_first_not_of(" \t\r\n\v\f");
    if (first != std::string_view::npos) {
      const auto last = html.find_last_not_of(" \t\r\n\v\f");
      out_.push_back({TokenKind::InlineHtml, std::string(html.substr(first, last - first + 1))});
    }
    pos_ = open;
    if (pos_ >= src_.size()) return;
    const std::size_t tag = pos_;
    if (starts_with("<?php")) {
      pos_ += 5;
    } else if (starts_with("<?=")) {
      pos_ += 3;
    } else {
      pos_ += 2;
    }
    emit(TokenKind::OpenTag, tag);
    html_mode_ = false;
  }

  void scan_php() {
    const unsigned char c = peek();
    if (is_space(c)) {
      ++pos_;
      return;
    }
    if (c == '#' && peek(1) != '[') return skip_line_comment();
    if (c == '/' && peek(1) == '/') return skip_line_comment();
    if (c == '/' && peek(1) == '*') return skip_block_comment();
    if (c == '?' && peek(1) == '>') {
      const std::size_t begin = pos_;
      pos_ += 2;
      emit(TokenKind::CloseTag, begin);
      html_mode_ = true;
      return;
    }
    if (c == '<' && starts_with("<?php")) {
      const std::size_t begin = pos_;
      pos_ += 5;
      return emit(TokenKind::OpenTag, begin);
    }
    if (c == '$' && is_ident_start(peek(1))) return scan_word(TokenKind::Variable, 1);
    if (is_ident_start(c) || (c == '\\' && is_ident_start(peek(1)))) {
      return scan_word(TokenKind::Identifier, 0);
    }
    if (is_digit(c) || (c == '.' && is_digit(peek(1)))) return scan_number();
    if (c == '\'' || c == '"' || c == '`') return scan_quoted(c);
    if (c == '<' && starts_with("<<<")) {
      if (scan_heredoc()) return;
    }
    for (std::string_view op : kOperators) {
      if (starts_with(op)) {
        const std::size_t begin = pos_;
        pos_ += op.size();
        return emit(TokenKind::Operator, begin);
      }
    }
    if (std::string_view("+-*/%=<>!&|^~.,;:?()[]{}@$\\").find(static_cast<char>(c)) !=
        std::string_view::npos) {
      const std::size_t begin = pos_++;
      return emit(TokenKind::Operator, begin);
    }
    scan_unknown();
  }

  void skip_line_comment() {
    while (pos_ < src_.size() && peek() != '\n') {
      if (peek() == '?' && peek(1) == '>') return;  // close tag ends a line comment
      ++pos_;
    }
  }

  void skip_block_comment() {
    const std::size_t end = src_.find("*/", pos_ + 2);
    pos_ = end == std::string_view::npos ? src_.size() : end + 2;
  }

  // Names may carry namespace separators: \Foo\Bar is one token.
  void scan_word(TokenKind kind, std::size_t prefix) {
    const std::size_t begin = pos_;
    pos_ += prefix;
    if (peek() == '\\') ++pos_;
    while (pos_ < src_.size()) {
      if (is_ident_char(peek())) {
        ++pos_;
      } else if (kind == TokenKind::Identifier && peek() == '\\' && is_ident_start(peek(1))) {
        ++pos_;
      } else {
        break;
      }
    }
    emit(kind, begin);
  }

  void scan_number() {
    const std::size_t begin = pos_;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'b' ||
                          peek(1) == 'B' || peek(1) == 'o' || peek(1) == 'O')) {
      pos_ += 2;
      while (pos_ < src_.size() && (std::isxdigit(peek()) || peek() == '_')) ++pos_;
      return emit(TokenKind::Number, begin);
    }
    auto digits = [this] {
      while (pos_ < src_.size() && (is_digit(peek()) || (peek() == '_' && is_digit(peek(1))))) {
        ++pos_;
      }
    };
    digits();
    if (peek() == '.' && is_digit(peek(1))) {
      ++pos_;
      digits();
    } else if (peek() == '.' && !is_digit(peek(1)) && peek(1) != '.' && peek(1) != '=') {
      ++pos_;  // "1." is a float literal
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
      pos_ += 2;
      digits();
    }
    emit(TokenKind::Number, begin);
  }

  void scan_quoted(unsigned char quote) {
    const std::size_t begin = pos_++;
    while (pos_ < src_.size()) {
      const unsigned char c = peek();
      if (c == '\\' && pos_ + 1 < src_.size()) {
        pos_ += 2;
        continue;
      }
      ++pos_;
      if (c == quote) break;
    }
    emit(TokenKind::String, begin);
  }

  // <<<LABEL, <<<"LABEL" or <<<'LABEL' up to the closing label line.
  bool scan_heredoc() {
    const std::size_t begin = pos_;
    std::size_t p = pos_ + 3;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) ++p;
    char quote = '\0';
    if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'')) quote = src_[p++];
    const std::size_t label_begin = p;
    while (p < src_.size() && is_ident_char(static_cast<unsigned char>(src_[p]))) ++p;
    if (p == label_begin) return false;
    const std::string_view label = src_.substr(label_begin, p - label_begin);
    if (quote != '\0') {
      if (p >= src_.size() || src_[p] != quote) return false;
      ++p;
    }
    if (p < src_.size() && src_[p] == '\r') ++p;
    if (p >= src_.size() || src_[p] != '\n') return false;
    ++p;
    // Scan line by line for the terminator.
    std::size_t line = p;
    while (line < src_.size()) {
      std::size_t q = line;
      while (q < src_.size() && (src_[q] == ' ' || src_[q] == '\t')) ++q;
      if (src_.substr(q).starts_with(label)) {
        const std::size_t after = q + label.size();
        if (after >= src_.size() || !is_ident_char(static_cast<unsigned char>(src_[after]))) {
          pos_ = after;
          emit(TokenKind::String, begin);
          return true;
        }
      }
      const std::size_t nl = src_.find('\n', line);
      if (nl == std::string_view::npos) break;
      line = nl + 1;
    }
    pos_ = src_.size();
    emit(TokenKind::String, begin);
    return true;
  }

  void scan_unknown() {
    const std::size_t begin = pos_;
    const unsigned char c = peek();
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    pos_ = std::min(src_.size(), pos_ + len);
    emit(TokenKind::Unknown, begin);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool html_mode_ = false;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> lex(std::string_view body) { return Lexer(body).run(); }

std::vector<std::string> tokenize(std::string_view body) {
  std::vector<std::string> texts;
  for (Token& t : lex(body)) texts.push_back(std::move(t.text));
  return texts;
}

}  // namespace vulnpipe::extraction
