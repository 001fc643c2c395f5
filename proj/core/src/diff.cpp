#include "vulnpipe/diff.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "vulnpipe/error.hpp"

namespace vulnpipe::review {
namespace {

struct HunkHeader {
  int old_start = 0;
  int old_count = 1;
  int new_start = 0;
  int new_count = 1;
};

// "-a[,b]" / "+c[,d]"
bool parse_range(std::string_view& s, char sign, int& start, int& count) {
  if (s.empty() || s.front() != sign) return false;
  s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), start);
  if (ec != std::errc()) return false;
  s.remove_prefix(static_cast<std::size_t>(p - s.data()));
  if (!s.empty() && s.front() == ',') {
    s.remove_prefix(1);
    auto [q, ec2] = std::from_chars(s.data(), s.data() + s.size(), count);
    if (ec2 != std::errc()) return false;
    s.remove_prefix(static_cast<std::size_t>(q - s.data()));
  }
  return start >= 0 && count >= 0;
}

std::optional<HunkHeader> parse_hunk_header(std::string_view line) {
  if (!line.starts_with("@@ ")) return std::nullopt;
  line.remove_prefix(3);
  HunkHeader h;
  if (!parse_range(line, '-', h.old_start, h.old_count)) return std::nullopt;
  if (line.empty() || line.front() != ' ') return std::nullopt;
  line.remove_prefix(1);
  if (!parse_range(line, '+', h.new_start, h.new_count)) return std::nullopt;
  if (!line.starts_with(" @@")) return std::nullopt;
  return h;
}

// "b/src/x.php\t2024-01-01 ..." -> "src/x.php"
std::string clean_path(std::string_view p, std::string_view prefix) {
  if (const auto tab = p.find('\t'); tab != std::string_view::npos) p = p.substr(0, tab);
  while (!p.empty() && (p.back() == ' ' || p.back() == '\r')) p.remove_suffix(1);
  if (p.size() >= 2 && p.front() == '"' && p.back() == '"') p = p.substr(1, p.size() - 2);
  if (p.starts_with(prefix)) p.remove_prefix(prefix.size());
  return std::string(p);
}

}  // namespace

ChangedLines parse_unified_diff(std::string_view text) {
  ChangedLines out;
  std::optional<std::string> path;
  bool have_file = false;

  bool in_hunk = false;
  int old_left = 0;
  int new_left = 0;
  int new_line = 0;
  bool pending_removal = false;
  bool anchor_only = false;  // "+c,0": removal anchors at c
  int anchor = 0;

  auto record = [&](int line) {
    if (path) out.files[*path].insert(std::max(line, 1));
  };
  auto flush_removal = [&] {
    if (pending_removal) record(anchor_only ? anchor : new_line - 1);
    pending_removal = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (in_hunk) {
      const char tag = line.empty() ? ' ' : line.front();
      if (tag == '\\') continue;  // "\ No newline at end of file"
      if (tag == ' ') {
        flush_removal();
        ++new_line;
        --old_left;
        --new_left;
      } else if (tag == '+') {
        pending_removal = false;
        record(new_line);
        ++new_line;
        --new_left;
      } else if (tag == '-') {
        pending_removal = true;
        --old_left;
      } else {
        throw DataError(fmt::format("diff line {}: unexpected line inside hunk", line_no));
      }
      if (old_left < 0 || new_left < 0) {
        throw DataError(fmt::format("diff line {}: hunk longer than its header", line_no));
      }
      if (old_left == 0 && new_left == 0) {
        flush_removal();
        in_hunk = false;
      }
      continue;
    }

    if (line.starts_with("diff --git ")) {
      // Fallback path for headers without ---/+++ lines.
      have_file = true;
      const auto b = line.rfind(" b/");
      path = b == std::string_view::npos ? std::nullopt
                                         : std::optional(clean_path(line.substr(b + 1), "b/"));
    } else if (line.starts_with("rename to ")) {
      path = clean_path(line.substr(10), "");
    } else if (line.starts_with("+++ ")) {
      have_file = true;
      const std::string p = clean_path(line.substr(4), "b/");
      path = p == "/dev/null" ? std::nullopt : std::optional(p);
    } else if (line.starts_with("@@")) {
      const auto h = parse_hunk_header(line);
      if (!h) throw DataError(fmt::format("diff line {}: malformed hunk header", line_no));
      if (!have_file) {
        throw DataError(fmt::format("diff line {}: hunk before any file header", line_no));
      }
      in_hunk = h->old_count > 0 || h->new_count > 0;
      old_left = h->old_count;
      new_left = h->new_count;
      new_line = h->new_start;
      anchor_only = h->new_count == 0;
      anchor = h->new_start;
      pending_removal = false;
    }
  }
  if (in_hunk) throw DataError(fmt::format("diff line {}: input ends inside a hunk", line_no));
  return out;
}

}  // namespace vulnpipe::review
