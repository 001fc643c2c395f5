#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace vulnpipe::review {

/// New-file line numbers touched by a change, per new-file path.
struct ChangedLines {
  std::map<std::string, std::set<int>> files;

  [[nodiscard]] bool empty() const noexcept { return files.empty(); }
  friend bool operator==(const ChangedLines&, const ChangedLines&) = default;
};

/// Reads `git diff` style unified diff text.
///
/// Added lines are recorded at their new-file line number. A run of removed
/// lines that is not replaced by added lines is recorded at the new-file
/// line just before the removal point (line 1 at the top of a file); for a
/// hunk whose new side is empty ("+c,0") that is the anchor line c itself.
/// Renamed files are keyed by their new path, deleted files are skipped.
///
/// Throws DataError naming the 1-based diff line of a malformed hunk header
/// or a hunk body that ends early.
ChangedLines parse_unified_diff(std::string_view text);

}  // namespace vulnpipe::review
