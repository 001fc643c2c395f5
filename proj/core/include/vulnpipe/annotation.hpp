#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpipe/error.hpp"
#include "vulnpipe/extraction.hpp"

namespace vulnpipe::annotation {

using extraction::FunctionSpan;

enum class Tool {
  Semgrep,    // semgrep-style JSON export (or SARIF)
  SonarQube,  // sonar-style issues export (or SARIF)
};

/// Severity levels of both tools. Each level belongs to exactly one tool.
enum class Severity {
  SemgrepInfo,
  SemgrepWarning,
  SemgrepError,
  SonarInfo,
  SonarMinor,
  SonarMajor,
  SonarCritical,
  SonarBlocker,
};

std::string_view to_string(Tool tool) noexcept;
std::optional<Tool> parse_tool(std::string_view name) noexcept;

Tool tool_of(Severity s) noexcept;
/// Capitalised level name within the tool's taxonomy, e.g. "Major".
std::string_view level_name(Severity s) noexcept;
/// Globally unique key, e.g. "sonarqube:Major".
std::string severity_key(Severity s);
std::optional<Severity> parse_severity_key(std::string_view key);
/// Case-insensitive lookup of a level in one tool's taxonomy.
std::optional<Severity> parse_level(Tool tool, std::string_view level);
std::span<const Severity> taxonomy(Tool tool) noexcept;

struct Finding {
  Tool tool = Tool::Semgrep;
  std::string rule_id;
  Severity severity = Severity::SemgrepInfo;
  std::string path;  // normalised relative path
  int start_line = 0;
  int end_line = 0;

  friend bool operator==(const Finding&, const Finding&) = default;
};

class SeverityFilter {
 public:
  SeverityFilter() = default;
  explicit SeverityFilter(std::set<Severity> qualifying) : qualifying_(std::move(qualifying)) {}

  /// sonarqube: Major, Critical, Blocker; semgrep: Error.
  static SeverityFilter defaults();

  /// Builds a filter from level names per tool. Throws UsageError when a
  /// level is not part of that tool's taxonomy.
  static SeverityFilter from_names(const std::map<Tool, std::vector<std::string>>& levels);

  [[nodiscard]] bool qualifies(Severity s) const { return qualifying_.contains(s); }
  [[nodiscard]] const std::set<Severity>& qualifying() const noexcept { return qualifying_; }

 private:
  std::set<Severity> qualifying_;
};

struct ParseOptions {
  /// Missing file paths raise DataError when strict, otherwise the issue is
  /// dropped with a warning.
  bool strict = true;
  /// Removed from the front of every reported path after normalisation.
  std::string strip_prefix;
};

struct ParsedReport {
  std::vector<Finding> findings;
  std::vector<Diagnostic> warnings;
};

/// Parses a tool's JSON results export. Accepts the tool's native document
/// or a SARIF 2.1 log. Throws DataError on malformed JSON (with the byte
/// offset) and on severities outside the tool's taxonomy.
ParsedReport parse_report(Tool tool, std::string_view raw, const ParseOptions& opts = {});

/// Forward slashes, no "./" or "file://" prefix, `strip_prefix` removed.
std::string normalize_path(std::string_view path, std::string_view strip_prefix = {});

struct AnnotatedFunction {
  FunctionSpan span;
  std::map<Severity, int> counts;  // every attached finding, qualifying or not
  bool vulnerable = false;

  friend bool operator==(const AnnotatedFunction&, const AnnotatedFunction&) = default;
};

struct FusionResult {
  std::vector<AnnotatedFunction> functions;  // input order
  std::vector<Finding> orphans;              // findings overlapping no function
};

/// Attaches each finding to every function in the same file whose line
/// range intersects it. A function is vulnerable when at least one
/// qualifying finding is attached, however many there are.
FusionResult fuse_annotations(std::span<const FunctionSpan> functions,
                              std::span<const Finding> findings, const SeverityFilter& filter);

}  // namespace vulnpipe::annotation
