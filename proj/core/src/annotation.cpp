#include "vulnpipe/annotation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace vulnpipe::annotation {

using nlohmann::json;

namespace {

constexpr std::array kSemgrepLevels{Severity::SemgrepInfo, Severity::SemgrepWarning,
                                    Severity::SemgrepError};
constexpr std::array kSonarLevels{Severity::SonarInfo, Severity::SonarMinor, Severity::SonarMajor,
                                  Severity::SonarCritical, Severity::SonarBlocker};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

// Small cursor over one issue object so every lookup reports what was missing.
class Issue {
 public:
  Issue(const json& j, std::size_t index) : j_(j), index_(index) {}

  [[nodiscard]] const json* at(std::initializer_list<std::string_view> keys) const {
    const json* cur = &j_;
    for (std::string_view k : keys) {
      if (!cur->is_object()) return nullptr;
      auto it = cur->find(k);
      if (it == cur->end() || it->is_null()) return nullptr;
      cur = &*it;
    }
    return cur;
  }

  [[nodiscard]] std::optional<std::string> str(std::initializer_list<std::string_view> keys) const {
    const json* v = at(keys);
    if (v == nullptr || !v->is_string()) return std::nullopt;
    return v->get<std::string>();
  }

  [[nodiscard]] std::optional<int> line(std::initializer_list<std::string_view> keys) const {
    const json* v = at(keys);
    if (v == nullptr || !v->is_number_integer()) return std::nullopt;
    return v->get<int>();
  }

  [[nodiscard]] std::size_t index() const noexcept { return index_; }

 private:
  const json& j_;
  std::size_t index_;
};

struct RawIssue {
  std::optional<std::string> rule;
  std::optional<std::string> level;
  std::optional<std::string> path;
  std::optional<int> start_line;
  std::optional<int> end_line;
  std::optional<int> line;
};

RawIssue read_semgrep(const Issue& is) {
  return {is.str({"check_id"}), is.str({"extra", "severity"}), is.str({"path"}),
          is.line({"start", "line"}), is.line({"end", "line"}), std::nullopt};
}

// Both the web API issue list and the generic issue import format.
RawIssue read_sonar(const Issue& is) {
  RawIssue r;
  r.rule = is.str({"rule"});
  if (!r.rule) r.rule = is.str({"ruleId"});
  r.level = is.str({"severity"});
  if (auto component = is.str({"component"})) {
    const auto colon = component->find(':');
    r.path = colon == std::string::npos ? *component : component->substr(colon + 1);
  }
  if (!r.path) r.path = is.str({"primaryLocation", "filePath"});
  r.start_line = is.line({"textRange", "startLine"});
  r.end_line = is.line({"textRange", "endLine"});
  if (!r.start_line) r.start_line = is.line({"primaryLocation", "textRange", "startLine"});
  if (!r.end_line) r.end_line = is.line({"primaryLocation", "textRange", "endLine"});
  r.line = is.line({"line"});
  return r;
}

RawIssue read_sarif(Tool tool, const Issue& is) {
  RawIssue r;
  r.rule = is.str({"ruleId"});
  r.level = is.str({"properties", "severity"});
  if (!r.level && tool == Tool::Semgrep) {
    // SARIF result levels: error, warning, note (none is not a finding).
    const std::string level = is.str({"level"}).value_or("warning");
    r.level = level == "note" ? std::string("Info") : level;
  }
  if (const json* locs = is.at({"locations"}); locs != nullptr && locs->is_array() &&
                                              !locs->empty()) {
    const Issue loc((*locs)[0], is.index());
    r.path = loc.str({"physicalLocation", "artifactLocation", "uri"});
    r.start_line = loc.line({"physicalLocation", "region", "startLine"});
    r.end_line = loc.line({"physicalLocation", "region", "endLine"});
  }
  return r;
}

}  // namespace

std::string_view to_string(Tool tool) noexcept {
  return tool == Tool::Semgrep ? "semgrep" : "sonarqube";
}

std::optional<Tool> parse_tool(std::string_view name) noexcept {
  if (iequals(name, "semgrep")) return Tool::Semgrep;
  if (iequals(name, "sonarqube") || iequals(name, "sonar")) return Tool::SonarQube;
  return std::nullopt;
}

Tool tool_of(Severity s) noexcept {
  switch (s) {
    case Severity::SemgrepInfo:
    case Severity::SemgrepWarning:
    case Severity::SemgrepError:
      return Tool::Semgrep;
    default:
      return Tool::SonarQube;
  }
}

std::string_view level_name(Severity s) noexcept {
  switch (s) {
    case Severity::SemgrepInfo:
    case Severity::SonarInfo:
      return "Info";
    case Severity::SemgrepWarning:
      return "Warning";
    case Severity::SemgrepError:
      return "Error";
    case Severity::SonarMinor:
      return "Minor";
    case Severity::SonarMajor:
      return "Major";
    case Severity::SonarCritical:
      return "Critical";
    case Severity::SonarBlocker:
      return "Blocker";
  }
  return "?";
}

std::string severity_key(Severity s) {
  return fmt::format("{}:{}", to_string(tool_of(s)), level_name(s));
}

std::optional<Severity> parse_severity_key(std::string_view key) {
  const auto colon = key.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto tool = parse_tool(key.substr(0, colon));
  if (!tool) return std::nullopt;
  return parse_level(*tool, key.substr(colon + 1));
}

std::optional<Severity> parse_level(Tool tool, std::string_view level) {
  for (Severity s : taxonomy(tool)) {
    if (iequals(level_name(s), level)) return s;
  }
  return std::nullopt;
}

std::span<const Severity> taxonomy(Tool tool) noexcept {
  if (tool == Tool::Semgrep) return kSemgrepLevels;
  return kSonarLevels;
}

SeverityFilter SeverityFilter::defaults() {
  return SeverityFilter({Severity::SonarMajor, Severity::SonarCritical, Severity::SonarBlocker,
                         Severity::SemgrepError});
}

SeverityFilter SeverityFilter::from_names(const std::map<Tool, std::vector<std::string>>& levels) {
  std::set<Severity> q;
  for (const auto& [tool, names] : levels) {
    for (const std::string& name : names) {
      auto s = parse_level(tool, name);
      if (!s) {
        throw UsageError(fmt::format("severity '{}' is not part of the {} taxonomy", name,
                                     to_string(tool)));
      }
      q.insert(*s);
    }
  }
  return SeverityFilter(std::move(q));
}

std::string normalize_path(std::string_view path, std::string_view strip_prefix) {
  std::string p(path);
  std::replace(p.begin(), p.end(), '\\', '/');
  if (p.starts_with("file://")) p.erase(0, 7);
  if (!strip_prefix.empty()) {
    std::string prefix = normalize_path(strip_prefix);
    if (!prefix.ends_with('/')) prefix += '/';
    if (p.starts_with(prefix)) p.erase(0, prefix.size());
  }
  while (p.starts_with("./")) p.erase(0, 2);
  std::string out;
  out.reserve(p.size());
  for (char c : p) {
    if (c == '/' && !out.empty() && out.back() == '/') continue;
    out += c;
  }
  return out;
}

ParsedReport parse_report(Tool tool, std::string_view raw, const ParseOptions& opts) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{} report: malformed JSON at byte {}", to_string(tool), e.byte));
  }
  if (!doc.is_object()) throw DataError(fmt::format("{} report: expected a JSON object", to_string(tool)));

  // Flatten to a list of issue objects, remembering which reader applies.
  std::vector<const json*> issues;
  const bool sarif = doc.contains("runs");
  if (sarif) {
    for (const json& run : doc["runs"]) {
      if (auto it = run.find("results"); it != run.end() && it->is_array()) {
        for (const json& r : *it) issues.push_back(&r);
      }
    }
  } else {
    const char* key = tool == Tool::Semgrep ? "results" : "issues";
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) {
      throw DataError(fmt::format("{} report: missing '{}' array", to_string(tool), key));
    }
    for (const json& r : *it) issues.push_back(&r);
  }

  ParsedReport out;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    const Issue is(*issues[i], i);
    RawIssue raw_issue = sarif ? read_sarif(tool, is)
                               : (tool == Tool::Semgrep ? read_semgrep(is) : read_sonar(is));
    const std::string where = fmt::format("{} issue #{}", to_string(tool), i);

    if (!raw_issue.level) throw DataError(where + ": missing severity");
    const auto severity = parse_level(tool, *raw_issue.level);
    if (!severity) {
      throw DataError(fmt::format("{}: unknown severity '{}'", where, *raw_issue.level));
    }
    if (!raw_issue.path || raw_issue.path->empty()) {
      if (opts.strict) throw DataError(where + ": missing file path");
      out.warnings.push_back({"", where + ": missing file path, dropped"});
      continue;
    }
    const std::string path = normalize_path(*raw_issue.path, opts.strip_prefix);

    std::optional<int> start = raw_issue.start_line ? raw_issue.start_line : raw_issue.line;
    std::optional<int> end = raw_issue.end_line ? raw_issue.end_line : start;
    if (!start || *start < 1) {
      out.warnings.push_back({path, where + ": no line location, dropped"});
      continue;
    }
    if (!end || *end < *start) end = start;

    out.findings.push_back(
        {tool, raw_issue.rule.value_or(""), *severity, path, *start, *end});
  }
  return out;
}

FusionResult fuse_annotations(std::span<const FunctionSpan> functions,
                              std::span<const Finding> findings, const SeverityFilter& filter) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_path;
  for (std::size_t i = 0; i < findings.size(); ++i) by_path[findings[i].path].push_back(i);

  FusionResult out;
  out.functions.reserve(functions.size());
  std::vector<bool> attached(findings.size(), false);

  for (const FunctionSpan& fn : functions) {
    AnnotatedFunction af{fn, {}, false};
    if (auto it = by_path.find(normalize_path(fn.source.path)); it != by_path.end()) {
      for (std::size_t i : it->second) {
        const Finding& f = findings[i];
        if (!extraction::lines_overlap(fn.start_line, fn.end_line, f.start_line, f.end_line)) {
          continue;
        }
        attached[i] = true;
        ++af.counts[f.severity];
        if (filter.qualifies(f.severity)) af.vulnerable = true;
      }
    }
    out.functions.push_back(std::move(af));
  }
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (!attached[i]) out.orphans.push_back(findings[i]);
  }
  return out;
}

}  // namespace vulnpipe::annotation
