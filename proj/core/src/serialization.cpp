#include "vulnpipe/serialization.hpp"

#include <fmt/format.h>

#include "vulnpipe/error.hpp"
#include "vulnpipe/tokenizer.hpp"

namespace vulnpipe::serialization {

using nlohmann::json;

namespace {

constexpr auto kReplace = json::error_handler_t::replace;

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw DataError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw DataError(fmt::format("missing field '{}'", key));
  return *it;
}

std::string str(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw DataError(fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

template <typename Int>
Int integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw DataError(fmt::format("field '{}' must be an integer", key));
  if constexpr (std::is_unsigned_v<Int>) {
    if (v.get<long long>() < 0) throw DataError(fmt::format("field '{}' must be >= 0", key));
  }
  return v.get<Int>();
}

template <typename T, typename Encode>
std::string write_lines(std::span<const T> items, Encode encode) {
  std::string out;
  for (const T& item : items) {
    out += encode(item).dump(-1, ' ', false, kReplace);
    out += '\n';
  }
  return out;
}

template <typename Decode>
auto read_lines(std::string_view jsonl, Decode decode) {
  std::vector<decltype(decode(json{}))> out;
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    ++line_no;
    const auto nl = jsonl.find('\n');
    std::string_view line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.push_back(decode(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw DataError(fmt::format("line {}: malformed JSON at byte {}", line_no, e.byte));
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

}  // namespace

json to_json(const FunctionSpan& s) {
  return {{"repo_url", s.source.repo_url},
          {"commit_id", s.source.commit_id},
          {"path", s.source.path},
          {"name", s.name ? json(*s.name) : json()},
          {"start_line", s.start_line},
          {"end_line", s.end_line},
          {"start_byte", s.start_byte},
          {"end_byte", s.end_byte},
          {"body", s.body}};
}

json to_json(const AnnotatedFunction& fn) {
  json j = to_json(fn.span);
  json counts = json::object();
  for (const auto& [sev, n] : fn.counts) counts[annotation::severity_key(sev)] = n;
  j["counts"] = std::move(counts);
  j["vulnerable"] = fn.vulnerable;
  return j;
}

json to_json(const Finding& f) {
  return {{"tool", annotation::to_string(f.tool)},
          {"rule_id", f.rule_id},
          {"severity", annotation::severity_key(f.severity)},
          {"path", f.path},
          {"start_line", f.start_line},
          {"end_line", f.end_line}};
}

FunctionSpan span_from_json(const json& j) {
  FunctionSpan s;
  s.source = {str(j, "repo_url"), str(j, "commit_id"), str(j, "path")};
  const json& name = field(j, "name");
  if (name.is_string()) {
    s.name = name.get<std::string>();
  } else if (!name.is_null()) {
    throw DataError("field 'name' must be a string or null");
  }
  s.start_line = integer<int>(j, "start_line");
  s.end_line = integer<int>(j, "end_line");
  s.start_byte = integer<std::size_t>(j, "start_byte");
  s.end_byte = integer<std::size_t>(j, "end_byte");
  if (s.start_line < 1 || s.end_line < s.start_line) throw DataError("invalid line range");
  if (s.end_byte < s.start_byte) throw DataError("invalid byte range");
  s.body = str(j, "body");
  s.tokens = extraction::tokenize(s.body);
  return s;
}

AnnotatedFunction annotated_from_json(const json& j) {
  AnnotatedFunction fn{span_from_json(j), {}, false};
  const json& counts = field(j, "counts");
  if (!counts.is_object()) throw DataError("field 'counts' must be an object");
  for (const auto& [key, n] : counts.items()) {
    const auto sev = annotation::parse_severity_key(key);
    if (!sev) throw DataError(fmt::format("unknown severity key '{}'", key));
    if (!n.is_number_integer() || n.get<long long>() < 0) {
      throw DataError(fmt::format("count for '{}' must be a non-negative integer", key));
    }
    fn.counts[*sev] = n.get<int>();
  }
  const json& vuln = field(j, "vulnerable");
  if (!vuln.is_boolean()) throw DataError("field 'vulnerable' must be a boolean");
  fn.vulnerable = vuln.get<bool>();
  return fn;
}

Finding finding_from_json(const json& j) {
  Finding f;
  const auto tool = annotation::parse_tool(str(j, "tool"));
  if (!tool) throw DataError("unknown tool '" + str(j, "tool") + "'");
  f.tool = *tool;
  f.rule_id = str(j, "rule_id");
  const auto sev = annotation::parse_severity_key(str(j, "severity"));
  if (!sev || annotation::tool_of(*sev) != f.tool) {
    throw DataError("invalid severity '" + str(j, "severity") + "'");
  }
  f.severity = *sev;
  f.path = str(j, "path");
  f.start_line = integer<int>(j, "start_line");
  f.end_line = integer<int>(j, "end_line");
  return f;
}

std::string write_spans(std::span<const FunctionSpan> spans) {
  return write_lines(spans, [](const FunctionSpan& s) { return to_json(s); });
}

std::string write_annotated(std::span<const AnnotatedFunction> fns) {
  return write_lines(fns, [](const AnnotatedFunction& f) { return to_json(f); });
}

std::string write_findings(std::span<const Finding> findings) {
  return write_lines(findings, [](const Finding& f) { return to_json(f); });
}

std::vector<FunctionSpan> read_spans(std::string_view jsonl) {
  return read_lines(jsonl, span_from_json);
}

std::vector<AnnotatedFunction> read_annotated(std::string_view jsonl) {
  return read_lines(jsonl, annotated_from_json);
}

std::vector<Finding> read_findings(std::string_view jsonl) {
  return read_lines(jsonl, finding_from_json);
}

}  // namespace vulnpipe::serialization
