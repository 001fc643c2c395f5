#include "config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <vulnpipe/error.hpp>
#include <vulnpipe/io.hpp>

namespace vulnpipe::cli {

namespace {

using Values = std::vector<std::string>;

std::string single(const std::string& key, const Values& v) {
  if (v.size() != 1) throw UsageError(fmt::format("config: '{}' takes a single value", key));
  return v.front();
}

template <typename T>
T number(const std::string& key, const Values& v) {
  const std::string s = single(key, v);
  T out{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw UsageError(fmt::format("config: '{}' expects a number, got '{}'", key, s));
  }
  return out;
}

bool boolean(const std::string& key, const Values& v) {
  const std::string s = single(key, v);
  if (s == "true") return true;
  if (s == "false") return false;
  throw UsageError(fmt::format("config: '{}' expects true or false, got '{}'", key, s));
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const Values&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = number<std::uint64_t>(k, v); }},

      {"extraction.extensions", [](auto& c, auto&, auto& v) { c.extraction.extensions = v; }},
      {"extraction.ignore", [](auto& c, auto&, auto& v) { c.extraction.ignore = v; }},
      {"extraction.include_methods",
       [](auto& c, auto& k, auto& v) { c.extraction.include_methods = boolean(k, v); }},
      {"extraction.nested_functions",
       [](auto& c, auto& k, auto& v) { c.extraction.nested_functions = boolean(k, v); }},
      {"extraction.repo_url", [](auto& c, auto& k, auto& v) { c.provenance.repo_url = single(k, v); }},
      {"extraction.commit_id",
       [](auto& c, auto& k, auto& v) { c.provenance.commit_id = single(k, v); }},

      {"dedup.window_size",
       [](auto& c, auto& k, auto& v) { c.dedup.window_size = number<std::size_t>(k, v); }},
      {"dedup.jaccard_threshold",
       [](auto& c, auto& k, auto& v) { c.dedup.jaccard_threshold = number<double>(k, v); }},

      {"annotation.semgrep", [](auto&, auto&, auto&) {}},  // handled with sonarqube below
      {"annotation.sonarqube", [](auto&, auto&, auto&) {}},
      {"annotation.strict", [](auto& c, auto& k, auto& v) { c.parse.strict = boolean(k, v); }},
      {"annotation.strip_prefix",
       [](auto& c, auto& k, auto& v) { c.parse.strip_prefix = single(k, v); }},

      {"split.train", [](auto& c, auto& k, auto& v) { c.ratios.train = number<double>(k, v); }},
      {"split.val", [](auto& c, auto& k, auto& v) { c.ratios.val = number<double>(k, v); }},
      {"split.test", [](auto& c, auto& k, auto& v) { c.ratios.test = number<double>(k, v); }},

      {"balance.strategy",
       [](auto& c, auto& k, auto& v) {
         const std::string name = single(k, v);
         const auto kind = dataset::parse_balance_kind(name);
         if (!kind) throw UsageError("config: unknown balance strategy '" + name + "'");
         c.balance.kind = *kind;
       }},
      {"balance.global_min",
       [](auto& c, auto& k, auto& v) { c.balance.global_min = number<std::size_t>(k, v); }},

      {"scoring.scorer", [](auto& c, auto& k, auto& v) { c.scorer = single(k, v); }},
      {"scoring.batch_size",
       [](auto& c, auto& k, auto& v) { c.batch_size = number<std::size_t>(k, v); }},
      {"scoring.timeout_ms", [](auto& c, auto& k, auto& v) { c.timeout_ms = number<int>(k, v); }},
      {"scoring.markers", [](auto& c, auto&, auto& v) { c.stub_markers = v; }},

      {"review.threshold",
       [](auto& c, auto& k, auto& v) { c.review_threshold = number<double>(k, v); }},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  dedup.validate();
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("split ratios must be non-negative and sum to 1");
  }
  if (balance.kind == dataset::BalanceKind::USC && balance.global_min == 0) {
    throw UsageError("the USC strategy needs global_min >= 1");
  }
  if (batch_size == 0) throw UsageError("scoring batch_size must be >= 1");
  if (timeout_ms <= 0) throw UsageError("scoring timeout_ms must be positive");
  if (!(review_threshold >= 0.0 && review_threshold <= 1.0)) {
    throw UsageError("review threshold must lie in [0, 1]");
  }
  if (extraction.extensions.empty()) throw UsageError("extraction extensions must not be empty");
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::istringstream in{std::string(text)};
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  std::map<annotation::Tool, std::vector<std::string>> levels;
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    auto it = setters().find(key);
    if (it == setters().end()) throw UsageError("config: unknown key '" + key + "'");
    it->second(base, key, item.inputs);
    if (key == "annotation.semgrep") levels[annotation::Tool::Semgrep] = item.inputs;
    if (key == "annotation.sonarqube") levels[annotation::Tool::SonarQube] = item.inputs;
  }
  if (!levels.empty()) {
    // A tool left out of the file keeps its default qualifying levels.
    for (annotation::Tool tool : {annotation::Tool::Semgrep, annotation::Tool::SonarQube}) {
      if (levels.contains(tool)) continue;
      for (annotation::Severity s : base.severity.qualifying()) {
        if (annotation::tool_of(s) == tool) levels[tool].emplace_back(annotation::level_name(s));
      }
    }
    base.severity = annotation::SeverityFilter::from_names(levels);
  }
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path));
}

}  // namespace vulnpipe::cli
