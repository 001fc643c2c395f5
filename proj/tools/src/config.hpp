#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/dataset.hpp>
#include <vulnpipe/dedup.hpp>
#include <vulnpipe/extraction.hpp>

namespace vulnpipe::cli {

/// Everything a pipeline run can be configured with. Command-line flags
/// override values loaded from the config file.
struct PipelineConfig {
  std::uint64_t seed = 0;

  extraction::ExtractionConfig extraction;
  extraction::Provenance provenance;

  dedup::DedupConfig dedup;

  annotation::SeverityFilter severity = annotation::SeverityFilter::defaults();
  annotation::ParseOptions parse;

  dataset::SplitRatios ratios;
  dataset::BalanceStrategy balance;

  std::optional<std::string> scorer;  // "stub" or backend URL
  std::size_t batch_size = 64;
  int timeout_ms = 30'000;
  std::vector<std::string> stub_markers{"VULN_MARKER"};

  double review_threshold = 0.5;

  /// Throws UsageError on out-of-range values.
  void validate() const;
};

/// Parses an INI/TOML-style document:
///
///   seed = 7
///   [extraction]  extensions, ignore, include_methods, nested_functions, repo_url, commit_id
///   [dedup]       window_size, jaccard_threshold
///   [annotation]  semgrep, sonarqube (qualifying levels), strict, strip_prefix
///   [split]       train, val, test
///   [balance]     strategy, global_min
///   [scoring]     scorer, batch_size, timeout_ms, markers
///   [review]      threshold
///
/// Unknown sections or keys raise UsageError.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace vulnpipe::cli
