#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpipe/diff.hpp"
#include "vulnpipe/error.hpp"
#include "vulnpipe/extraction.hpp"
#include "vulnpipe/scoring.hpp"

namespace vulnpipe::review {

using extraction::FunctionSpan;

struct ChangedFunctions {
  std::vector<FunctionSpan> spans;  // by (path, start_byte)
  std::vector<Diagnostic> warnings;
};

/// Extracts functions from every changed file in `tree` that matches the
/// configured extensions and keeps those overlapping a changed line.
/// Changed files missing from the tree produce a warning. Read-only.
ChangedFunctions changed_functions(const std::filesystem::path& tree, const ChangedLines& changes,
                                   const extraction::ExtractionConfig& cfg = {});

struct ReviewFinding {
  std::string path;
  std::optional<std::string> function;
  int start_line = 0;
  int end_line = 0;
  double score = 0.0;
  bool flagged = false;  // score >= threshold
  double threshold = 0.5;

  friend bool operator==(const ReviewFinding&, const ReviewFinding&) = default;
};

struct ReviewOptions {
  double threshold = 0.5;
  extraction::ExtractionConfig extraction;
};

struct ReviewRun {
  std::vector<ReviewFinding> findings;  // by (path, start_line)
  std::vector<Diagnostic> warnings;
};

/// diff -> changed functions -> one batched scoring call -> findings.
/// The scorer is not contacted when no function changed. Scorer errors
/// (TransportError, ScoringError, ProtocolError) propagate unchanged.
ReviewRun run_review(const std::filesystem::path& tree, std::string_view diff_text,
                     scoring::Scorer& scorer, const ReviewOptions& opts = {});

struct RenderedReview {
  std::string json;      // array of findings, 2-space indent, trailing newline
  std::string markdown;  // pull request comment body
};

RenderedReview render_review(std::span<const ReviewFinding> findings);

}  // namespace vulnpipe::review
