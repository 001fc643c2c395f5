#include "vulnpipe/review.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vulnpipe/io.hpp"

namespace vulnpipe::review {
namespace fs = std::filesystem;

namespace {

bool has_extension(const extraction::ExtractionConfig& cfg, const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos || path.find('/', dot) != std::string::npos) return false;
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(cfg.extensions.begin(), cfg.extensions.end(), ext) != cfg.extensions.end();
}

bool touches(const std::set<int>& lines, int first, int last) {
  auto it = lines.lower_bound(first);
  return it != lines.end() && *it <= last;
}

}  // namespace

ChangedFunctions changed_functions(const fs::path& tree, const ChangedLines& changes,
                                   const extraction::ExtractionConfig& cfg) {
  ChangedFunctions out;
  for (const auto& [path, lines] : changes.files) {
    if (!has_extension(cfg, path)) continue;
    const fs::path file = tree / path;
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) {
      out.warnings.push_back({path, "changed file not found in the checkout"});
      continue;
    }
    extraction::SourceFile src{"", "", path, ""};
    try {
      src.content = extraction::sanitize_utf8(io::read_file(file));
    } catch (const IoError& e) {
      out.warnings.push_back({path, e.what()});
      continue;
    }
    std::vector<FunctionSpan> spans;
    try {
      spans = extraction::extract_functions(src, cfg);
    } catch (const Error& e) {
      out.warnings.push_back({path, e.what()});
      continue;
    }
    for (FunctionSpan& span : spans) {
      if (touches(lines, span.start_line, span.end_line)) out.spans.push_back(std::move(span));
    }
  }
  return out;
}

ReviewRun run_review(const fs::path& tree, std::string_view diff_text, scoring::Scorer& scorer,
                     const ReviewOptions& opts) {
  if (!(opts.threshold >= 0.0 && opts.threshold <= 1.0)) {
    throw UsageError("review threshold must lie in [0, 1]");
  }
  const ChangedLines changes = parse_unified_diff(diff_text);
  ChangedFunctions selected = changed_functions(tree, changes, opts.extraction);

  ReviewRun run;
  run.warnings = std::move(selected.warnings);
  if (selected.spans.empty()) return run;

  scoring::ScoreRequest req;
  for (const FunctionSpan& s : selected.spans) {
    req.items.push_back({fmt::format("{}:{}", s.source.path, s.start_byte), s.body});
  }
  const auto scores = scoring::match_response(req, scorer.score_batch(req));

  for (std::size_t i = 0; i < selected.spans.size(); ++i) {
    const FunctionSpan& s = selected.spans[i];
    const double score = scores.at(req.items[i].id);
    run.findings.push_back({s.source.path, s.name, s.start_line, s.end_line, score,
                            score >= opts.threshold, opts.threshold});
  }
  std::stable_sort(run.findings.begin(), run.findings.end(),
                   [](const ReviewFinding& a, const ReviewFinding& b) {
                     return std::tie(a.path, a.start_line, a.end_line) <
                            std::tie(b.path, b.start_line, b.end_line);
                   });
  return run;
}

RenderedReview render_review(std::span<const ReviewFinding> input) {
  std::vector<ReviewFinding> findings(input.begin(), input.end());
  std::stable_sort(findings.begin(), findings.end(), [](const ReviewFinding& a, const ReviewFinding& b) {
    return std::tie(a.path, a.start_line, a.end_line) < std::tie(b.path, b.start_line, b.end_line);
  });

  nlohmann::json payload = nlohmann::json::array();
  for (const ReviewFinding& f : findings) {
    payload.push_back({{"path", f.path},
                       {"function", f.function ? nlohmann::json(*f.function) : nlohmann::json()},
                       {"start_line", f.start_line},
                       {"end_line", f.end_line},
                       {"score", f.score},
                       {"flagged", f.flagged},
                       {"threshold", f.threshold}});
  }

  const auto flagged = static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [](const ReviewFinding& f) { return f.flagged; }));

  std::string md = "## Vulnerability review\n\n";
  if (!findings.empty()) {
    md += fmt::format("{} changed function(s) scored, {} flagged (threshold {:.2f}).\n\n",
                      findings.size(), flagged, findings.front().threshold);
  }
  if (flagged == 0) {
    md += "No flagged functions.\n";
  } else {
    for (const ReviewFinding& f : findings) {
      if (!f.flagged) continue;
      md += fmt::format("### `{}` lines {}-{}", f.path, f.start_line, f.end_line);
      if (f.function) md += fmt::format(" `{}`", *f.function);
      md += fmt::format("\n\nScore: **{:.4f}**. This function was classified as potentially "
                        "vulnerable; please review it before merging.\n\n",
                        f.score);
    }
    md.pop_back();
  }
  return {payload.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n", md};
}

}  // namespace vulnpipe::review
