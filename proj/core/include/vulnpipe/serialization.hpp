#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpipe/annotation.hpp"
#include "vulnpipe/extraction.hpp"

// JSON Lines codecs for the intermediate artefacts passed between stages.
// Tokens are not stored; they are recomputed from the body on read.
namespace vulnpipe::serialization {

using annotation::AnnotatedFunction;
using annotation::Finding;
using extraction::FunctionSpan;

nlohmann::json to_json(const FunctionSpan& span);
nlohmann::json to_json(const AnnotatedFunction& fn);
nlohmann::json to_json(const Finding& f);

/// Throw DataError on missing or mistyped fields.
FunctionSpan span_from_json(const nlohmann::json& j);
AnnotatedFunction annotated_from_json(const nlohmann::json& j);
Finding finding_from_json(const nlohmann::json& j);

std::string write_spans(std::span<const FunctionSpan> spans);
std::string write_annotated(std::span<const AnnotatedFunction> fns);
std::string write_findings(std::span<const Finding> findings);

/// Blank lines are skipped. Errors name the 1-based line.
std::vector<FunctionSpan> read_spans(std::string_view jsonl);
std::vector<AnnotatedFunction> read_annotated(std::string_view jsonl);
std::vector<Finding> read_findings(std::string_view jsonl);

}  // namespace vulnpipe::serialization
