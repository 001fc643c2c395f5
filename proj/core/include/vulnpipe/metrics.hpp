#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vulnpipe::metrics {

/// Positive class = vulnerable = 1.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  [[nodiscard]] std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws DataError on empty or unequal-length inputs, or values other than 0/1.
ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions);

struct CellId {
  std::string trained_on;
  std::string tested_on;
  std::string strategy;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

struct MetricsReport {
  CellId cell;
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R). Each is 0 when its
/// denominator is 0.
MetricsReport prf(const ConfusionCounts& counts, CellId cell = {});

struct EvalCell {
  CellId id;
  std::vector<int> labels;
  std::vector<int> predictions;
};

struct MetricsTable {
  std::vector<MetricsReport> rows;  // input order

  /// Full-precision JSON.
  [[nodiscard]] nlohmann::json to_json() const;
  /// Plain-text table grouped by training dataset, metrics to 4 decimals.
  [[nodiscard]] std::string render_text() const;
};

/// One report per cell. Throws DataError on duplicate cell ids.
MetricsTable cross_domain_matrix(std::span<const EvalCell> cells);

/// Parses {"cells": [{"trained_on", "tested_on", "strategy", "labels", "predictions"}]}.
std::vector<EvalCell> cells_from_json(const nlohmann::json& doc);

}  // namespace vulnpipe::metrics
