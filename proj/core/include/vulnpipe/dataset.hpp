#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpipe/annotation.hpp"

namespace vulnpipe::dataset {

/// One CSV row: how to find the function again, plus per-severity counts.
struct DatasetRecord {
  std::string url;
  std::string commit_id;
  std::string file_path;
  int start_line = 0;
  int end_line = 0;
  int major = 0;     // sonarqube
  int critical = 0;  // sonarqube
  int blocker = 0;   // sonarqube
  int error = 0;     // semgrep
  int vulnerable = 0;

  [[nodiscard]] int qualifying_count() const noexcept { return major + critical + blocker + error; }

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Fixed column order of the dataset CSV.
inline constexpr std::array<std::string_view, 10> kCsvColumns{
    "url", "commit_id", "file_path", "start_line", "end_line",
    "major", "critical", "blocker", "error", "vulnerable"};

DatasetRecord to_record(const annotation::AnnotatedFunction& fn);

/// Stable identifier: "<url>@<commit_id>:<file_path>#L<start>-L<end>".
std::string record_id(const DatasetRecord& r);

/// RFC 4180 CSV with a header row and '\n' line endings.
std::string write_csv(std::span<const DatasetRecord> records);
/// Throws DataError naming the offending column and row.
std::vector<DatasetRecord> read_csv(std::string_view bytes);

enum class Partition : std::uint8_t { Train, Val, Test };
std::string_view to_string(Partition p) noexcept;

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitAssignment {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<Partition> assignment;  // parallel to the input records

  [[nodiscard]] std::size_t count(Partition p) const;
};

/// Seeded random 80/10/10-style split. Records are ordered by their
/// identification tuple before shuffling, so input row order does not
/// matter. Train and val sizes are floor(ratio * N), test takes the rest.
/// Throws DataError when N < 10 or the ratios do not sum to 1 (1e-9).
SplitAssignment split(std::span<const DatasetRecord> records, const SplitRatios& ratios,
                      std::uint64_t seed);

/// Sizes the split would produce for N records.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

enum class BalanceKind { NB, USC, URSC, WLF };
std::string_view to_string(BalanceKind k) noexcept;
std::optional<BalanceKind> parse_balance_kind(std::string_view name) noexcept;

struct BalanceStrategy {
  BalanceKind kind = BalanceKind::NB;
  std::size_t global_min = 0;  // USC only, >= 1

  static BalanceStrategy none() { return {BalanceKind::NB, 0}; }
  static BalanceStrategy global_undersample(std::size_t m) { return {BalanceKind::USC, m}; }
  static BalanceStrategy relative_undersample() { return {BalanceKind::URSC, 0}; }
  static BalanceStrategy weighted_loss() { return {BalanceKind::WLF, 0}; }
};

struct ClassWeights {
  double vulnerable = 1.0;
  double non_vulnerable = 1.0;
};

/// weight_c = N / (2 * N_c).
ClassWeights inverse_frequency_weights(std::size_t n_vulnerable, std::size_t n_non_vulnerable);

struct BalanceResult {
  std::vector<DatasetRecord> records;  // resampled (input order kept) or unchanged
  std::optional<ClassWeights> weights; // WLF only
};

/// Applies a balancing strategy to a training partition. Resampling draws
/// without replacement and keeps the input order of the surviving records.
/// Throws DataError when a class is absent (USC/URSC/WLF) or smaller than
/// the USC target.
BalanceResult balance(std::span<const DatasetRecord> train, const BalanceStrategy& strategy,
                      std::uint64_t seed);

/// Split manifest: seed, ratios, sizes and per-partition record ids.
nlohmann::json split_manifest(std::span<const DatasetRecord> records, const SplitAssignment& split);

/// Balances the TRAIN partition only and returns the balancing manifest.
/// VAL and TEST ids are copied through untouched.
struct BalancedSplit {
  BalanceResult train;
  nlohmann::json manifest;
};
BalancedSplit balance_split(std::span<const DatasetRecord> records, const SplitAssignment& split,
                            const BalanceStrategy& strategy, std::uint64_t seed);

/// Reconstructs an assignment from a split manifest. Throws DataError when
/// the manifest does not cover `records` exactly.
SplitAssignment assignment_from_manifest(std::span<const DatasetRecord> records,
                                         const nlohmann::json& manifest);

struct QualityCheck {
  std::string attribute;
  bool passed = true;
  std::vector<std::string> offending;  // record ids or row numbers
};

struct QualityReport {
  std::vector<QualityCheck> checks;
  [[nodiscard]] bool passed() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct QualityOptions {
  /// Completeness also demands url and commit_id.
  bool require_provenance = true;
};

/// uniqueness: (url, commit, path, start_line) appears once.
/// completeness: identification fields present and line range valid.
/// consistency: vulnerable flag agrees with the qualifying counts.
QualityReport dataset_quality_report(std::span<const DatasetRecord> records,
                                     const QualityOptions& opts = {});

}  // namespace vulnpipe::dataset
