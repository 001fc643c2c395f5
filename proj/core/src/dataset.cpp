#include "vulnpipe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "vulnpipe/error.hpp"
#include "vulnpipe/random.hpp"

namespace vulnpipe::dataset {

using nlohmann::json;
using annotation::Severity;

DatasetRecord to_record(const annotation::AnnotatedFunction& fn) {
  auto count = [&](Severity s) {
    auto it = fn.counts.find(s);
    return it == fn.counts.end() ? 0 : it->second;
  };
  DatasetRecord r;
  r.url = fn.span.source.repo_url;
  r.commit_id = fn.span.source.commit_id;
  r.file_path = fn.span.source.path;
  r.start_line = fn.span.start_line;
  r.end_line = fn.span.end_line;
  r.major = count(Severity::SonarMajor);
  r.critical = count(Severity::SonarCritical);
  r.blocker = count(Severity::SonarBlocker);
  r.error = count(Severity::SemgrepError);
  r.vulnerable = fn.vulnerable ? 1 : 0;
  return r;
}

std::string record_id(const DatasetRecord& r) {
  return fmt::format("{}@{}:{}#L{}-L{}", r.url, r.commit_id, r.file_path, r.start_line, r.end_line);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void append_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

// Splits CSV text into rows of fields. Quoted fields may span lines.
std::vector<std::vector<std::string>> parse_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw DataError(fmt::format("csv: unterminated quoted field in row {}", rows.size() + 1));
  if (field_started || !row.empty() || !field.empty()) end_row();
  return rows;
}

int parse_int(const std::string& s, std::size_t row, std::string_view column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(fmt::format("csv row {} column '{}': expected an integer, got '{}'", row,
                                column, s));
  }
  return v;
}

}  // namespace

std::string write_csv(std::span<const DatasetRecord> records) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  out += '\n';
  for (const DatasetRecord& r : records) {
    append_field(out, r.url);
    out += ',';
    append_field(out, r.commit_id);
    out += ',';
    append_field(out, r.file_path);
    out += fmt::format(",{},{},{},{},{},{},{}\n", r.start_line, r.end_line, r.major, r.critical,
                       r.blocker, r.error, r.vulnerable);
  }
  return out;
}

std::vector<DatasetRecord> read_csv(std::string_view bytes) {
  auto rows = parse_rows(bytes);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto& header = rows.front();
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c >= header.size()) {
      throw DataError(fmt::format("csv header: missing column '{}'", kCsvColumns[c]));
    }
    if (header[c] != kCsvColumns[c]) {
      throw DataError(fmt::format("csv header: column {} is '{}', expected '{}'", c + 1, header[c],
                                  kCsvColumns[c]));
    }
  }
  if (header.size() > kCsvColumns.size()) {
    throw DataError(fmt::format("csv header: unexpected column '{}'", header[kCsvColumns.size()]));
  }

  std::vector<DatasetRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::size_t row_no = r + 1;
    if (f.size() != kCsvColumns.size()) {
      const std::string_view col =
          f.size() < kCsvColumns.size() ? kCsvColumns[f.size()] : std::string_view("<extra>");
      throw DataError(fmt::format("csv row {}: {} fields, expected {} (column '{}')", row_no,
                                  f.size(), kCsvColumns.size(), col));
    }
    DatasetRecord rec;
    rec.url = f[0];
    rec.commit_id = f[1];
    rec.file_path = f[2];
    rec.start_line = parse_int(f[3], row_no, kCsvColumns[3]);
    rec.end_line = parse_int(f[4], row_no, kCsvColumns[4]);
    rec.major = parse_int(f[5], row_no, kCsvColumns[5]);
    rec.critical = parse_int(f[6], row_no, kCsvColumns[6]);
    rec.blocker = parse_int(f[7], row_no, kCsvColumns[7]);
    rec.error = parse_int(f[8], row_no, kCsvColumns[8]);
    rec.vulnerable = parse_int(f[9], row_no, kCsvColumns[9]);
    const int counts[] = {rec.major, rec.critical, rec.blocker, rec.error};
    for (std::size_t c = 0; c < 4; ++c) {
      if (counts[c] < 0) {
        throw DataError(
            fmt::format("csv row {} column '{}': negative count", row_no, kCsvColumns[c + 5]));
      }
    }
    if (rec.vulnerable != 0 && rec.vulnerable != 1) {
      throw DataError(fmt::format("csv row {} column 'vulnerable': expected 0 or 1", row_no));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Partition p) noexcept {
  switch (p) {
    case Partition::Train:
      return "train";
    case Partition::Val:
      return "val";
    case Partition::Test:
      return "test";
  }
  return "?";
}

std::size_t SplitAssignment::count(Partition p) const {
  return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), p));
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  auto floor_of = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  const std::size_t train = std::min(n, floor_of(ratios.train));
  const std::size_t val = std::min(n - train, floor_of(ratios.val));
  return {train, val, n - train - val};
}

namespace {

auto identity_tuple(const DatasetRecord& r) {
  return std::tie(r.url, r.commit_id, r.file_path, r.start_line, r.end_line, r.major, r.critical,
                  r.blocker, r.error, r.vulnerable);
}

}  // namespace

SplitAssignment split(std::span<const DatasetRecord> records, const SplitRatios& ratios,
                      std::uint64_t seed) {
  const std::size_t n = records.size();
  if (n < 10) throw DataError(fmt::format("split needs at least 10 records, got {}", n));
  for (double r : {ratios.train, ratios.val, ratios.test}) {
    if (!(r >= 0.0 && r <= 1.0)) throw DataError("split ratios must lie in [0, 1]");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw DataError("split ratios must sum to 1");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return identity_tuple(records[a]) < identity_tuple(records[b]);
  });
  Rng rng(seed);
  rng.shuffle(std::span(order));

  const auto sizes = split_sizes(n, ratios);
  SplitAssignment out{seed, ratios, std::vector<Partition>(n, Partition::Test)};
  for (std::size_t k = 0; k < n; ++k) {
    if (k < sizes[0]) {
      out.assignment[order[k]] = Partition::Train;
    } else if (k < sizes[0] + sizes[1]) {
      out.assignment[order[k]] = Partition::Val;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balancing

std::string_view to_string(BalanceKind k) noexcept {
  switch (k) {
    case BalanceKind::NB:
      return "NB";
    case BalanceKind::USC:
      return "USC";
    case BalanceKind::URSC:
      return "URSC";
    case BalanceKind::WLF:
      return "WLF";
  }
  return "?";
}

std::optional<BalanceKind> parse_balance_kind(std::string_view name) noexcept {
  for (BalanceKind k : {BalanceKind::NB, BalanceKind::USC, BalanceKind::URSC, BalanceKind::WLF}) {
    const std::string_view canon = to_string(k);
    if (canon.size() == name.size() &&
        std::equal(canon.begin(), canon.end(), name.begin(), [](char a, char b) {
          return std::toupper(static_cast<unsigned char>(a)) == std::toupper(static_cast<unsigned char>(b));
        })) {
      return k;
    }
  }
  return std::nullopt;
}

ClassWeights inverse_frequency_weights(std::size_t n_vulnerable, std::size_t n_non_vulnerable) {
  if (n_vulnerable == 0 || n_non_vulnerable == 0) {
    throw DataError("class weights need both classes present");
  }
  const auto total = static_cast<double>(n_vulnerable + n_non_vulnerable);
  return {total / (2.0 * static_cast<double>(n_vulnerable)),
          total / (2.0 * static_cast<double>(n_non_vulnerable))};
}

BalanceResult balance(std::span<const DatasetRecord> train, const BalanceStrategy& strategy,
                      std::uint64_t seed) {
  std::vector<std::size_t> vuln;
  std::vector<std::size_t> clean;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train[i].vulnerable ? vuln : clean).push_back(i);
  }

  BalanceResult out;
  if (strategy.kind == BalanceKind::NB) {
    out.records.assign(train.begin(), train.end());
    return out;
  }
  if (vuln.empty() || clean.empty()) {
    throw DataError(fmt::format("{} needs both classes in the training set ({} vulnerable, {} not)",
                                to_string(strategy.kind), vuln.size(), clean.size()));
  }
  if (strategy.kind == BalanceKind::WLF) {
    out.records.assign(train.begin(), train.end());
    out.weights = inverse_frequency_weights(vuln.size(), clean.size());
    return out;
  }

  std::size_t target = std::min(vuln.size(), clean.size());
  if (strategy.kind == BalanceKind::USC) {
    if (strategy.global_min < 1) throw UsageError("USC global_min must be >= 1");
    target = strategy.global_min;
    if (vuln.size() < target || clean.size() < target) {
      throw DataError(fmt::format("USC target {} exceeds a class size ({} vulnerable, {} not)",
                                  target, vuln.size(), clean.size()));
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto* cls : {&vuln, &clean}) {
    for (std::size_t k : rng.sample(cls->size(), target)) keep.push_back((*cls)[k]);
  }
  std::sort(keep.begin(), keep.end());
  out.records.reserve(keep.size());
  for (std::size_t i : keep) out.records.push_back(train[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

json sorted_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const DatasetRecord> rs) {
  const auto v = static_cast<std::size_t>(
      std::count_if(rs.begin(), rs.end(), [](const DatasetRecord& r) { return r.vulnerable == 1; }));
  return {v, rs.size() - v};
}

}  // namespace

json split_manifest(std::span<const DatasetRecord> records, const SplitAssignment& split) {
  std::array<std::vector<std::string>, 3> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ids[static_cast<std::size_t>(split.assignment.at(i))].push_back(record_id(records[i]));
  }
  return {{"seed", split.seed},
          {"ratios", {{"train", split.ratios.train}, {"val", split.ratios.val}, {"test", split.ratios.test}}},
          {"sizes", {{"train", ids[0].size()}, {"val", ids[1].size()}, {"test", ids[2].size()}}},
          {"train", sorted_ids(ids[0])},
          {"val", sorted_ids(ids[1])},
          {"test", sorted_ids(ids[2])}};
}

SplitAssignment assignment_from_manifest(std::span<const DatasetRecord> records,
                                         const json& manifest) {
  SplitAssignment out;
  try {
    out.seed = manifest.at("seed").get<std::uint64_t>();
    const json& r = manifest.at("ratios");
    out.ratios = {r.at("train").get<double>(), r.at("val").get<double>(), r.at("test").get<double>()};
    std::unordered_map<std::string, std::vector<Partition>> lookup;
    for (Partition p : {Partition::Train, Partition::Val, Partition::Test}) {
      for (const json& id : manifest.at(std::string(to_string(p)))) {
        lookup[id.get<std::string>()].push_back(p);
      }
    }
    out.assignment.reserve(records.size());
    for (const DatasetRecord& rec : records) {
      auto it = lookup.find(record_id(rec));
      if (it == lookup.end() || it->second.empty()) {
        throw DataError("split manifest does not list record " + record_id(rec));
      }
      out.assignment.push_back(it->second.back());
      it->second.pop_back();
    }
    for (const auto& [id, left] : lookup) {
      if (!left.empty()) throw DataError("split manifest lists unknown record " + id);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split manifest: ") + e.what());
  }
  return out;
}

BalancedSplit balance_split(std::span<const DatasetRecord> records, const SplitAssignment& split,
                            const BalanceStrategy& strategy, std::uint64_t seed) {
  if (split.assignment.size() != records.size()) {
    throw DataError("split assignment does not match the record count");
  }
  std::vector<DatasetRecord> train;
  std::array<std::vector<std::string>, 3> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Partition p = split.assignment[i];
    if (p == Partition::Train) {
      train.push_back(records[i]);
    } else {
      ids[static_cast<std::size_t>(p)].push_back(record_id(records[i]));
    }
  }

  BalancedSplit out;
  out.train = balance(train, strategy, seed);
  for (const DatasetRecord& r : out.train.records) ids[0].push_back(record_id(r));

  const auto [bv, bn] = class_counts(train);
  const auto [av, an] = class_counts(out.train.records);
  json strategy_json = {{"kind", to_string(strategy.kind)}};
  if (strategy.kind == BalanceKind::USC) strategy_json["global_min"] = strategy.global_min;
  json weights = nullptr;
  if (out.train.weights) {
    weights = {{"vulnerable", out.train.weights->vulnerable},
               {"non_vulnerable", out.train.weights->non_vulnerable}};
  }
  out.manifest = {{"seed", seed},
                  {"split_seed", split.seed},
                  {"strategy", std::move(strategy_json)},
                  {"class_counts",
                   {{"before", {{"vulnerable", bv}, {"non_vulnerable", bn}}},
                    {"after", {{"vulnerable", av}, {"non_vulnerable", an}}}}},
                  {"weights", std::move(weights)},
                  {"train", sorted_ids(ids[0])},
                  {"val", sorted_ids(ids[1])},
                  {"test", sorted_ids(ids[2])}};
  return out;
}

// ---------------------------------------------------------------------------
// Quality

bool QualityReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const QualityCheck& c) { return c.passed; });
}

json QualityReport::to_json() const {
  json list = json::array();
  for (const QualityCheck& c : checks) {
    list.push_back({{"attribute", c.attribute}, {"passed", c.passed}, {"offending", c.offending}});
  }
  return {{"passed", passed()}, {"checks", std::move(list)}};
}

QualityReport dataset_quality_report(std::span<const DatasetRecord> records,
                                     const QualityOptions& opts) {
  QualityCheck uniqueness{"uniqueness", true, {}};
  QualityCheck completeness{"completeness", true, {}};
  QualityCheck consistency{"consistency", true, {}};

  std::map<std::tuple<std::string, std::string, std::string, int>, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& r = records[i];
    const std::string label = fmt::format("row {}: {}", i + 2, record_id(r));

    auto [it, fresh] = seen.try_emplace({r.url, r.commit_id, r.file_path, r.start_line}, i);
    if (!fresh) uniqueness.offending.push_back(label);

    const bool located = !r.file_path.empty() && r.start_line >= 1 && r.end_line >= r.start_line;
    const bool provenance = !opts.require_provenance || (!r.url.empty() && !r.commit_id.empty());
    if (!located || !provenance) completeness.offending.push_back(label);

    const bool counts_ok = r.major >= 0 && r.critical >= 0 && r.blocker >= 0 && r.error >= 0;
    if (!counts_ok || r.vulnerable != (r.qualifying_count() >= 1 ? 1 : 0)) {
      consistency.offending.push_back(label);
    }
  }

  QualityReport report;
  for (QualityCheck* c : {&uniqueness, &completeness, &consistency}) {
    c->passed = c->offending.empty();
    report.checks.push_back(std::move(*c));
  }
  return report;
}

}  // namespace vulnpipe::dataset
