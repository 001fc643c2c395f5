#include "vulnpipe/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "vulnpipe/error.hpp"

namespace vulnpipe::metrics {

using nlohmann::json;

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw DataError(fmt::format("label/prediction length mismatch: {} vs {}", labels.size(),
                                predictions.size()));
  }
  if (labels.empty()) throw DataError("cannot score an empty label vector");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) {
      throw DataError(fmt::format("position {}: labels and predictions must be 0 or 1", i));
    }
    if (y == 1) {
      ++(p == 1 ? c.tp : c.fn);
    } else {
      ++(p == 1 ? c.fp : c.tn);
    }
  }
  return c;
}

MetricsReport prf(const ConfusionCounts& counts, CellId cell) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsReport r{std::move(cell), counts, 0.0, 0.0, 0.0};
  r.precision = ratio(counts.tp, counts.tp + counts.fp);
  r.recall = ratio(counts.tp, counts.tp + counts.fn);
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

MetricsTable cross_domain_matrix(std::span<const EvalCell> cells) {
  MetricsTable table;
  std::set<CellId> seen;
  for (const EvalCell& cell : cells) {
    if (!seen.insert(cell.id).second) {
      throw DataError(fmt::format("duplicate cell ({}, {}, {})", cell.id.trained_on,
                                  cell.id.tested_on, cell.id.strategy));
    }
    table.rows.push_back(prf(confusion(cell.labels, cell.predictions), cell.id));
  }
  return table;
}

json MetricsTable::to_json() const {
  json out = json::array();
  for (const MetricsReport& r : rows) {
    out.push_back({{"trained_on", r.cell.trained_on},
                   {"tested_on", r.cell.tested_on},
                   {"strategy", r.cell.strategy},
                   {"tp", r.counts.tp},
                   {"fp", r.counts.fp},
                   {"fn", r.counts.fn},
                   {"tn", r.counts.tn},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"f1", r.f1}});
  }
  return {{"cells", std::move(out)}};
}

std::string MetricsTable::render_text() const {
  // Groups follow the first appearance of each training dataset.
  std::vector<std::string> groups;
  for (const MetricsReport& r : rows) {
    if (std::find(groups.begin(), groups.end(), r.cell.trained_on) == groups.end()) {
      groups.push_back(r.cell.trained_on);
    }
  }
  std::string out;
  for (const std::string& g : groups) {
    out += fmt::format("fine-tuned on {}\n", g);
    out += fmt::format("  {:<12} {:<8} {:>9} {:>9} {:>9}\n", "tested on", "strategy", "precision",
                       "recall", "f1");
    for (const MetricsReport& r : rows) {
      if (r.cell.trained_on != g) continue;
      out += fmt::format("  {:<12} {:<8} {:>9.4f} {:>9.4f} {:>9.4f}\n", r.cell.tested_on,
                         r.cell.strategy, r.precision, r.recall, r.f1);
    }
  }
  return out;
}

std::vector<EvalCell> cells_from_json(const json& doc) {
  std::vector<EvalCell> cells;
  try {
    for (const json& c : doc.at("cells")) {
      cells.push_back({{c.at("trained_on").get<std::string>(), c.at("tested_on").get<std::string>(),
                        c.at("strategy").get<std::string>()},
                       c.at("labels").get<std::vector<int>>(),
                       c.at("predictions").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed cells document: ") + e.what());
  }
  return cells;
}

}  // namespace vulnpipe::metrics
