#include "oracles.hpp"

#include <algorithm>
#include <set>

namespace vulnpipe::testing {

bool shares_window(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   std::size_t w) {
  if (w == 0 || a.size() < w || b.size() < w) return false;
  for (std::size_t i = 0; i + w <= a.size(); ++i) {
    for (std::size_t j = 0; j + w <= b.size(); ++j) {
      if (std::equal(a.begin() + i, a.begin() + i + w, b.begin() + j)) return true;
    }
  }
  return false;
}

double jaccard_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<std::string> inter;
  std::vector<std::string> uni;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

std::vector<OracleRemoval> dedup_oracle(const std::vector<extraction::FunctionSpan>& corpus,
                                        std::size_t window, double threshold) {
  std::vector<std::size_t> kept;
  std::vector<OracleRemoval> removed;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bool dropped = false;
    for (std::size_t j : kept) {
      if (shares_window(corpus[j].tokens, corpus[i].tokens, window) &&
          jaccard_oracle(corpus[j].tokens, corpus[i].tokens) >= threshold) {
        removed.push_back({i, j});
        dropped = true;
        break;
      }
    }
    if (!dropped) kept.push_back(i);
  }
  return removed;
}

std::vector<OracleLabel> fusion_oracle(const std::vector<extraction::FunctionSpan>& functions,
                                       const std::vector<annotation::Finding>& findings,
                                       const std::set<annotation::Severity>& qualifying) {
  std::vector<OracleLabel> out(functions.size());
  for (std::size_t i = 0; i < functions.size(); ++i) {
    const auto& fn = functions[i];
    for (const auto& f : findings) {
      if (f.path != fn.source.path) continue;
      if (std::max(fn.start_line, f.start_line) > std::min(fn.end_line, f.end_line)) continue;
      ++out[i].counts[f.severity];
      if (qualifying.contains(f.severity)) out[i].vulnerable = true;
    }
  }
  return out;
}

}  // namespace vulnpipe::testing
