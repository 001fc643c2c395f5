#pragma once

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library beyond the plain data types.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/dedup.hpp>
#include <vulnpipe/extraction.hpp>

namespace vulnpipe::testing {

/// True when some run of `w` consecutive tokens occurs in both sequences.
bool shares_window(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   std::size_t w);

/// |A ∩ B| / |A ∪ B| over token sets via std::set; 1 for two empty sets.
double jaccard_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct OracleRemoval {
  std::size_t removed;
  std::size_t representative;

  friend bool operator==(const OracleRemoval&, const OracleRemoval&) = default;
};

/// All-pairs keep-first dedup.
std::vector<OracleRemoval> dedup_oracle(const std::vector<extraction::FunctionSpan>& corpus,
                                        std::size_t window, double threshold);

struct OracleLabel {
  std::map<annotation::Severity, int> counts;
  bool vulnerable = false;
};

/// Every (function, finding) pair checked for same path and line overlap.
std::vector<OracleLabel> fusion_oracle(const std::vector<extraction::FunctionSpan>& functions,
                                       const std::vector<annotation::Finding>& findings,
                                       const std::set<annotation::Severity>& qualifying);

}  // namespace vulnpipe::testing
