#pragma once

// Seeded synthetic inputs shared by unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/dataset.hpp>
#include <vulnpipe/extraction.hpp>
#include <vulnpipe/random.hpp>

namespace vulnpipe::testing {

struct DedupCorpus {
  std::vector<extraction::FunctionSpan> spans;
  std::vector<std::pair<std::size_t, std::size_t>> clones;     // (original, copy), original < copy
  std::vector<std::pair<std::size_t, std::size_t>> near_misses;
};

/// `total` functions of 60-120 unique random tokens, including `clones`
/// planted exact-set copies (Jaccard 1) and `near_misses` copies with 2-5
/// tokens replaced (Jaccard in [0.90, 0.98]), all sharing >= 30-token runs.
DedupCorpus make_dedup_corpus(std::uint64_t seed, std::size_t total = 200, std::size_t clones = 5,
                              std::size_t near_misses = 5);

struct FusionCorpus {
  std::vector<extraction::FunctionSpan> functions;
  std::vector<annotation::Finding> findings;
};

FusionCorpus make_fusion_corpus(std::uint64_t seed, std::size_t functions = 100,
                                std::size_t findings = 50);

/// Records with distinct identities and roughly `vuln_share` vulnerable.
std::vector<dataset::DatasetRecord> make_records(std::uint64_t seed, std::size_t n,
                                                 double vuln_share = 0.3);

/// Records whose text fields contain commas, quotes, newlines and UTF-8.
std::vector<dataset::DatasetRecord> make_awkward_records(std::uint64_t seed, std::size_t n);

/// Writes a PHP source tree of `files` files with a few functions each;
/// some bodies are copies so dedup has work to do.
void write_php_tree(const std::filesystem::path& root, std::uint64_t seed, std::size_t files);

/// Scoped temporary directory.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixtures_dir();

}  // namespace vulnpipe::testing
