#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpipe/error.hpp"

namespace vulnpipe::extraction {

/// Where a file came from. `commit_id` may be empty for plain directory trees.
struct Provenance {
  std::string repo_url;
  std::string commit_id;
};

struct SourceFile {
  std::string repo_url;
  std::string commit_id;
  std::string path;     // relative, '/'-separated
  std::string content;  // UTF-8; each invalid byte replaced by '?'
};

/// Identifies the file a span was cut from.
struct SourceRef {
  std::string repo_url;
  std::string commit_id;
  std::string path;

  friend auto operator<=>(const SourceRef&, const SourceRef&) = default;
};

struct FunctionSpan {
  SourceRef source;
  std::optional<std::string> name;  // absent for anonymous functions
  int start_line = 0;               // 1-based, inclusive
  int end_line = 0;
  std::size_t start_byte = 0;       // [start_byte, end_byte) into the file content
  std::size_t end_byte = 0;
  std::string body;
  std::vector<std::string> tokens;

  friend bool operator==(const FunctionSpan&, const FunctionSpan&) = default;
};

struct ExtractionConfig {
  std::string language = "php";
  std::vector<std::string> extensions{"php"};
  /// fnmatch(3) patterns tested against every path component and the whole
  /// relative path; matching directories are not descended into.
  std::vector<std::string> ignore{".git", "vendor", "node_modules"};
  bool include_methods = true;
  /// When false, closures and functions declared inside another function
  /// stay part of the enclosing span.
  bool nested_functions = false;
};

struct FileSet {
  std::vector<SourceFile> files;
  std::vector<Diagnostic> warnings;
};

/// Lists matching files under `root` in lexicographic path order.
/// Throws IoError if `root` is not a readable directory.
FileSet enumerate_files(const std::filesystem::path& root, const ExtractionConfig& cfg,
                        const Provenance& provenance = {});

/// Replaces every byte that is not part of a well-formed UTF-8 sequence
/// with '?', so byte offsets are preserved.
std::string sanitize_utf8(std::string_view bytes);

/// Parses one file and returns its function spans ordered by start_byte.
/// Syntax errors are tolerated; throws DataError if the parser gives up
/// on the file entirely or the language is unknown.
std::vector<FunctionSpan> extract_functions(const SourceFile& file,
                                            const ExtractionConfig& cfg = {});

struct ExtractionResult {
  std::vector<FunctionSpan> spans;
  std::vector<Diagnostic> errors;
};

/// Extracts every file, optionally on `jobs` threads. Output order follows
/// the input file order whatever the completion order.
ExtractionResult extract_all(std::span<const SourceFile> files, const ExtractionConfig& cfg,
                             unsigned jobs = 1);

/// True when the closed line intervals [a1, a2] and [b1, b2] intersect.
constexpr bool lines_overlap(int a1, int a2, int b1, int b2) noexcept {
  return a1 <= b2 && b1 <= a2;
}

}  // namespace vulnpipe::extraction
