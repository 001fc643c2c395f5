#include "generators.hpp"

#include <stdlib.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "oracles.hpp"

namespace vulnpipe::testing {

namespace fs = std::filesystem;
using extraction::FunctionSpan;

namespace {

constexpr std::array<const char*, 16> kCommon{"$x", "=", ";", "(", ")", "{", "}", "return",
                                              "if", "->", "$this", ",", "array", "+", ".", "null"};

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

FunctionSpan make_span(std::vector<std::string> tokens) {
  FunctionSpan s;
  s.body = join(tokens);
  s.tokens = std::move(tokens);
  return s;
}

}  // namespace

DedupCorpus make_dedup_corpus(std::uint64_t seed, std::size_t total, std::size_t clones,
                              std::size_t near_misses) {
  Rng rng(seed);
  std::size_t next_unique = 0;
  auto fresh = [&] { return fmt::format("u{}_{}", seed, next_unique++); };

  const std::size_t base_count = total - clones - near_misses;
  std::vector<std::vector<std::string>> bodies;
  bodies.reserve(total);
  for (std::size_t i = 0; i < base_count; ++i) {
    const std::size_t len = 60 + rng.below(61);
    std::vector<std::string> toks;
    for (std::size_t k = 0; k < len; ++k) {
      toks.push_back(rng.below(10) < 3 ? kCommon[rng.below(kCommon.size())] : fresh());
    }
    bodies.push_back(std::move(toks));
  }

  // Distinct originals for every planted copy.
  const std::vector<std::size_t> originals = rng.sample(base_count, clones + near_misses);
  std::vector<std::size_t> order(originals.begin(), originals.end());
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::pair<std::size_t, std::size_t>> planted;  // (original, copy) in body ids
  for (std::size_t c = 0; c < clones + near_misses; ++c) {
    const std::size_t orig = order[c];
    std::vector<std::string> copy = bodies[orig];
    if (c < clones) {
      // Same token set: swap two tokens near the end.
      std::swap(copy[copy.size() - 1], copy[copy.size() - 3]);
    } else {
      // Replace unique tokens from the end: first until Jaccard <= 0.98,
      // then up to `extra` more while it stays >= 0.90.
      std::size_t extra = rng.below(3);
      double j = 1.0;
      for (std::size_t k = copy.size(); k-- > 0;) {
        if (copy[k].front() != 'u') continue;
        std::string saved = std::exchange(copy[k], fresh());
        const double next = jaccard_oracle(bodies[orig], copy);
        if (j <= 0.98 && (extra-- == 0 || next < 0.90)) {
          copy[k] = std::move(saved);
          break;
        }
        j = next;
      }
      if (j < 0.90 || j > 0.98) throw std::logic_error("near-miss generator out of range");
    }
    planted.emplace_back(orig, bodies.size());
    bodies.push_back(std::move(copy));
  }

  // Random corpus order.
  std::vector<std::size_t> perm(bodies.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::size_t> position(perm.size());
  DedupCorpus out;
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    position[perm[pos]] = pos;
    FunctionSpan s = make_span(bodies[perm[pos]]);
    s.source.path = fmt::format("f{:03}.php", pos);
    s.name = fmt::format("fn{}", pos);
    s.start_line = 1;
    s.end_line = 1;
    out.spans.push_back(std::move(s));
  }
  for (std::size_t c = 0; c < planted.size(); ++c) {
    auto a = position[planted[c].first];
    auto b = position[planted[c].second];
    if (a > b) std::swap(a, b);
    (c < clones ? out.clones : out.near_misses).emplace_back(a, b);
  }
  return out;
}

FusionCorpus make_fusion_corpus(std::uint64_t seed, std::size_t functions, std::size_t findings) {
  Rng rng(seed);
  constexpr std::array<const char*, 5> kFiles{"src/a.php", "src/b.php", "lib/c.php", "d.php",
                                              "web/e.php"};
  constexpr std::array<annotation::Severity, 8> kAll{
      annotation::Severity::SemgrepInfo,  annotation::Severity::SemgrepWarning,
      annotation::Severity::SemgrepError, annotation::Severity::SonarInfo,
      annotation::Severity::SonarMinor,   annotation::Severity::SonarMajor,
      annotation::Severity::SonarCritical, annotation::Severity::SonarBlocker};

  FusionCorpus out;
  for (std::size_t i = 0; i < functions; ++i) {
    FunctionSpan s;
    s.source.path = kFiles[rng.below(kFiles.size())];
    s.start_line = 1 + static_cast<int>(rng.below(200));
    s.end_line = s.start_line + static_cast<int>(rng.below(30));
    s.name = fmt::format("f{}", i);
    out.functions.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < findings; ++i) {
    annotation::Finding f;
    f.severity = kAll[rng.below(kAll.size())];
    f.tool = annotation::tool_of(f.severity);
    f.rule_id = fmt::format("rule{}", rng.below(10));
    f.path = rng.below(10) == 0 ? "unrelated.php" : kFiles[rng.below(kFiles.size())];
    f.start_line = 1 + static_cast<int>(rng.below(230));
    f.end_line = f.start_line + static_cast<int>(rng.below(6));
    out.findings.push_back(std::move(f));
  }
  return out;
}

std::vector<dataset::DatasetRecord> make_records(std::uint64_t seed, std::size_t n, double vuln_share) {
  Rng rng(seed);
  std::vector<dataset::DatasetRecord> out;
  out.reserve(n);
  const auto cutoff = static_cast<std::uint64_t>(vuln_share * 1000.0);
  for (std::size_t i = 0; i < n; ++i) {
    dataset::DatasetRecord r;
    r.url = fmt::format("https://example.org/repo{}.git", rng.below(5));
    r.commit_id = fmt::format("{:016x}{:016x}", rng.engine()(), rng.engine()());
    r.file_path = fmt::format("src/file{}.php", i);
    r.start_line = 1 + static_cast<int>(rng.below(500));
    r.end_line = r.start_line + static_cast<int>(rng.below(80));
    if (rng.below(1000) < cutoff) {
      switch (rng.below(4)) {
        case 0: r.major = 1 + static_cast<int>(rng.below(3)); break;
        case 1: r.critical = 1; break;
        case 2: r.blocker = 1; break;
        default: r.error = 1 + static_cast<int>(rng.below(2)); break;
      }
      r.vulnerable = 1;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<dataset::DatasetRecord> make_awkward_records(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  constexpr std::array<const char*, 12> kPieces{",", "\"", "\n", "\r\n", "é", "漢字", " ", "a",
                                               "''", "\"\"", "x,y", "path/to"};
  auto text = [&] {
    std::string s;
    const std::size_t parts = rng.below(6);
    for (std::size_t i = 0; i < parts; ++i) s += kPieces[rng.below(kPieces.size())];
    return s;
  };
  auto count = [&] { return static_cast<int>(rng.below(4)); };
  std::vector<dataset::DatasetRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    dataset::DatasetRecord r;
    r.url = text();
    r.commit_id = text();
    r.file_path = text() + std::to_string(i);
    r.start_line = 1 + static_cast<int>(rng.below(100000));
    r.end_line = r.start_line + static_cast<int>(rng.below(1000));
    r.major = count();
    r.critical = count();
    r.blocker = count();
    r.error = count();
    r.vulnerable = r.qualifying_count() > 0 ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_php_tree(const fs::path& root, std::uint64_t seed, std::size_t files) {
  Rng rng(seed);
  constexpr std::array<const char*, 8> kCalls{"strlen", "trim", "json_encode", "array_map",
                                              "count", "sprintf", "intval", "str_replace"};
  std::vector<std::string> emitted;
  std::size_t fn_id = 0;

  auto function = [&] {
    const std::string name = fmt::format("handler_{}", fn_id++);
    std::string body = fmt::format("function {}($request, $options = [])\n{{\n", name);
    const std::size_t stmts = 4 + rng.below(6);
    for (std::size_t s = 0; s < stmts; ++s) {
      const auto v = rng.below(1000);
      switch (rng.below(4)) {
        case 0:
          body += fmt::format("    $v{} = {}($request['k{}']);\n", v, kCalls[rng.below(kCalls.size())], v);
          break;
        case 1:
          body += fmt::format("    if ($options['f{}'] > {}) {{\n        return null;\n    }}\n", v,
                              rng.below(50));
          break;
        case 2:
          body += fmt::format("    $out[] = \"row {}\" . $request['id'];\n", v);
          break;
        default:
          body += "    $marker = VULN_MARKER;\n";
          break;
      }
    }
    body += "    return $request;\n}\n";
    return body;
  };

  for (std::size_t f = 0; f < files; ++f) {
    const fs::path file = root / fmt::format("pkg{}", f % 4) / fmt::format("file{}.php", f);
    fs::create_directories(file.parent_path());
    std::string text = "<?php\n\n";
    const std::size_t count = 2 + rng.below(3);
    for (std::size_t i = 0; i < count; ++i) {
      std::string fn = !emitted.empty() && rng.below(6) == 0
                           ? emitted[rng.below(emitted.size())]  // verbatim clone
                           : function();
      emitted.push_back(fn);
      text += fn + "\n";
    }
    std::ofstream(file, std::ios::binary) << text;
  }
}

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "vulnpipe-test-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path fixtures_dir() { return VULNPIPE_FIXTURES_DIR; }

}  // namespace vulnpipe::testing
