#include "vulnpipe/extraction.hpp"

#include <fnmatch.h>
#include <tree_sitter/api.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <sstream>
#include <string_view>
#include <thread>

#include "vulnpipe/tokenizer.hpp"

extern "C" const TSLanguage* tree_sitter_php();

namespace vulnpipe::extraction {
namespace fs = std::filesystem;

namespace {

// Grammar registry. A new language is one more entry here plus its parser sources.
struct Grammar {
  std::string_view name;
  const TSLanguage* (*language)();
  std::vector<std::string_view> free_functions;
  std::vector<std::string_view> methods;
  std::vector<std::string_view> closures;
};

const Grammar* find_grammar(std::string_view name) {
  static const Grammar kGrammars[] = {
      {"php", tree_sitter_php, {"function_definition"}, {"method_declaration"},
       {"anonymous_function", "arrow_function"}},
  };
  for (const Grammar& g : kGrammars) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

struct ParserDeleter {
  void operator()(TSParser* p) const noexcept { ts_parser_delete(p); }
};
struct TreeDeleter {
  void operator()(TSTree* t) const noexcept { ts_tree_delete(t); }
};
using ParserPtr = std::unique_ptr<TSParser, ParserDeleter>;
using TreePtr = std::unique_ptr<TSTree, TreeDeleter>;

enum class NodeRole { Other, FreeFunction, Method, Closure };

NodeRole classify(const Grammar& g, std::string_view type) {
  auto in = [type](const std::vector<std::string_view>& v) {
    return std::find(v.begin(), v.end(), type) != v.end();
  };
  if (in(g.free_functions)) return NodeRole::FreeFunction;
  if (in(g.methods)) return NodeRole::Method;
  if (in(g.closures)) return NodeRole::Closure;
  return NodeRole::Other;
}

bool matches_any(const std::vector<std::string>& globs, const std::string& text) {
  return std::any_of(globs.begin(), globs.end(), [&](const std::string& g) {
    return ::fnmatch(g.c_str(), text.c_str(), 0) == 0;
  });
}

bool is_ignored(const ExtractionConfig& cfg, const fs::path& rel) {
  if (matches_any(cfg.ignore, rel.generic_string())) return true;
  for (const auto& part : rel) {
    if (matches_any(cfg.ignore, part.string())) return true;
  }
  return false;
}

bool has_extension(const ExtractionConfig& cfg, const fs::path& p) {
  std::string ext = p.extension().string();
  if (ext.empty()) return false;
  ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(cfg.extensions.begin(), cfg.extensions.end(), ext) != cfg.extensions.end();
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
  std::string out(bytes);
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  while (i < n) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    unsigned char lo = 0x80;
    unsigned char hi = 0xBF;
    if (b0 < 0x80) {
      ++i;
      continue;
    } else if (b0 >= 0xC2 && b0 <= 0xDF) {
      len = 2;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      if (b0 == 0xE0) lo = 0xA0;  // overlong
      if (b0 == 0xED) hi = 0x9F;  // surrogates
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      if (b0 == 0xF0) lo = 0x90;
      if (b0 == 0xF4) hi = 0x8F;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      const unsigned char min = k == 1 ? lo : 0x80;
      const unsigned char max = k == 1 ? hi : 0xBF;
      ok = b >= min && b <= max;
    }
    if (ok) {
      i += len;
    } else {
      out[i] = '?';
      ++i;
    }
  }
  return out;
}

FileSet enumerate_files(const fs::path& root, const ExtractionConfig& cfg,
                        const Provenance& provenance) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("not a readable directory: " + root.string());
  }
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError("cannot read directory " + root.string() + ": " + ec.message());

  FileSet set;
  std::vector<fs::path> candidates;
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) {
      set.warnings.push_back({root.string(), "directory walk error: " + ec.message()});
      ec.clear();
      continue;
    }
    const fs::path rel = it->path().lexically_relative(root);
    const auto status = it->symlink_status(ec);
    if (ec) {
      set.warnings.push_back({rel.generic_string(), "cannot stat: " + ec.message()});
      ec.clear();
      continue;
    }
    if (fs::is_directory(status)) {
      if (is_ignored(cfg, rel)) it.disable_recursion_pending();
      continue;
    }
    if (!fs::is_regular_file(status) || !has_extension(cfg, rel) || is_ignored(cfg, rel)) {
      continue;
    }
    candidates.push_back(rel);
  }
  std::sort(candidates.begin(), candidates.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });

  for (const fs::path& rel : candidates) {
    std::ifstream in(root / rel, std::ios::binary);
    std::ostringstream buf;
    if (in) buf << in.rdbuf();
    if (!in || in.bad()) {
      set.warnings.push_back({rel.generic_string(), "unreadable file skipped"});
      continue;
    }
    set.files.push_back({provenance.repo_url, provenance.commit_id, rel.generic_string(),
                         sanitize_utf8(buf.str())});
  }
  return set;
}

std::vector<FunctionSpan> extract_functions(const SourceFile& file, const ExtractionConfig& cfg) {
  const Grammar* grammar = find_grammar(cfg.language);
  if (grammar == nullptr) throw DataError("unsupported language: " + cfg.language);

  ParserPtr parser(ts_parser_new());
  if (!ts_parser_set_language(parser.get(), grammar->language())) {
    throw DataError("grammar ABI mismatch for " + cfg.language);
  }
  const std::string& src = file.content;
  TreePtr tree(ts_parser_parse_string(parser.get(), nullptr, src.data(),
                                      static_cast<uint32_t>(src.size())));
  if (!tree) throw DataError(file.path + ": parser produced no tree");

  const SourceRef ref{file.repo_url, file.commit_id, file.path};
  std::vector<FunctionSpan> spans;

  // Iterative preorder walk; `nested` marks nodes inside a function-like node.
  std::vector<std::pair<TSNode, bool>> stack{{ts_tree_root_node(tree.get()), false}};
  while (!stack.empty()) {
    auto [node, nested] = stack.back();
    stack.pop_back();

    const NodeRole role = classify(*grammar, ts_node_type(node));
    bool descend = true;
    if (role != NodeRole::Other) {
      bool emit = true;
      if (role == NodeRole::Method && !cfg.include_methods) emit = false;
      if (!cfg.nested_functions && (nested || role == NodeRole::Closure)) emit = false;
      // Abstract and interface methods have no body to classify.
      if (ts_node_is_null(ts_node_child_by_field_name(node, "body", 4))) emit = false;

      if (emit) {
        FunctionSpan span;
        span.source = ref;
        const TSNode name = ts_node_child_by_field_name(node, "name", 4);
        if (!ts_node_is_null(name)) {
          span.name = src.substr(ts_node_start_byte(name),
                                 ts_node_end_byte(name) - ts_node_start_byte(name));
        }
        span.start_byte = ts_node_start_byte(node);
        span.end_byte = ts_node_end_byte(node);
        const TSPoint start = ts_node_start_point(node);
        TSPoint end = ts_node_end_point(node);
        if (end.column == 0 && end.row > start.row) --end.row;
        span.start_line = static_cast<int>(start.row) + 1;
        span.end_line = static_cast<int>(end.row) + 1;
        span.body = src.substr(span.start_byte, span.end_byte - span.start_byte);
        span.tokens = tokenize(span.body);
        if (span.end_byte > span.start_byte) spans.push_back(std::move(span));
      }
      descend = cfg.nested_functions;
      nested = true;
    }
    if (!descend) continue;
    for (uint32_t i = ts_node_child_count(node); i-- > 0;) {
      stack.emplace_back(ts_node_child(node, i), nested);
    }
  }

  std::sort(spans.begin(), spans.end(), [](const FunctionSpan& a, const FunctionSpan& b) {
    return a.start_byte < b.start_byte || (a.start_byte == b.start_byte && a.end_byte > b.end_byte);
  });
  return spans;
}

ExtractionResult extract_all(std::span<const SourceFile> files, const ExtractionConfig& cfg,
                             unsigned jobs) {
  struct Slot {
    std::vector<FunctionSpan> spans;
    std::optional<Diagnostic> error;
  };
  std::vector<Slot> slots(files.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        slots[i].spans = extract_functions(files[i], cfg);
      } catch (const Error& e) {
        slots[i].error = Diagnostic{files[i].path, e.what()};
      }
    }
  };

  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(std::max<std::size_t>(1, files.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  ExtractionResult result;
  for (Slot& slot : slots) {
    std::move(slot.spans.begin(), slot.spans.end(), std::back_inserter(result.spans));
    if (slot.error) result.errors.push_back(std::move(*slot.error));
  }
  return result;
}

}  // namespace vulnpipe::extraction
