#include "cli.hpp"

#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/dataset.hpp>
#include <vulnpipe/dedup.hpp>
#include <vulnpipe/error.hpp>
#include <vulnpipe/extraction.hpp>
#include <vulnpipe/io.hpp>
#include <vulnpipe/metrics.hpp>
#include <vulnpipe/review.hpp>
#include <vulnpipe/scoring.hpp>
#include <vulnpipe/serialization.hpp>

#include "config.hpp"

namespace vulnpipe::cli {

namespace {

using nlohmann::json;

struct Context {
  std::ostream& out;
  std::ostream& err;
  PipelineConfig cfg;
  unsigned jobs = 1;
};

std::string read_input(const std::string& path) {
  return path == "-" ? io::read_stdin() : io::read_file(path);
}

void emit(Context& ctx, const std::optional<std::string>& path, std::string_view bytes) {
  if (path && *path != "-") {
    io::write_file(*path, bytes);
  } else {
    ctx.out << bytes;
  }
}

std::string pretty(const json& j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void warn(Context& ctx, const std::vector<Diagnostic>& diags) {
  for (const Diagnostic& d : diags) {
    if (d.path.empty()) {
      fmt::print(ctx.err, "warning: {}\n", d.message);
    } else {
      fmt::print(ctx.err, "warning: {}: {}\n", d.path, d.message);
    }
  }
}

std::vector<dataset::DatasetRecord> read_dataset(const std::string& path) {
  return dataset::read_csv(read_input(path));
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string root;
  std::string out;
  std::optional<std::string> repo_url;
  std::optional<std::string> commit_id;
  std::optional<std::vector<std::string>> extensions;
};

int do_extract(Context& ctx, const ExtractArgs& a) {
  extraction::Provenance prov = ctx.cfg.provenance;
  if (a.repo_url) prov.repo_url = *a.repo_url;
  if (a.commit_id) prov.commit_id = *a.commit_id;
  extraction::ExtractionConfig ecfg = ctx.cfg.extraction;
  if (a.extensions) ecfg.extensions = *a.extensions;

  const extraction::FileSet files = extraction::enumerate_files(a.root, ecfg, prov);
  warn(ctx, files.warnings);
  const extraction::ExtractionResult res = extraction::extract_all(files.files, ecfg, ctx.jobs);
  warn(ctx, res.errors);
  io::write_file(a.out, serialization::write_spans(res.spans));
  fmt::print(ctx.err, "extracted {} functions from {} files\n", res.spans.size(), files.files.size());
  return kOk;
}

struct DedupArgs {
  std::string in;
  std::string out;
  std::optional<std::string> report;
  std::optional<std::size_t> window;
  std::optional<double> threshold;
};

int do_dedup(Context& ctx, const DedupArgs& a) {
  dedup::DedupConfig dcfg = ctx.cfg.dedup;
  if (a.window) dcfg.window_size = *a.window;
  if (a.threshold) dcfg.jaccard_threshold = *a.threshold;
  dcfg.validate();

  const auto corpus = serialization::read_spans(read_input(a.in));
  const dedup::DedupReport report = dedup::dedup_corpus(corpus, dcfg);
  io::write_file(a.out, serialization::write_spans(dedup::kept_spans(report, corpus)));
  if (a.report) io::write_file(*a.report, pretty(dedup::report_to_json(report, corpus, dcfg)));
  fmt::print(ctx.err, "kept {} of {} functions ({} removed)\n", report.kept.size(), corpus.size(),
             report.removed.size());
  return kOk;
}

struct AnnotateArgs {
  std::string functions;
  std::vector<std::string> semgrep;
  std::vector<std::string> sonarqube;
  std::string out;
  std::optional<std::string> orphans;
  std::optional<std::string> strip_prefix;
  bool lenient = false;
  std::vector<std::string> qualify;
};

int do_annotate(Context& ctx, const AnnotateArgs& a) {
  annotation::ParseOptions popts = ctx.cfg.parse;
  if (a.strip_prefix) popts.strip_prefix = *a.strip_prefix;
  if (a.lenient) popts.strict = false;

  annotation::SeverityFilter filter = ctx.cfg.severity;
  if (!a.qualify.empty()) {
    std::set<annotation::Severity> q;
    for (const std::string& key : a.qualify) {
      const auto s = annotation::parse_severity_key(key);
      if (!s) throw UsageError("unknown severity '" + key + "' (expected e.g. sonarqube:Major)");
      q.insert(*s);
    }
    filter = annotation::SeverityFilter(std::move(q));
  }

  std::vector<annotation::Finding> findings;
  auto load = [&](annotation::Tool tool, const std::vector<std::string>& paths) {
    for (const std::string& p : paths) {
      annotation::ParsedReport rep = annotation::parse_report(tool, read_input(p), popts);
      warn(ctx, rep.warnings);
      findings.insert(findings.end(), rep.findings.begin(), rep.findings.end());
    }
  };
  load(annotation::Tool::Semgrep, a.semgrep);
  load(annotation::Tool::SonarQube, a.sonarqube);

  const auto functions = serialization::read_spans(read_input(a.functions));
  const annotation::FusionResult fused = annotation::fuse_annotations(functions, findings, filter);
  io::write_file(a.out, serialization::write_annotated(fused.functions));
  if (a.orphans) io::write_file(*a.orphans, serialization::write_findings(fused.orphans));

  const auto vulnerable = std::count_if(fused.functions.begin(), fused.functions.end(),
                                        [](const auto& f) { return f.vulnerable; });
  fmt::print(ctx.err, "{} findings, {} of {} functions vulnerable, {} orphan findings\n",
             findings.size(), vulnerable, fused.functions.size(), fused.orphans.size());
  return kOk;
}

struct DatasetBuildArgs {
  std::string in;
  std::string out;
};

int do_dataset_build(Context& ctx, const DatasetBuildArgs& a) {
  const auto annotated = serialization::read_annotated(read_input(a.in));
  std::vector<dataset::DatasetRecord> records;
  records.reserve(annotated.size());
  for (const auto& fn : annotated) records.push_back(dataset::to_record(fn));
  io::write_file(a.out, dataset::write_csv(records));
  fmt::print(ctx.err, "wrote {} records\n", records.size());
  return kOk;
}

struct DatasetValidateArgs {
  std::string csv;
  std::optional<std::string> report;
  bool no_provenance = false;
};

int do_dataset_validate(Context& ctx, const DatasetValidateArgs& a) {
  const auto records = read_dataset(a.csv);
  const dataset::QualityReport report =
      dataset::dataset_quality_report(records, {.require_provenance = !a.no_provenance});
  emit(ctx, a.report, pretty(report.to_json()));
  for (const auto& check : report.checks) {
    fmt::print(ctx.err, "{}: {}\n", check.attribute, check.passed ? "ok" : "FAILED");
  }
  return report.passed() ? kOk : kData;
}

struct SplitArgs {
  std::string csv;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> train, val, test;
};

int do_split(Context& ctx, const SplitArgs& a) {
  dataset::SplitRatios ratios = ctx.cfg.ratios;
  if (a.train) ratios.train = *a.train;
  if (a.val) ratios.val = *a.val;
  if (a.test) ratios.test = *a.test;
  const std::uint64_t seed = a.seed.value_or(ctx.cfg.seed);

  const auto records = read_dataset(a.csv);
  const dataset::SplitAssignment assignment = dataset::split(records, ratios, seed);
  io::write_file(a.out, pretty(dataset::split_manifest(records, assignment)));
  fmt::print(ctx.err, "train {} / val {} / test {}\n", assignment.count(dataset::Partition::Train),
             assignment.count(dataset::Partition::Val), assignment.count(dataset::Partition::Test));
  return kOk;
}

struct BalanceArgs {
  std::string csv;
  std::string split;
  std::string out;
  std::optional<std::string> out_train;
  std::optional<std::string> strategy;
  std::optional<std::size_t> global_min;
  std::optional<std::uint64_t> seed;
};

int do_balance(Context& ctx, const BalanceArgs& a) {
  dataset::BalanceStrategy strategy = ctx.cfg.balance;
  if (a.strategy) {
    const auto kind = dataset::parse_balance_kind(*a.strategy);
    if (!kind) throw UsageError("unknown strategy '" + *a.strategy + "' (NB, USC, URSC, WLF)");
    strategy.kind = *kind;
  }
  if (a.global_min) strategy.global_min = *a.global_min;
  if (strategy.kind == dataset::BalanceKind::USC && strategy.global_min == 0) {
    throw UsageError("USC needs --global-min >= 1");
  }
  const std::uint64_t seed = a.seed.value_or(ctx.cfg.seed);

  const auto records = read_dataset(a.csv);
  json manifest;
  try {
    manifest = json::parse(read_input(a.split));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: malformed JSON at byte {}", a.split, e.byte));
  }
  const dataset::SplitAssignment assignment = dataset::assignment_from_manifest(records, manifest);
  const dataset::BalancedSplit balanced = dataset::balance_split(records, assignment, strategy, seed);
  io::write_file(a.out, pretty(balanced.manifest));
  if (a.out_train) io::write_file(*a.out_train, dataset::write_csv(balanced.train.records));
  fmt::print(ctx.err, "{}: {} training records\n", dataset::to_string(strategy.kind),
             balanced.train.records.size());
  return kOk;
}

struct EvalArgs {
  std::string cells;
  std::optional<std::string> out;
  std::optional<std::string> text;
};

int do_eval(Context& ctx, const EvalArgs& a) {
  json doc;
  try {
    doc = json::parse(read_input(a.cells));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: malformed JSON at byte {}", a.cells, e.byte));
  }
  const auto cells = metrics::cells_from_json(doc);
  const metrics::MetricsTable table = metrics::cross_domain_matrix(cells);
  emit(ctx, a.out, pretty(table.to_json()));
  if (a.text) emit(ctx, a.text, table.render_text());
  return kOk;
}

struct ReviewArgs {
  std::string repo;
  std::string diff;
  std::optional<std::string> scorer;
  std::optional<double> threshold;
  std::optional<std::string> out_json;
  std::optional<std::string> out_md;
};

int do_review(Context& ctx, const ReviewArgs& a) {
  std::optional<std::string> spec = a.scorer;
  if (!spec) spec = ctx.cfg.scorer;
  if (!spec) {
    if (const char* env = std::getenv(scoring::kScorerUrlEnv); env != nullptr && *env != '\0') {
      spec = env;
    }
  }
  if (!spec) {
    throw UsageError(fmt::format("no scorer given: pass --scorer <url|stub> or set {}",
                                 scoring::kScorerUrlEnv));
  }
  scoring::HttpScorerConfig http;
  http.batch_size = ctx.cfg.batch_size;
  http.timeout = std::chrono::milliseconds(ctx.cfg.timeout_ms);
  if (const char* token = std::getenv(scoring::kScorerTokenEnv); token != nullptr) {
    http.bearer_token = token;
  }
  const auto scorer = scoring::make_scorer(*spec, {ctx.cfg.stub_markers}, http);

  review::ReviewOptions opts;
  opts.threshold = a.threshold.value_or(ctx.cfg.review_threshold);
  opts.extraction = ctx.cfg.extraction;

  const review::ReviewRun run = review::run_review(a.repo, read_input(a.diff), *scorer, opts);
  warn(ctx, run.warnings);
  const review::RenderedReview rendered = review::render_review(run.findings);
  if (a.out_json) io::write_file(*a.out_json, rendered.json);
  if (a.out_md) io::write_file(*a.out_md, rendered.markdown);
  if (!a.out_json && !a.out_md) ctx.out << rendered.markdown;

  const auto flagged = std::count_if(run.findings.begin(), run.findings.end(),
                                     [](const review::ReviewFinding& f) { return f.flagged; });
  fmt::print(ctx.err, "{} changed functions scored, {} flagged\n", run.findings.size(), flagged);
  return flagged > 0 ? kFlagged : kOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return kUsage;
    case ErrorKind::Data:
      return kData;
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::Transport:
      return kUnavailable;
    case ErrorKind::Scoring:
      return kSoftware;
    case ErrorKind::Protocol:
      return kProtocol;
  }
  return kSoftware;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vulnerability dataset pipeline and pull request review", "vulnpipe"};
  app.fallthrough();
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 success, 2 review flagged a function, 64 usage error, 65 data error,\n"
      "69 scorer unreachable, 70 scorer failure, 74 I/O error, 76 scorer protocol error.");

  std::optional<std::string> config_path;
  unsigned jobs = 1;
  app.add_option("--config", config_path, "Pipeline config file");
  app.add_option("-j,--jobs", jobs, "Worker threads for extraction")->check(CLI::Range(1u, 1024u));

  std::function<int(Context&)> action;

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract function spans from a source tree to JSONL");
  extract->add_option("--root", ex.root, "Source tree")->required();
  extract->add_option("--out", ex.out, "Output JSONL")->required();
  extract->add_option("--repo-url", ex.repo_url, "Repository URL recorded on every span");
  extract->add_option("--commit", ex.commit_id, "Commit id recorded on every span");
  extract->add_option("--ext", ex.extensions, "File extensions to include");
  extract->callback([&] { action = [&](Context& c) { return do_extract(c, ex); }; });

  DedupArgs dd;
  auto* dedup = app.add_subcommand("dedup", "Remove near-duplicate functions");
  dedup->add_option("--in", dd.in, "Input spans JSONL, - for stdin")->required();
  dedup->add_option("--out", dd.out, "Kept spans JSONL")->required();
  dedup->add_option("--report", dd.report, "Dedup report JSON");
  dedup->add_option("--window", dd.window, "Window size in tokens");
  dedup->add_option("--threshold", dd.threshold, "Jaccard threshold");
  dedup->callback([&] { action = [&](Context& c) { return do_dedup(c, dd); }; });

  AnnotateArgs an;
  auto* annotate = app.add_subcommand("annotate", "Label functions with static analysis findings");
  annotate->add_option("--functions", an.functions, "Spans JSONL")->required();
  annotate->add_option("--semgrep", an.semgrep, "Semgrep JSON or SARIF report (repeatable)");
  annotate->add_option("--sonarqube", an.sonarqube, "SonarQube issues JSON or SARIF report (repeatable)");
  annotate->add_option("--out", an.out, "Annotated JSONL")->required();
  annotate->add_option("--orphans", an.orphans, "Findings matching no function, JSONL");
  annotate->add_option("--strip-prefix", an.strip_prefix, "Prefix removed from reported paths");
  annotate->add_flag("--lenient", an.lenient, "Drop findings without a path instead of failing");
  annotate->add_option("--qualify", an.qualify,
                       "Qualifying severities, e.g. sonarqube:Major semgrep:Error");
  annotate->callback([&] { action = [&](Context& c) { return do_annotate(c, an); }; });

  auto* ds = app.add_subcommand("dataset", "Build or validate the dataset CSV");
  ds->require_subcommand(1);
  DatasetBuildArgs db;
  auto* build = ds->add_subcommand("build", "Write the dataset CSV from annotated JSONL");
  build->add_option("--in", db.in, "Annotated JSONL")->required();
  build->add_option("--out", db.out, "Dataset CSV")->required();
  build->callback([&] { action = [&](Context& c) { return do_dataset_build(c, db); }; });
  DatasetValidateArgs dv;
  auto* validate = ds->add_subcommand("validate", "Run the quality checks; exit 65 on failure");
  validate->add_option("--csv", dv.csv, "Dataset CSV")->required();
  validate->add_option("--report", dv.report, "Quality report JSON (default stdout)");
  validate->add_flag("--no-provenance", dv.no_provenance, "Do not require url and commit_id");
  validate->callback([&] { action = [&](Context& c) { return do_dataset_validate(c, dv); }; });

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Seeded train/val/test split");
  split->add_option("--csv", sp.csv, "Dataset CSV")->required();
  split->add_option("--out", sp.out, "Split manifest JSON")->required();
  split->add_option("--seed", sp.seed, "Random seed");
  split->add_option("--train", sp.train, "Train ratio");
  split->add_option("--val", sp.val, "Validation ratio");
  split->add_option("--test", sp.test, "Test ratio");
  split->callback([&] { action = [&](Context& c) { return do_split(c, sp); }; });

  BalanceArgs ba;
  auto* balance = app.add_subcommand("balance", "Balance the training partition");
  balance->add_option("--csv", ba.csv, "Dataset CSV")->required();
  balance->add_option("--split", ba.split, "Split manifest JSON")->required();
  balance->add_option("--out", ba.out, "Balance manifest JSON")->required();
  balance->add_option("--out-train", ba.out_train, "Balanced training CSV");
  balance->add_option("--strategy", ba.strategy, "NB, USC, URSC or WLF");
  balance->add_option("--global-min", ba.global_min, "Per-class target for USC");
  balance->add_option("--seed", ba.seed, "Random seed");
  balance->callback([&] { action = [&](Context& c) { return do_balance(c, ba); }; });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Precision, recall and F1 per evaluation cell");
  eval->add_option("--cells", ev.cells, "Cells JSON")->required();
  eval->add_option("--out", ev.out, "Metrics JSON (default stdout)");
  eval->add_option("--text", ev.text, "Plain-text table");
  eval->callback([&] { action = [&](Context& c) { return do_eval(c, ev); }; });

  ReviewArgs rv;
  auto* rev = app.add_subcommand("review", "Score the functions a diff touches");
  rev->add_option("--repo", rv.repo, "Checkout of the source branch")->required();
  rev->add_option("--diff", rv.diff, "Unified diff file, - for stdin")->required();
  rev->add_option("--scorer", rv.scorer,
                  fmt::format("Backend URL or 'stub' (default ${})", scoring::kScorerUrlEnv));
  rev->add_option("--threshold", rv.threshold, "Flag threshold (default 0.5)");
  rev->add_option("--out-json", rv.out_json, "Findings JSON");
  rev->add_option("--out-md", rv.out_md, "Markdown comment (default stdout)");
  rev->callback([&] { action = [&](Context& c) { return do_review(c, rv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Context ctx{out, err, config_path ? load_config(*config_path) : PipelineConfig{}, jobs};
    return action(ctx);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kSoftware;
  }
}

}  // namespace vulnpipe::cli
