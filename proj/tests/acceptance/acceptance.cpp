// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <vulnpipe/annotation.hpp>
#include <vulnpipe/dataset.hpp>
#include <vulnpipe/dedup.hpp>
#include <vulnpipe/io.hpp>
#include <vulnpipe/metrics.hpp>
#include <vulnpipe/random.hpp>
#include <vulnpipe/serialization.hpp>

#include "cli.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vulnpipe;
using testing::TempDir;

// Collects failure reasons for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  [[nodiscard]] bool ok() const { return count_ == 0; }
  [[nodiscard]] std::string summary() const {
    std::string s = fmt::format("{} failure(s)", count_);
    for (const auto& f : failures_) s += "; " + f;
    return s;
  }
  std::string note;

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vulnpipe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void dedup_oracle(Check& c) {
  using clock = std::chrono::steady_clock;
  clock::duration spent{};
  const dedup::DedupConfig cfg;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto corpus = testing::make_dedup_corpus(seed, 200, 5, 5);
    const auto t0 = clock::now();
    const auto report = dedup::dedup_corpus(corpus.spans, cfg);
    spent += clock::now() - t0;

    std::set<std::size_t> planted;
    for (const auto& [orig, copy] : corpus.clones) planted.insert(copy);
    std::set<std::size_t> removed;
    std::vector<testing::OracleRemoval> got;
    for (const auto& r : report.removed) {
      removed.insert(r.removed);
      got.push_back({r.removed, r.representative});
    }
    c.expect(removed == planted, fmt::format("seed {}: removed set differs from planted clones", seed));
    c.expect(got == testing::dedup_oracle(corpus.spans, cfg.window_size, cfg.jaccard_threshold),
             fmt::format("seed {}: differs from brute-force oracle", seed));
    for (const auto& [a, b] : corpus.near_misses) {
      c.expect(!removed.contains(b), fmt::format("seed {}: near-miss {} removed", seed, b));
    }
  }
  const double secs = std::chrono::duration<double>(spent).count();
  c.expect(secs < 10.0, fmt::format("took {:.2f} s", secs));
  c.note = fmt::format("50 corpora in {:.2f} s", secs);
}

void fusion_oracle(Check& c) {
  using annotation::Severity;
  const auto filter = annotation::SeverityFilter::defaults();
  c.expect(filter.qualifying() == std::set<Severity>{Severity::SonarMajor, Severity::SonarCritical,
                                                     Severity::SonarBlocker, Severity::SemgrepError},
           "default qualifying set");
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto corpus = testing::make_fusion_corpus(seed, 100, 50);
    const auto fused = annotation::fuse_annotations(corpus.functions, corpus.findings, filter);
    const auto oracle = testing::fusion_oracle(corpus.functions, corpus.findings, filter.qualifying());
    bool same = fused.functions.size() == oracle.size();
    for (std::size_t i = 0; same && i < oracle.size(); ++i) {
      same = fused.functions[i].counts == oracle[i].counts &&
             fused.functions[i].vulnerable == oracle[i].vulnerable;
    }
    c.expect(same, fmt::format("seed {}: labels or counts differ from oracle", seed));
  }

  // Sub-threshold findings are counted but never label a function.
  extraction::FunctionSpan fn;
  fn.source.path = "a.php";
  fn.start_line = 10;
  fn.end_line = 20;
  auto finding = [](annotation::Tool tool, Severity s, int line) {
    return annotation::Finding{tool, "r", s, "a.php", line, line};
  };
  const std::vector<annotation::Finding> minor{
      finding(annotation::Tool::SonarQube, Severity::SonarInfo, 11),
      finding(annotation::Tool::SonarQube, Severity::SonarMinor, 12),
      finding(annotation::Tool::Semgrep, Severity::SemgrepInfo, 13),
      finding(annotation::Tool::Semgrep, Severity::SemgrepWarning, 14)};
  const std::vector<extraction::FunctionSpan> fns{fn};
  const auto low = annotation::fuse_annotations(fns, minor, filter);
  c.expect(!low.functions[0].vulnerable && low.functions[0].counts.size() == 4,
           "non-qualifying findings must not label");
  for (Severity s : filter.qualifying()) {
    std::vector<annotation::Finding> one = minor;
    one.push_back(finding(annotation::tool_of(s), s, 15));
    c.expect(annotation::fuse_annotations(fns, one, filter).functions[0].vulnerable,
             fmt::format("{} must label", annotation::severity_key(s)));
  }
}

void split_balance(Check& c) {
  using dataset::BalanceStrategy;
  using dataset::Partition;
  for (std::size_t n : {10U, 103U, 10000U}) {
    const auto records = testing::make_records(n, n, 0.3);
    const auto split = dataset::split(records, {}, 42);
    c.expect(split.assignment.size() == n, fmt::format("N={}: assignment size", n));
    const std::size_t sizes[] = {split.count(Partition::Train), split.count(Partition::Val),
                                 split.count(Partition::Test)};
    c.expect(sizes[0] + sizes[1] + sizes[2] == n, fmt::format("N={}: not a partition", n));
    const double quota[] = {0.8, 0.1, 0.1};
    for (int p = 0; p < 3; ++p) {
      c.expect(std::abs(static_cast<double>(sizes[p]) - quota[p] * static_cast<double>(n)) <= 1.0,
               fmt::format("N={}: partition {} size {}", n, p, sizes[p]));
    }
    const json manifest = dataset::split_manifest(records, split);
    std::set<std::string> seen;
    std::size_t listed = 0;
    for (const char* part : {"train", "val", "test"}) {
      for (const auto& id : manifest.at(part)) {
        seen.insert(id.get<std::string>());
        ++listed;
      }
    }
    c.expect(seen.size() == n && listed == n, fmt::format("N={}: ids not disjoint and covering", n));

    if (n < 100) continue;
    std::vector<dataset::DatasetRecord> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (split.assignment[i] == Partition::Train) train.push_back(records[i]);
    }
    auto classes = [](const std::vector<dataset::DatasetRecord>& rs) {
      const auto v = static_cast<std::size_t>(
          std::count_if(rs.begin(), rs.end(), [](const auto& r) { return r.vulnerable == 1; }));
      return std::pair{v, rs.size() - v};
    };
    const auto [nv, nn] = classes(train);

    const auto ursc = dataset::balance(train, BalanceStrategy::relative_undersample(), 7);
    const auto [uv, un] = classes(ursc.records);
    c.expect(uv == un && uv == std::min(nv, nn), fmt::format("N={}: URSC classes {}/{}", n, uv, un));

    const std::size_t m = std::min(nv, nn) / 2;
    const auto usc = dataset::balance(train, BalanceStrategy::global_undersample(m), 7);
    const auto [sv, sn] = classes(usc.records);
    c.expect(sv == m && sn == m, fmt::format("N={}: USC classes {}/{} want {}", n, sv, sn, m));

    const auto wlf = dataset::balance(train, BalanceStrategy::weighted_loss(), 7);
    c.expect(wlf.records == train && wlf.weights.has_value(), fmt::format("N={}: WLF resampled", n));
    if (wlf.weights) {
      const double lhs = wlf.weights->vulnerable * static_cast<double>(nv);
      const double rhs = wlf.weights->non_vulnerable * static_cast<double>(nn);
      c.expect(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)),
               fmt::format("N={}: WLF {} vs {}", n, lhs, rhs));
    }

    for (const auto& strategy : {BalanceStrategy::relative_undersample(),
                                 BalanceStrategy::global_undersample(m),
                                 BalanceStrategy::weighted_loss()}) {
      const auto bs = dataset::balance_split(records, split, strategy, 7);
      c.expect(bs.manifest.at("val") == manifest.at("val") &&
                   bs.manifest.at("test") == manifest.at("test"),
               fmt::format("N={} {}: VAL/TEST changed", n, dataset::to_string(strategy.kind)));
    }
  }
}

void metrics_prf(Check& c) {
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const auto r = metrics::prf({2, 1, 2, 0});
  c.expect(near(r.precision, 2.0 / 3.0) && near(r.recall, 0.5) && near(r.f1, 4.0 / 7.0),
           "TP=2 FP=1 FN=2");
  const auto zero = metrics::prf({0, 0, 0, 7});
  c.expect(zero.precision == 0.0 && zero.recall == 0.0 && zero.f1 == 0.0, "all-negative table");
  const auto no_pred = metrics::prf({0, 0, 3, 1});
  c.expect(no_pred.precision == 0.0 && no_pred.recall == 0.0 && no_pred.f1 == 0.0,
           "no positive predictions");
  const auto no_tp = metrics::prf({0, 4, 0, 1});
  c.expect(no_tp.precision == 0.0 && no_tp.recall == 0.0 && no_tp.f1 == 0.0, "no positives");

  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const metrics::ConfusionCounts t{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    const auto m = metrics::prf(t);
    const double lo = std::min(m.precision, m.recall);
    const double hi = std::max(m.precision, m.recall);
    c.expect(m.f1 >= lo - 1e-12 && m.f1 <= hi + 1e-12,
             fmt::format("table {}: F1 outside [min, max]", i));
    const double denom = static_cast<double>(2 * t.tp + t.fp + t.fn);
    const double direct = t.tp == 0 ? 0.0 : 2.0 * static_cast<double>(t.tp) / denom;
    c.expect(near(m.f1, direct), fmt::format("table {}: F1 != 2TP/(2TP+FP+FN)", i));
  }
}

void review_e2e(Check& c) {
  const fs::path fx = testing::fixtures_dir();
  TempDir dir;
  const auto r = cli({"review", "--repo", (fx / "repo").string(), "--diff", (fx / "pr.diff").string(),
                      "--scorer", "stub", "--out-json", (dir / "review.json").string(), "--out-md",
                      (dir / "review.md").string()});
  c.expect(r.code == cli::kFlagged, fmt::format("exit code {} ({})", r.code, r.err));
  const std::string got_json = io::read_file(dir / "review.json");
  c.expect(got_json == io::read_file(fx / "golden/review.json"), "JSON differs from golden");
  c.expect(io::read_file(dir / "review.md") == io::read_file(fx / "golden/review.md"),
           "markdown differs from golden");
  std::set<std::string> scored;
  for (const auto& f : json::parse(got_json)) scored.insert(f.at("function").get<std::string>());
  c.expect(scored == std::set<std::string>{"logout", "query"}, "scored functions");
}

// Runs extract..balance plus review in `dir`; returns the produced payloads.
std::vector<std::string> pipeline(const fs::path& tree, const fs::path& report, const fs::path& dir,
                                  const std::string& jobs, Check& c) {
  const fs::path fx = testing::fixtures_dir();
  auto p = [&](const char* name) { return (dir / name).string(); };
  auto step = [&](std::vector<std::string> args) {
    const auto r = cli(std::move(args));
    c.expect(r.code == 0 || r.code == cli::kFlagged, fmt::format("step exit {}: {}", r.code, r.err));
  };
  step({"extract", "--root", tree.string(), "--repo-url", "https://example.org/app.git", "--commit",
        "0123abcd", "--out", p("fns.jsonl"), "--jobs", jobs});
  step({"dedup", "--in", p("fns.jsonl"), "--out", p("kept.jsonl"), "--report", p("dedup.json")});
  step({"annotate", "--functions", p("kept.jsonl"), "--semgrep", report.string(), "--out",
        p("ann.jsonl")});
  step({"dataset", "build", "--in", p("ann.jsonl"), "--out", p("data.csv")});
  step({"split", "--csv", p("data.csv"), "--seed", "11", "--out", p("split.json")});
  step({"balance", "--csv", p("data.csv"), "--split", p("split.json"), "--strategy", "URSC",
        "--seed", "11", "--out", p("balance.json"), "--out-train", p("train.csv")});
  step({"review", "--repo", (fx / "repo").string(), "--diff", (fx / "pr.diff").string(), "--scorer",
        "stub", "--out-json", p("review.json"), "--out-md", p("review.md")});
  std::vector<std::string> out;
  for (const char* f : {"fns.jsonl", "kept.jsonl", "dedup.json", "ann.jsonl", "data.csv",
                        "split.json", "balance.json", "train.csv", "review.json", "review.md"}) {
    out.push_back(fs::exists(dir / f) ? io::read_file(dir / f) : std::string());
  }
  return out;
}

void determinism(Check& c) {
  TempDir work;
  testing::write_php_tree(work / "tree", 99, 30);

  // Semgrep report flagging every third extracted function.
  const auto ex = cli({"extract", "--root", (work / "tree").string(), "--out",
                       (work / "fns.jsonl").string()});
  c.expect(ex.code == 0, "extract: " + ex.err);
  const auto spans = serialization::read_spans(io::read_file(work / "fns.jsonl"));
  json results = json::array();
  for (std::size_t i = 0; i < spans.size(); i += 3) {
    results.push_back({{"check_id", "php.test.rule"},
                       {"path", spans[i].source.path},
                       {"start", {{"line", spans[i].start_line}}},
                       {"end", {{"line", spans[i].start_line}}},
                       {"extra", {{"severity", "ERROR"}}}});
  }
  io::write_file(work / "semgrep.json", json{{"results", results}}.dump());

  TempDir a, b;
  const auto first = pipeline(work / "tree", work / "semgrep.json", a.path(), "1", c);
  const auto second = pipeline(work / "tree", work / "semgrep.json", b.path(), "4", c);
  const char* names[] = {"fns.jsonl", "kept.jsonl", "dedup.json", "ann.jsonl", "data.csv",
                         "split.json", "balance.json", "train.csv", "review.json", "review.md"};
  for (std::size_t i = 0; i < first.size(); ++i) {
    c.expect(!first[i].empty(), fmt::format("{} missing", names[i]));
    c.expect(first[i] == second[i], fmt::format("{} differs between runs", names[i]));
  }
  c.note = fmt::format("{} functions, {} payloads", spans.size(), first.size());
}

void csv_round_trip(Check& c) {
  const auto records = testing::make_awkward_records(31337, 1000);
  const std::string once = dataset::write_csv(records);
  const auto back = dataset::read_csv(once);
  c.expect(back == records, "records changed by read");
  c.expect(dataset::write_csv(back) == once, "second write differs");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"dedup-oracle-equivalence", dedup_oracle},
      {"fusion-oracle-equivalence", fusion_oracle},
      {"split-balance-properties", split_balance},
      {"metrics-prf", metrics_prf},
      {"review-end-to-end", review_e2e},
      {"pipeline-determinism", determinism},
      {"csv-round-trip", csv_round_trip},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok()) {
      std::cout << "PASS " << name << (c.note.empty() ? "" : " (" + c.note + ")") << '\n';
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << c.summary() << '\n';
    }
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
