#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include <vulnpipe/dataset.hpp>

#include "generators.hpp"

namespace {

using namespace vulnpipe::dataset;
using vulnpipe::testing::make_awkward_records;
using vulnpipe::testing::make_records;

DatasetRecord rec(std::string path, int vulnerable, int start = 1) {
  DatasetRecord r;
  r.url = "https://example.org/r.git";
  r.commit_id = "c0ffee";
  r.file_path = std::move(path);
  r.start_line = start;
  r.end_line = start + 4;
  r.error = vulnerable;
  r.vulnerable = vulnerable;
  return r;
}

std::vector<DatasetRecord> classes(std::size_t vuln, std::size_t clean) {
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < vuln; ++i) out.push_back(rec("v" + std::to_string(i) + ".php", 1));
  for (std::size_t i = 0; i < clean; ++i) out.push_back(rec("n" + std::to_string(i) + ".php", 0));
  return out;
}

std::pair<std::size_t, std::size_t> count_classes(const std::vector<DatasetRecord>& rs) {
  std::size_t v = 0;
  for (const auto& r : rs) v += r.vulnerable;
  return {v, rs.size() - v};
}

TEST(Csv, EmptyIsHeaderOnly) {
  EXPECT_EQ(write_csv({}),
            "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\n");
  EXPECT_TRUE(read_csv(write_csv({})).empty());
}

TEST(Csv, OneRecordRoundTrip) {
  const std::vector<DatasetRecord> one{rec("a.php", 1)};
  EXPECT_EQ(read_csv(write_csv(one)), one);
}

TEST(Csv, QuotingRoundTrip) {
  const auto records = make_awkward_records(3, 100);
  const std::string bytes = write_csv(records);
  EXPECT_EQ(read_csv(bytes), records);
  EXPECT_EQ(write_csv(read_csv(bytes)), bytes);
}

TEST(Csv, QuotesOnlyWhenNeeded) {
  DatasetRecord r = rec("a,b.php", 0);
  r.commit_id = "say \"hi\"";
  const std::string bytes = write_csv(std::vector<DatasetRecord>{r});
  EXPECT_NE(bytes.find(R"(,"say ""hi""","a,b.php",)"), std::string::npos);
}

TEST(Csv, AcceptsCrLf) {
  const std::string text =
      "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\r\n"
      "u,c,p.php,1,2,0,0,0,1,1\r\n";
  const auto rs = read_csv(text);
  ASSERT_EQ(rs.size(), 1U);
  EXPECT_EQ(rs[0].error, 1);
}

void expect_error_mentions(std::string_view text, const std::string& needle) {
  try {
    read_csv(text);
    FAIL() << "expected DataError";
  } catch (const vulnpipe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Csv, SchemaErrorsNameColumn) {
  expect_error_mentions("url,commit,file_path\n", "commit");
  expect_error_mentions(
      "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\n"
      "u,c,p,x,2,0,0,0,0,0\n",
      "start_line");
  expect_error_mentions(
      "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\n"
      "u,c,p,1,2,0,-1,0,0,0\n",
      "critical");
  expect_error_mentions(
      "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\n"
      "u,c,p,1,2,0,0,0,0,7\n",
      "vulnerable");
  expect_error_mentions(
      "url,commit_id,file_path,start_line,end_line,major,critical,blocker,error,vulnerable\n"
      "u,c,p,1,2,0,0\n",
      "row");
  expect_error_mentions("", "header");
}

TEST(Record, FromAnnotatedFunction) {
  vulnpipe::annotation::AnnotatedFunction fn;
  fn.span.source = {"https://x/r.git", "abc", "src/a.php"};
  fn.span.start_line = 4;
  fn.span.end_line = 9;
  fn.counts[vulnpipe::annotation::Severity::SonarCritical] = 2;
  fn.counts[vulnpipe::annotation::Severity::SemgrepInfo] = 3;
  fn.vulnerable = true;
  const DatasetRecord r = to_record(fn);
  EXPECT_EQ(r.critical, 2);
  EXPECT_EQ(r.error, 0);
  EXPECT_EQ(r.vulnerable, 1);
  EXPECT_EQ(record_id(r), "https://x/r.git@abc:src/a.php#L4-L9");
}

TEST(Split, TenRecords) {
  const auto records = make_records(1, 10);
  const auto s = split(records, {}, 7);
  EXPECT_EQ(s.count(Partition::Train), 8U);
  EXPECT_EQ(s.count(Partition::Val), 1U);
  EXPECT_EQ(s.count(Partition::Test), 1U);
}

TEST(Split, SizesFollowRoundingRule) {
  for (std::size_t n = 10; n <= 2000; ++n) {
    const auto sizes = split_sizes(n, {});
    const auto nd = static_cast<double>(n);
    EXPECT_EQ(sizes[0], static_cast<std::size_t>(std::floor(0.8 * nd + 1e-9))) << n;
    EXPECT_EQ(sizes[1], static_cast<std::size_t>(std::floor(0.1 * nd + 1e-9))) << n;
    EXPECT_EQ(sizes[0] + sizes[1] + sizes[2], n);
  }
}

TEST(Split, SizesWithinOneForReferenceCounts) {
  for (std::size_t n : {10U, 103U, 10000U}) {
    const auto sizes = split_sizes(n, {});
    const double quota[] = {0.8, 0.1, 0.1};
    for (int p = 0; p < 3; ++p) {
      EXPECT_LE(std::abs(static_cast<double>(sizes[p]) - quota[p] * static_cast<double>(n)), 1.0);
    }
  }
  EXPECT_EQ(split_sizes(103, {}), (std::array<std::size_t, 3>{82, 10, 11}));
}

TEST(Split, DeterministicAndOrderIndependent) {
  auto records = make_records(2, 200);
  const auto a = split(records, {}, 11);
  EXPECT_EQ(a.assignment, split(records, {}, 11).assignment);
  EXPECT_NE(a.assignment, split(records, {}, 12).assignment);

  std::map<std::string, Partition> by_id;
  for (std::size_t i = 0; i < records.size(); ++i) by_id[record_id(records[i])] = a.assignment[i];
  std::reverse(records.begin(), records.end());
  const auto b = split(records, {}, 11);
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(b.assignment[i], by_id.at(record_id(records[i])));
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(split(make_records(1, 9), {}, 0), vulnpipe::DataError);
  EXPECT_THROW(split(make_records(1, 20), {0.8, 0.1, 0.2}, 0), vulnpipe::DataError);
  EXPECT_NO_THROW(split(make_records(1, 20), {0.7, 0.2, 0.1}, 0));
}

TEST(Balance, NoBalancingIsIdentity) {
  const auto train = classes(3, 17);
  EXPECT_EQ(balance(train, BalanceStrategy::none(), 1).records, train);
}

TEST(Balance, RelativeUndersampling) {
  const auto r = balance(classes(10, 90), BalanceStrategy::relative_undersample(), 5);
  EXPECT_EQ(count_classes(r.records), (std::pair<std::size_t, std::size_t>{10, 10}));
  EXPECT_FALSE(r.weights.has_value());
}

TEST(Balance, GlobalUndersampling) {
  const auto r = balance(classes(40, 90), BalanceStrategy::global_undersample(25), 5);
  EXPECT_EQ(count_classes(r.records), (std::pair<std::size_t, std::size_t>{25, 25}));
  EXPECT_THROW(balance(classes(20, 90), BalanceStrategy::global_undersample(25), 5),
               vulnpipe::DataError);
}

TEST(Balance, WeightedLoss) {
  const auto train = classes(10, 90);
  const auto r = balance(train, BalanceStrategy::weighted_loss(), 5);
  EXPECT_EQ(r.records, train);
  ASSERT_TRUE(r.weights.has_value());
  EXPECT_DOUBLE_EQ(r.weights->vulnerable, 5.0);
  EXPECT_DOUBLE_EQ(r.weights->non_vulnerable, 100.0 / 180.0);
  EXPECT_NEAR(r.weights->vulnerable * 10, r.weights->non_vulnerable * 90, 1e-9);
}

TEST(Balance, MissingClass) {
  for (auto s : {BalanceStrategy::relative_undersample(), BalanceStrategy::global_undersample(1),
                 BalanceStrategy::weighted_loss()}) {
    EXPECT_THROW(balance(classes(0, 10), s, 1), vulnpipe::DataError);
  }
  EXPECT_NO_THROW(balance(classes(0, 10), BalanceStrategy::none(), 1));
}

TEST(Balance, OutputIsSubsetInInputOrder) {
  const auto train = make_records(4, 300, 0.2);
  const auto r = balance(train, BalanceStrategy::relative_undersample(), 9);
  std::size_t cursor = 0;
  for (const auto& kept : r.records) {
    while (cursor < train.size() && !(train[cursor] == kept)) ++cursor;
    ASSERT_LT(cursor, train.size()) << "record not from input or out of order";
    ++cursor;
  }
}

TEST(Balance, KindNames) {
  for (auto k : {BalanceKind::NB, BalanceKind::USC, BalanceKind::URSC, BalanceKind::WLF}) {
    EXPECT_EQ(parse_balance_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_balance_kind("ursc"), BalanceKind::URSC);
  EXPECT_FALSE(parse_balance_kind("SMOTE").has_value());
}

TEST(Manifest, RoundTripsAssignment) {
  const auto records = make_records(8, 150);
  const auto s = split(records, {}, 3);
  const auto manifest = split_manifest(records, s);
  EXPECT_EQ(manifest.at("sizes").at("train"), s.count(Partition::Train));
  EXPECT_EQ(assignment_from_manifest(records, manifest).assignment, s.assignment);

  auto fewer = records;
  fewer.pop_back();
  EXPECT_THROW(assignment_from_manifest(std::vector<DatasetRecord>(records.begin(), records.end() - 1),
                                        nlohmann::json{{"seed", 1}}),
               vulnpipe::DataError);
  EXPECT_THROW(assignment_from_manifest(fewer, manifest), vulnpipe::DataError);
}

TEST(Manifest, BalanceLeavesValAndTestAlone) {
  const auto records = make_records(9, 500, 0.25);
  const auto s = split(records, {}, 21);
  const auto plain = split_manifest(records, s);
  for (auto strategy : {BalanceStrategy::none(), BalanceStrategy::relative_undersample(),
                        BalanceStrategy::global_undersample(20), BalanceStrategy::weighted_loss()}) {
    const auto b = balance_split(records, s, strategy, 21);
    EXPECT_EQ(b.manifest.at("val"), plain.at("val"));
    EXPECT_EQ(b.manifest.at("test"), plain.at("test"));
    EXPECT_EQ(b.manifest.at("train").size(), b.train.records.size());
  }
}

TEST(Quality, CleanDatasetPasses) {
  const auto report = dataset_quality_report(make_records(1, 50));
  EXPECT_TRUE(report.passed());
  EXPECT_EQ(report.checks.size(), 3U);
}

TEST(Quality, InjectedViolations) {
  auto records = make_records(1, 20);
  records[3].vulnerable = 1;
  records[3].major = records[3].critical = records[3].blocker = records[3].error = 0;
  records.push_back(records[5]);
  records.back().end_line += 10;
  records[7].file_path.clear();

  const auto report = dataset_quality_report(records);
  EXPECT_FALSE(report.passed());
  std::map<std::string, const QualityCheck*> by_name;
  for (const auto& c : report.checks) by_name[c.attribute] = &c;
  ASSERT_TRUE(by_name.contains("consistency"));
  EXPECT_FALSE(by_name["consistency"]->passed);
  ASSERT_EQ(by_name["consistency"]->offending.size(), 1U);
  EXPECT_NE(by_name["consistency"]->offending[0].find(record_id(records[3])), std::string::npos);
  EXPECT_FALSE(by_name["uniqueness"]->passed);
  EXPECT_FALSE(by_name["completeness"]->passed);
}

TEST(Quality, ProvenanceOptional) {
  auto records = make_records(1, 20);
  for (auto& r : records) r.url.clear();
  EXPECT_FALSE(dataset_quality_report(records).passed());
  EXPECT_TRUE(dataset_quality_report(records, {.require_provenance = false}).passed());
}

}  // namespace
