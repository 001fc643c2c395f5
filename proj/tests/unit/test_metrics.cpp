#include <gtest/gtest.h>

#include <fmt/format.h>

#include <vulnpipe/error.hpp>
#include <vulnpipe/metrics.hpp>
#include <vulnpipe/random.hpp>

namespace {

using namespace vulnpipe::metrics;

std::vector<int> random_bits(vulnpipe::Rng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (int& x : v) x = static_cast<int>(rng.below(2));
  return v;
}

TEST(Confusion, AllPositiveCorrect) {
  const std::vector<int> ones(6, 1);
  EXPECT_EQ(confusion(ones, ones), (ConfusionCounts{6, 0, 0, 0}));
}

TEST(Confusion, OneOfEach) {
  EXPECT_EQ(confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}),
            (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Confusion, MatchesLoopOracle) {
  vulnpipe::Rng rng(1);
  const auto labels = random_bits(rng, 1000);
  const auto preds = random_bits(rng, 1000);
  ConfusionCounts expected;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1 && preds[i] == 1) ++expected.tp;
    if (labels[i] == 0 && preds[i] == 1) ++expected.fp;
    if (labels[i] == 1 && preds[i] == 0) ++expected.fn;
    if (labels[i] == 0 && preds[i] == 0) ++expected.tn;
  }
  const auto got = confusion(labels, preds);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got.total(), 1000U);
}

TEST(Confusion, InvalidInputs) {
  EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), vulnpipe::DataError);
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), vulnpipe::DataError);
  EXPECT_THROW(confusion(std::vector<int>{2}, std::vector<int>{1}), vulnpipe::DataError);
}

TEST(Prf, PerfectClassifier) {
  const auto m = prf({9, 0, 0, 4});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Prf, HandComputed) {
  const auto m = prf({2, 1, 2, 0});
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 4.0 / 7.0);
}

TEST(Prf, ZeroDivisionConventions) {
  const auto none_predicted = prf({0, 0, 5, 3});
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_EQ(none_predicted.recall, 0.0);
  EXPECT_EQ(none_predicted.f1, 0.0);
  const auto no_positives = prf({0, 4, 0, 3});
  EXPECT_EQ(no_positives.recall, 0.0);
  EXPECT_EQ(no_positives.f1, 0.0);
  const auto empty = prf({});
  EXPECT_EQ(empty.precision + empty.recall + empty.f1, 0.0);
}

TEST(Prf, HarmonicMeanBound) {
  vulnpipe::Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    const auto m = prf(c);
    if (m.precision + m.recall > 0) {
      EXPECT_LE(std::min(m.precision, m.recall), m.f1 + 1e-12);
      EXPECT_LE(m.f1, std::max(m.precision, m.recall) + 1e-12);
    } else {
      EXPECT_EQ(m.f1, 0.0);
    }
  }
}

TEST(Prf, SwapTransposesErrors) {
  vulnpipe::Rng rng(4);
  const auto labels = random_bits(rng, 300);
  const auto preds = random_bits(rng, 300);
  const auto a = confusion(labels, preds);
  const auto b = confusion(preds, labels);
  EXPECT_EQ(a.fp, b.fn);
  EXPECT_EQ(a.fn, b.fp);
  EXPECT_DOUBLE_EQ(prf(a).precision, prf(b).recall);
  EXPECT_DOUBLE_EQ(prf(a).recall, prf(b).precision);
}

TEST(Prf, PermutationInvariant) {
  vulnpipe::Rng rng(5);
  auto labels = random_bits(rng, 200);
  auto preds = random_bits(rng, 200);
  const auto before = confusion(labels, preds);
  std::vector<std::pair<int, int>> joint;
  for (std::size_t i = 0; i < labels.size(); ++i) joint.emplace_back(labels[i], preds[i]);
  rng.shuffle(std::span(joint));
  for (std::size_t i = 0; i < joint.size(); ++i) std::tie(labels[i], preds[i]) = joint[i];
  EXPECT_EQ(confusion(labels, preds), before);
}

TEST(Matrix, EmptyAndSingle) {
  EXPECT_TRUE(cross_domain_matrix({}).rows.empty());
  const std::vector<EvalCell> one{{{"GOD", "TOD", "NB"}, {1, 0}, {1, 1}}};
  const auto t = cross_domain_matrix(one);
  ASSERT_EQ(t.rows.size(), 1U);
  EXPECT_DOUBLE_EQ(t.rows[0].precision, 0.5);
}

TEST(Matrix, ThirtySixCells) {
  vulnpipe::Rng rng(6);
  std::vector<EvalCell> cells;
  for (const char* train : {"GOD", "TOD", "ID"}) {
    for (const char* test : {"GOD", "TOD", "ID"}) {
      for (const char* s : {"NB", "USC", "URSC", "WLF"}) {
        cells.push_back({{train, test, s}, random_bits(rng, 50), random_bits(rng, 50)});
      }
    }
  }
  const auto t = cross_domain_matrix(cells);
  ASSERT_EQ(t.rows.size(), 36U);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto expected = prf(confusion(cells[i].labels, cells[i].predictions));
    EXPECT_EQ(t.rows[i].cell, cells[i].id);
    EXPECT_EQ(t.rows[i].counts, expected.counts);
    EXPECT_DOUBLE_EQ(t.rows[i].f1, expected.f1);
  }
  const auto j = t.to_json();
  EXPECT_EQ(j.at("cells").size(), 36U);
  EXPECT_EQ(cells_from_json(nlohmann::json{{"cells", nlohmann::json::array()}}).size(), 0U);
}

TEST(Matrix, DuplicateCellRejected) {
  const std::vector<EvalCell> cells{{{"A", "B", "NB"}, {1}, {1}}, {{"A", "B", "NB"}, {0}, {0}}};
  EXPECT_THROW(cross_domain_matrix(cells), vulnpipe::DataError);
}

TEST(Matrix, TextTableFourDecimals) {
  const std::vector<EvalCell> cells{{{"GOD", "TOD", "NB"}, {1, 1, 1, 1, 0, 0}, {1, 1, 0, 0, 1, 0}}};
  const std::string text = cross_domain_matrix(cells).render_text();
  EXPECT_NE(text.find("GOD"), std::string::npos);
  EXPECT_NE(text.find("0.6667"), std::string::npos);
  EXPECT_NE(text.find("0.5000"), std::string::npos);
  EXPECT_NE(text.find("0.5714"), std::string::npos);
}

TEST(Matrix, CellsFromJson) {
  const auto doc = nlohmann::json::parse(R"({"cells": [
    {"trained_on": "GOD", "tested_on": "ID", "strategy": "WLF", "labels": [1, 0], "predictions": [0, 0]}
  ]})");
  const auto cells = cells_from_json(doc);
  ASSERT_EQ(cells.size(), 1U);
  EXPECT_EQ(cells[0].id.strategy, "WLF");
  EXPECT_THROW(cells_from_json(nlohmann::json{{"cells", {{{"labels", 1}}}}}), vulnpipe::DataError);
}

}  // namespace
