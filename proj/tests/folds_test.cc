#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "tabfe/folds.h"
#include "tabfe/rng.h"
#include "test_util.h"

namespace tabfe {
namespace {

using testing::Cat;
using testing::Num;

TargetSpec Binary() {
  TargetSpec t;
  t.task = Task::kBinary;
  return t;
}

Table BinaryTable(size_t pos, size_t neg, uint64_t seed) {
  std::vector<double> y;
  y.insert(y.end(), pos, 1.0);
  y.insert(y.end(), neg, 0.0);
  Rng rng(seed);
  rng.Shuffle(y);
  std::vector<double> x(y.size(), 0.0);
  return testing::WithTarget({Num("x", x)}, Num("y", y));
}

// Per (class, fold) counts from the assignment.
std::map<std::pair<int, int>, int> ClassFoldCounts(const Table& t, const FoldAssignment& f) {
  std::map<std::pair<int, int>, int> out;
  for (size_t i = 0; i < t.num_rows(); ++i) {
    ++out[{static_cast<int>(t.target()->value(i)), f.fold_of_row[i]}];
  }
  return out;
}

TEST(Stratified, ExactSixFour) {
  const Table t = BinaryTable(60, 40, 1);
  const auto f = MakeFolds(t, FoldStrategy::kStratifiedTarget, 10, 3, Binary());
  const auto counts = ClassFoldCounts(t, f);
  for (int k = 0; k < 10; ++k) {
    EXPECT_EQ(counts.at({1, k}), 6);
    EXPECT_EQ(counts.at({0, k}), 4);
  }
}

TEST(Stratified, DeviationBoundProperty) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t pos = 1 + rng.UniformInt(300), neg = 1 + rng.UniformInt(300);
    const int k = 2 + static_cast<int>(rng.UniformInt(12));
    if (pos + neg < static_cast<size_t>(k)) continue;
    const Table t = BinaryTable(pos, neg, trial);
    const auto f = MakeFolds(t, FoldStrategy::kStratifiedTarget, k, trial, Binary());
    const auto counts = ClassFoldCounts(t, f);
    std::vector<int> sizes(static_cast<size_t>(k), 0);
    for (int c = 0; c < 2; ++c) {
      const double share = static_cast<double>(c ? pos : neg) / k;
      for (int fold = 0; fold < k; ++fold) {
        auto it = counts.find({c, fold});
        const int n = it == counts.end() ? 0 : it->second;
        EXPECT_LE(std::abs(n - std::round(share)), 1.0);
        sizes[static_cast<size_t>(fold)] += n;
      }
    }
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
  }
}

TEST(Plain, PartitionAndSizes) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 10 + rng.UniformInt(200);
    const int k = 2 + static_cast<int>(rng.UniformInt(9));
    Table t({Num("x", std::vector<double>(n, 1.0))});
    const auto f = MakeFolds(t, FoldStrategy::kPlain, k, trial, TargetSpec{});
    ASSERT_EQ(f.num_rows(), n);
    std::vector<size_t> seen;
    std::vector<size_t> sizes;
    for (int fold = 0; fold < k; ++fold) {
      const auto rows = f.RowsInFold(fold);
      sizes.push_back(rows.size());
      seen.insert(seen.end(), rows.begin(), rows.end());
      EXPECT_EQ(rows.size() + f.RowsOutsideFold(fold).size(), n);
    }
    std::sort(seen.begin(), seen.end());
    for (size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], i);
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
  }
}

TEST(Plain, DeterministicGivenSeed) {
  Table t({Num("x", std::vector<double>(97, 1.0))});
  const auto a = MakeFolds(t, FoldStrategy::kPlain, 5, 11, TargetSpec{});
  const auto b = MakeFolds(t, FoldStrategy::kPlain, 5, 11, TargetSpec{});
  const auto c = MakeFolds(t, FoldStrategy::kPlain, 5, 12, TargetSpec{});
  EXPECT_EQ(a.fold_of_row, b.fold_of_row);
  EXPECT_NE(a.fold_of_row, c.fold_of_row);
  EXPECT_EQ(a.ToJson(), b.ToJson());
}

TEST(Group, SixMonthsSixFolds) {
  std::vector<std::string> month;
  Rng rng(4);
  for (int i = 0; i < 600; ++i) month.push_back("m" + std::to_string(1 + rng.UniformInt(6)));
  Table t({Cat("month", month)});
  const auto f = MakeFolds(t, FoldStrategy::kGroupColumn, 6, 1, TargetSpec{}, "month");
  std::map<std::string, std::set<int>> folds_of;
  std::map<int, std::set<std::string>> months_in;
  for (size_t i = 0; i < month.size(); ++i) {
    folds_of[month[i]].insert(f.fold_of_row[i]);
    months_in[f.fold_of_row[i]].insert(month[i]);
  }
  EXPECT_EQ(months_in.size(), 6u);
  for (const auto& [m, fs] : folds_of) EXPECT_EQ(fs.size(), 1u) << m;
  for (const auto& [fold, ms] : months_in) EXPECT_EQ(ms.size(), 1u);
}

TEST(Group, IntegrityProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int groups = 3 + static_cast<int>(rng.UniformInt(20));
    const int k = 2 + static_cast<int>(rng.UniformInt(static_cast<uint64_t>(groups - 1)));
    std::vector<double> g(200);
    for (double& v : g) v = static_cast<double>(rng.UniformInt(static_cast<uint64_t>(groups)));
    for (int i = 0; i < groups; ++i) g[static_cast<size_t>(i)] = i;  // every group present
    Table t({Num("g", g)});
    const auto f = MakeFolds(t, FoldStrategy::kGroupColumn, k, trial, TargetSpec{}, "g");
    std::map<double, std::set<int>> folds_of;
    std::set<int> used;
    for (size_t i = 0; i < g.size(); ++i) {
      folds_of[g[i]].insert(f.fold_of_row[i]);
      used.insert(f.fold_of_row[i]);
    }
    for (const auto& [v, fs] : folds_of) EXPECT_EQ(fs.size(), 1u);
    EXPECT_EQ(used.size(), static_cast<size_t>(k));
  }
}

TEST(MakeFolds, Errors) {
  Table five({Num("x", {1, 2, 3, 4, 5})});
  EXPECT_TABFE_ERROR(MakeFolds(five, FoldStrategy::kPlain, 10, 0, TargetSpec{}), ErrorCode::kTooFewRows);
  EXPECT_TABFE_ERROR(MakeFolds(five, FoldStrategy::kPlain, 1, 0, TargetSpec{}), ErrorCode::kTooFewRows);
  Table g({Num("g", {1, 1, 2, 2})});
  EXPECT_TABFE_ERROR(MakeFolds(g, FoldStrategy::kGroupColumn, 3, 0, TargetSpec{}, "g"), ErrorCode::kTooFewGroups);
  EXPECT_TABFE_ERROR(MakeFolds(g, FoldStrategy::kGroupColumn, 2, 0, TargetSpec{}, "q"), ErrorCode::kUnknownColumn);
  Table reg = testing::WithTarget({Num("x", {1, 2, 3, 4})}, Num("y", {0.5, 1, 2, 3}));
  EXPECT_TABFE_ERROR(MakeFolds(reg, FoldStrategy::kStratifiedTarget, 2, 0, TargetSpec{}),
                     ErrorCode::kWrongTaskForStrategy);
}

}  // namespace
}  // namespace tabfe
