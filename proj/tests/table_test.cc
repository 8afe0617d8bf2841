#include <gtest/gtest.h>

#include <vector>

#include "tabfe/rng.h"
#include "tabfe/table.h"
#include "test_util.h"

namespace tabfe {
namespace {

using testing::Cat;
using testing::kNaN;
using testing::Num;
using testing::Texts;

Table Abc() {
  return Table({Num("a", {1, 2, 3}), Cat("b", {"x", "y", "x"}), Num("c", {kNaN, 5, 6})});
}

TEST(Column, NanIsMissing) {
  Column c = Num("x", {1, kNaN, 3});
  EXPECT_FALSE(c.is_missing(0));
  EXPECT_TRUE(c.is_missing(1));
  EXPECT_EQ(c.missing_count(), 1u);
}

TEST(Column, ExplicitMaskIsOredWithNan) {
  Column c = Column::Numeric("x", {1, kNaN, 3}, {true, false, false});
  EXPECT_TRUE(c.is_missing(0));
  EXPECT_TRUE(c.is_missing(1));
  EXPECT_TRUE(std::isnan(c.value(0)));
}

TEST(Column, DictionaryFirstAppearance) {
  Column c = Cat("x", {"b", "a", "", "b"});
  EXPECT_EQ(c.dictionary().entries(), (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(c.codes(), (std::vector<int32_t>{0, 1, kMissingCode, 0}));
}

TEST(Column, CodesOutOfRangeRejected) {
  auto dict = std::make_shared<const Dictionary>(std::vector<std::string>{"a"});
  EXPECT_ANY_THROW(Column::Categorical("x", dict, {0, 1}));
}

TEST(Dictionary, DuplicateEntriesRejected) {
  EXPECT_ANY_THROW(Dictionary(std::vector<std::string>{"a", "a"}));
}

TEST(SelectColumns, Projection) {
  std::vector<std::string> names{"b"};
  Table t = SelectColumns(Abc(), names);
  ASSERT_EQ(t.num_columns(), 1u);
  EXPECT_EQ(t.column(0).name(), "b");
  EXPECT_EQ(t.num_rows(), 3u);
}

TEST(SelectColumns, GivenOrder) {
  std::vector<std::string> names{"c", "a"};
  EXPECT_EQ(SelectColumns(Abc(), names).column_names(), names);
}

TEST(SelectColumns, DuplicateSelection) {
  std::vector<std::string> names{"a", "a"};
  EXPECT_TABFE_ERROR(SelectColumns(Abc(), names), ErrorCode::kDuplicateSelection);
}

TEST(SelectColumns, UnknownColumn) {
  std::vector<std::string> names{"z"};
  try {
    SelectColumns(Abc(), names);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownColumn);
    EXPECT_NE(std::string(e.what()).find("z"), std::string::npos);
  }
}

TEST(AppendColumns, Appends) {
  Table t = AppendColumns(Table({Num("a", {1, 2, 3})}), {Num("b", {4, 5, 6})});
  EXPECT_EQ(t.num_columns(), 2u);
  EXPECT_EQ(t.role(1), ColumnRole::kFeature);
}

TEST(AppendColumns, RowCountMismatch) {
  EXPECT_TABFE_ERROR(AppendColumns(Table({Num("a", {1, 2, 3})}), {Num("b", {1, 2, 3, 4})}),
                     ErrorCode::kRowCountMismatch);
}

TEST(AppendColumns, DuplicateColumn) {
  EXPECT_TABFE_ERROR(AppendColumns(Table({Num("a", {1, 2, 3})}), {Num("a", {1, 2, 3})}),
                     ErrorCode::kDuplicateColumn);
}

TEST(Table, AtMostOneTarget) {
  EXPECT_ANY_THROW(Table({Num("a", {1}), Num("b", {2})},
                         {ColumnRole::kTarget, ColumnRole::kTarget}));
}

TEST(Table, EqualRowCounts) {
  EXPECT_ANY_THROW(Table({Num("a", {1}), Num("b", {2, 3})}));
}

TEST(SplitRows, Halves) {
  Table t({Num("a", {1, 2, 3, 4})});
  auto [in, out] = SplitRows(t, {true, true, false, false});
  EXPECT_EQ(in.num_rows(), 2u);
  EXPECT_EQ(out.num_rows(), 2u);
  EXPECT_EQ(out.column("a").value(0), 3);
}

TEST(SplitRows, AllTrue) {
  auto [in, out] = SplitRows(Abc(), {true, true, true});
  EXPECT_TRUE(in.SameAs(Abc()));
  EXPECT_EQ(out.num_rows(), 0u);
  EXPECT_EQ(out.num_columns(), 3u);
}

TEST(SplitRows, LengthMismatch) {
  Table t({Num("a", {1, 2, 3, 4})});
  EXPECT_TABFE_ERROR(SplitRows(t, {true, false, true}), ErrorCode::kLengthMismatch);
}

// split then interleave back by mask reconstructs the table; decoded texts
// survive the split.
TEST(SplitRows, ReconstructionProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.UniformInt(40);
    std::vector<double> v(n);
    std::vector<std::string> s(n);
    std::vector<bool> mask(n);
    for (size_t i = 0; i < n; ++i) {
      v[i] = rng.Uniform01() < 0.2 ? kNaN : rng.Normal();
      s[i] = rng.Uniform01() < 0.2 ? "" : std::string(1, static_cast<char>('a' + rng.UniformInt(5)));
      mask[i] = rng.Uniform01() < 0.5;
    }
    Table t({Num("v", v), Cat("s", s)});
    auto [in, out] = SplitRows(t, mask);
    EXPECT_EQ(in.column("s").shared_dictionary(), t.column("s").shared_dictionary());
    size_t a = 0, b = 0;
    std::vector<size_t> in_rows, out_rows;
    for (size_t i = 0; i < n; ++i) (mask[i] ? in_rows : out_rows).push_back(i);
    // ConcatRows(in, out) lists rows in mask order; invert that permutation.
    Table joined = ConcatRows(in, out);
    std::vector<size_t> back(n);
    for (size_t i = 0; i < n; ++i) back[i] = mask[i] ? a++ : in_rows.size() + b++;
    EXPECT_TRUE(joined.Take(back).SameAs(t));
    for (size_t i = 0; i < in_rows.size(); ++i) {
      EXPECT_EQ(Texts(in.column("s"))[i], s[in_rows[i]]);
    }
  }
}

TEST(ConcatRows, MergesDictionaries) {
  Table a({Cat("s", {"x", "y"})});
  Table b({Cat("s", {"z", "x"})});
  Table c = ConcatRows(a, b);
  EXPECT_EQ(c.column("s").dictionary().entries(), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(Texts(c.column("s")), (std::vector<std::string>{"x", "y", "z", "x"}));
}

TEST(Table, DropReplaceRoles) {
  Table t = Abc().WithRole("c", ColumnRole::kTarget);
  EXPECT_EQ(t.target()->name(), "c");
  EXPECT_EQ(t.feature_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.WithoutTarget().num_columns(), 2u);
  Table r = t.Replace(Num("a", {9, 9, 9}));
  EXPECT_EQ(r.column(0).value(1), 9);
  std::vector<std::string> drop{"b"};
  EXPECT_EQ(t.Drop(drop).column_names(), (std::vector<std::string>{"a", "c"}));
  std::vector<std::string> unknown{"q"};
  EXPECT_TABFE_ERROR(t.Drop(unknown), ErrorCode::kUnknownColumn);
}

}  // namespace
}  // namespace tabfe
