#ifndef TABFE_TABLE_H_
#define TABFE_TABLE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tabfe {

inline constexpr int32_t kMissingCode = -1;

enum class ColumnKind { kNumeric, kCategorical };
enum class ColumnRole { kFeature, kTarget, kId };

const char* ColumnKindName(ColumnKind kind);
const char* ColumnRoleName(ColumnRole role);

// Category text <-> code mapping in first-appearance order. Entries are
// unique. Shared between tables produced by row selection so that codes keep
// their meaning across splits.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> entries);

  int32_t size() const { return static_cast<int32_t>(entries_.size()); }
  const std::string& at(int32_t code) const { return entries_.at(code); }
  const std::vector<std::string>& entries() const { return entries_; }
  std::optional<int32_t> Find(std::string_view text) const;

  // Returns the code of `text`, appending it when absent.
  int32_t Intern(std::string_view text);

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int32_t> index_;
};

class Column {
 public:
  // Numeric column; NaN entries are flagged missing.
  static Column Numeric(std::string name, std::vector<double> values);
  // Numeric column with an explicit missing mask (OR-ed with NaN detection).
  static Column Numeric(std::string name, std::vector<double> values,
                        const std::vector<bool>& missing);
  // Categorical column from texts; nullopt is missing. Dictionary is built in
  // first-appearance order.
  static Column Categorical(std::string name,
                            const std::vector<std::optional<std::string>>& values);
  // Categorical column over an existing dictionary. Codes must be
  // kMissingCode or < dict->size().
  static Column Categorical(std::string name,
                            std::shared_ptr<const Dictionary> dict,
                            std::vector<int32_t> codes);

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == ColumnKind::kNumeric; }
  bool is_categorical() const { return kind_ == ColumnKind::kCategorical; }
  size_t size() const { return missing_.size(); }

  bool is_missing(size_t row) const { return missing_[row] != 0; }
  size_t missing_count() const;

  // Numeric access. Missing rows hold NaN.
  double value(size_t row) const { return values_[row]; }
  const std::vector<double>& values() const { return values_; }

  // Categorical access.
  int32_t code(size_t row) const { return codes_[row]; }
  const std::vector<int32_t>& codes() const { return codes_; }
  std::string_view category(size_t row) const;
  const Dictionary& dictionary() const { return *dict_; }
  const std::shared_ptr<const Dictionary>& shared_dictionary() const {
    return dict_;
  }

  Column Renamed(std::string name) const;
  Column Take(std::span<const size_t> rows) const;

  // Exact equality: numeric values compared bitwise, categories by text.
  bool SameAs(const Column& other) const;

 private:
  Column() = default;

  std::string name_;
  ColumnKind kind_ = ColumnKind::kNumeric;
  std::vector<uint8_t> missing_;
  std::vector<double> values_;
  std::vector<int32_t> codes_;
  std::shared_ptr<const Dictionary> dict_;
};

// Immutable columnar table. Column names are unique, all columns have the
// same row count and at most one column has the Target role.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Column> columns);
  Table(std::vector<Column> columns, std::vector<ColumnRole> roles);

  size_t num_rows() const { return num_rows_; }
  size_t num_columns() const { return columns_.size(); }

  const Column& column(size_t i) const { return columns_.at(i); }
  const Column& column(std::string_view name) const;
  const std::vector<Column>& columns() const { return columns_; }
  ColumnRole role(size_t i) const { return roles_.at(i); }
  const std::vector<ColumnRole>& roles() const { return roles_; }

  std::optional<size_t> index_of(std::string_view name) const;
  bool has_column(std::string_view name) const {
    return index_of(name).has_value();
  }
  std::optional<size_t> target_index() const;
  const Column* target() const;

  std::vector<std::string> column_names() const;
  std::vector<std::string> feature_names() const;
  std::vector<std::string> feature_names(ColumnKind kind) const;

  // Copy with rows in the given order.
  Table Take(std::span<const size_t> rows) const;
  // Copy without the named columns (unknown names are an error).
  Table Drop(std::span<const std::string> names) const;
  // Replaces the column of the same name, keeping its role and position.
  Table Replace(Column column) const;
  Table WithRole(std::string_view name, ColumnRole role) const;
  // Copy without the target column (no-op if there is none).
  Table WithoutTarget() const;

  // Exact equality of names, roles and column contents.
  bool SameAs(const Table& other) const;

 private:
  void Validate();

  std::vector<Column> columns_;
  std::vector<ColumnRole> roles_;
  size_t num_rows_ = 0;
  std::unordered_map<std::string, size_t> index_;
};

// Projection in the given order. Errors: UnknownColumn, DuplicateSelection.
Table SelectColumns(const Table& t, std::span<const std::string> names);

// Appends feature columns. Errors: RowCountMismatch, DuplicateColumn.
Table AppendColumns(const Table& t, std::vector<Column> columns);

// (rows where mask is true, rows where mask is false); order preserved and
// dictionaries shared. Errors: LengthMismatch.
std::pair<Table, Table> SplitRows(const Table& t, const std::vector<bool>& mask);

// Rows of `a` followed by rows of `b`. Columns are matched by name; `b` must
// contain every column of `a`. Categorical dictionaries are merged (a's
// entries first).
Table ConcatRows(const Table& a, const Table& b);

}  // namespace tabfe

#endif  // TABFE_TABLE_H_
