#include "tabfe/table.h"

#include <bit>
#include <cmath>
#include <unordered_set>

#include "tabfe/errors.h"

namespace tabfe {

const char* ColumnKindName(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

const char* ColumnRoleName(ColumnRole role) {
  switch (role) {
    case ColumnRole::kFeature:
      return "feature";
    case ColumnRole::kTarget:
      return "target";
    case ColumnRole::kId:
      return "id";
  }
  return "?";
}

Dictionary::Dictionary(std::vector<std::string> entries) {
  for (auto& e : entries) {
    if (index_.contains(e)) {
      Fail(ErrorCode::kDuplicateColumn, "duplicate dictionary entry '" + e + "'");
    }
    index_.emplace(e, static_cast<int32_t>(entries_.size()));
    entries_.push_back(std::move(e));
  }
}

std::optional<int32_t> Dictionary::Find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int32_t Dictionary::Intern(std::string_view text) {
  std::string key(text);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const auto code = static_cast<int32_t>(entries_.size());
  index_.emplace(key, code);
  entries_.push_back(std::move(key));
  return code;
}

Column Column::Numeric(std::string name, std::vector<double> values) {
  return Numeric(std::move(name), std::move(values), {});
}

Column Column::Numeric(std::string name, std::vector<double> values,
                       const std::vector<bool>& missing) {
  if (!missing.empty() && missing.size() != values.size()) {
    Fail(ErrorCode::kLengthMismatch, "missing mask length for column '" + name + "'");
  }
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::kNumeric;
  c.missing_.resize(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const bool m = std::isnan(values[i]) || (!missing.empty() && missing[i]);
    c.missing_[i] = m ? 1 : 0;
    if (m) values[i] = std::nan("");
  }
  c.values_ = std::move(values);
  return c;
}

Column Column::Categorical(std::string name,
                           const std::vector<std::optional<std::string>>& values) {
  auto dict = std::make_shared<Dictionary>();
  std::vector<int32_t> codes(values.size(), kMissingCode);
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i]) codes[i] = dict->Intern(*values[i]);
  }
  return Categorical(std::move(name), std::move(dict), std::move(codes));
}

Column Column::Categorical(std::string name,
                           std::shared_ptr<const Dictionary> dict,
                           std::vector<int32_t> codes) {
  if (!dict) dict = std::make_shared<Dictionary>();
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::kCategorical;
  c.missing_.resize(codes.size());
  for (size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] == kMissingCode) {
      c.missing_[i] = 1;
    } else if (codes[i] < 0 || codes[i] >= dict->size()) {
      Fail(ErrorCode::kKindMismatch,
           "code out of dictionary range in column '" + c.name_ + "'");
    }
  }
  c.codes_ = std::move(codes);
  c.dict_ = std::move(dict);
  return c;
}

size_t Column::missing_count() const {
  size_t n = 0;
  for (auto m : missing_) n += m;
  return n;
}

std::string_view Column::category(size_t row) const {
  return dict_->at(codes_[row]);
}

Column Column::Renamed(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

Column Column::Take(std::span<const size_t> rows) const {
  Column c;
  c.name_ = name_;
  c.kind_ = kind_;
  c.dict_ = dict_;
  c.missing_.reserve(rows.size());
  for (auto r : rows) c.missing_.push_back(missing_.at(r));
  if (kind_ == ColumnKind::kNumeric) {
    c.values_.reserve(rows.size());
    for (auto r : rows) c.values_.push_back(values_[r]);
  } else {
    c.codes_.reserve(rows.size());
    for (auto r : rows) c.codes_.push_back(codes_[r]);
  }
  return c;
}

bool Column::SameAs(const Column& other) const {
  if (name_ != other.name_ || kind_ != other.kind_ || missing_ != other.missing_) {
    return false;
  }
  if (kind_ == ColumnKind::kNumeric) {
    for (size_t i = 0; i < values_.size(); ++i) {
      if (missing_[i]) continue;
      if (std::bit_cast<uint64_t>(values_[i]) !=
          std::bit_cast<uint64_t>(other.values_[i])) {
        return false;
      }
    }
    return true;
  }
  for (size_t i = 0; i < codes_.size(); ++i) {
    if (missing_[i]) continue;
    if (category(i) != other.category(i)) return false;
  }
  return true;
}

Table::Table(std::vector<Column> columns)
    : columns_(std::move(columns)),
      roles_(columns_.size(), ColumnRole::kFeature) {
  Validate();
}

Table::Table(std::vector<Column> columns, std::vector<ColumnRole> roles)
    : columns_(std::move(columns)), roles_(std::move(roles)) {
  if (roles_.size() != columns_.size()) {
    Fail(ErrorCode::kLengthMismatch, "roles/columns length differ");
  }
  Validate();
}

void Table::Validate() {
  num_rows_ = columns_.empty() ? 0 : columns_.front().size();
  int targets = 0;
  for (size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    if (c.size() != num_rows_) {
      Fail(ErrorCode::kRowCountMismatch,
           "column '" + c.name() + "' has " + std::to_string(c.size()) +
               " rows, expected " + std::to_string(num_rows_));
    }
    if (!index_.emplace(c.name(), i).second) {
      Fail(ErrorCode::kDuplicateColumn, "duplicate column '" + c.name() + "'");
    }
    if (roles_[i] == ColumnRole::kTarget && ++targets > 1) {
      Fail(ErrorCode::kDuplicateColumn, "more than one target column");
    }
  }
}

const Column& Table::column(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) Fail(ErrorCode::kUnknownColumn, std::string(name));
  return columns_[*idx];
}

std::optional<size_t> Table::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> Table::target_index() const {
  for (size_t i = 0; i < roles_.size(); ++i) {
    if (roles_[i] == ColumnRole::kTarget) return i;
  }
  return std::nullopt;
}

const Column* Table::target() const {
  auto idx = target_index();
  return idx ? &columns_[*idx] : nullptr;
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

std::vector<std::string> Table::feature_names() const {
  std::vector<std::string> out;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (roles_[i] == ColumnRole::kFeature) out.push_back(columns_[i].name());
  }
  return out;
}

std::vector<std::string> Table::feature_names(ColumnKind kind) const {
  std::vector<std::string> out;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (roles_[i] == ColumnRole::kFeature && columns_[i].kind() == kind) {
      out.push_back(columns_[i].name());
    }
  }
  return out;
}

Table Table::Take(std::span<const size_t> rows) const {
  for (auto r : rows) {
    if (r >= num_rows_) Fail(ErrorCode::kLengthMismatch, "row index out of range");
  }
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) cols.push_back(c.Take(rows));
  Table t(std::move(cols), roles_);
  if (columns_.empty()) t.num_rows_ = 0;
  return t;
}

Table Table::Drop(std::span<const std::string> names) const {
  std::unordered_set<std::string> drop;
  for (const auto& n : names) {
    if (!has_column(n)) Fail(ErrorCode::kUnknownColumn, n);
    drop.insert(n);
  }
  std::vector<Column> cols;
  std::vector<ColumnRole> roles;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (drop.contains(columns_[i].name())) continue;
    cols.push_back(columns_[i]);
    roles.push_back(roles_[i]);
  }
  return Table(std::move(cols), std::move(roles));
}

Table Table::Replace(Column column) const {
  auto idx = index_of(column.name());
  if (!idx) Fail(ErrorCode::kUnknownColumn, column.name());
  if (column.size() != num_rows_) {
    Fail(ErrorCode::kRowCountMismatch, "replacement for '" + column.name() + "'");
  }
  std::vector<Column> cols = columns_;
  cols[*idx] = std::move(column);
  return Table(std::move(cols), roles_);
}

Table Table::WithRole(std::string_view name, ColumnRole role) const {
  auto idx = index_of(name);
  if (!idx) Fail(ErrorCode::kUnknownColumn, std::string(name));
  auto roles = roles_;
  roles[*idx] = role;
  return Table(columns_, std::move(roles));
}

Table Table::WithoutTarget() const {
  auto idx = target_index();
  if (!idx) return *this;
  const std::string name = columns_[*idx].name();
  return Drop(std::span<const std::string>(&name, 1));
}

bool Table::SameAs(const Table& other) const {
  if (num_rows_ != other.num_rows_ || roles_ != other.roles_ ||
      columns_.size() != other.columns_.size()) {
    return false;
  }
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (!columns_[i].SameAs(other.columns_[i])) return false;
  }
  return true;
}

Table SelectColumns(const Table& t, std::span<const std::string> names) {
  std::unordered_set<std::string> seen;
  std::vector<Column> cols;
  std::vector<ColumnRole> roles;
  for (const auto& n : names) {
    if (!seen.insert(n).second) Fail(ErrorCode::kDuplicateSelection, n);
    auto idx = t.index_of(n);
    if (!idx) Fail(ErrorCode::kUnknownColumn, n);
    cols.push_back(t.column(*idx));
    roles.push_back(t.role(*idx));
  }
  return Table(std::move(cols), std::move(roles));
}

Table AppendColumns(const Table& t, std::vector<Column> columns) {
  std::vector<Column> cols = t.columns();
  std::vector<ColumnRole> roles = t.roles();
  for (auto& c : columns) {
    if (!cols.empty() && c.size() != t.num_rows()) {
      Fail(ErrorCode::kRowCountMismatch,
           "column '" + c.name() + "' has " + std::to_string(c.size()) +
               " rows, table has " + std::to_string(t.num_rows()));
    }
    if (t.has_column(c.name())) Fail(ErrorCode::kDuplicateColumn, c.name());
    cols.push_back(std::move(c));
    roles.push_back(ColumnRole::kFeature);
  }
  return Table(std::move(cols), std::move(roles));
}

std::pair<Table, Table> SplitRows(const Table& t, const std::vector<bool>& mask) {
  if (mask.size() != t.num_rows()) {
    Fail(ErrorCode::kLengthMismatch,
         "mask has " + std::to_string(mask.size()) + " entries, table has " +
             std::to_string(t.num_rows()) + " rows");
  }
  std::vector<size_t> in, out;
  for (size_t i = 0; i < mask.size(); ++i) (mask[i] ? in : out).push_back(i);
  return {t.Take(in), t.Take(out)};
}

Table ConcatRows(const Table& a, const Table& b) {
  std::vector<Column> cols;
  cols.reserve(a.num_columns());
  for (size_t i = 0; i < a.num_columns(); ++i) {
    const Column& ca = a.column(i);
    const Column& cb = b.column(ca.name());
    if (ca.kind() != cb.kind()) {
      Fail(ErrorCode::kKindMismatch, "column '" + ca.name() + "' differs in kind");
    }
    if (ca.is_numeric()) {
      std::vector<double> v = ca.values();
      v.insert(v.end(), cb.values().begin(), cb.values().end());
      cols.push_back(Column::Numeric(ca.name(), std::move(v)));
      continue;
    }
    std::vector<int32_t> codes = ca.codes();
    if (ca.shared_dictionary() == cb.shared_dictionary()) {
      codes.insert(codes.end(), cb.codes().begin(), cb.codes().end());
      cols.push_back(Column::Categorical(ca.name(), ca.shared_dictionary(),
                                         std::move(codes)));
      continue;
    }
    auto dict = std::make_shared<Dictionary>(ca.dictionary());
    for (size_t r = 0; r < cb.size(); ++r) {
      codes.push_back(cb.is_missing(r) ? kMissingCode : dict->Intern(cb.category(r)));
    }
    cols.push_back(Column::Categorical(ca.name(), std::move(dict), std::move(codes)));
  }
  return Table(std::move(cols), a.roles());
}

}  // namespace tabfe
