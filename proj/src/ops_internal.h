#ifndef TABFE_SRC_OPS_INTERNAL_H_
#define TABFE_SRC_OPS_INTERNAL_H_

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabfe/errors.h"
#include "tabfe/ops.h"

namespace tabfe::ops {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads operator parameters, rejecting unknown keys and wrong types.
class Params {
 public:
  Params(std::string op, const nlohmann::json& j);

  bool Has(const char* key) const { return j_.contains(key); }
  double Number(const char* key, double fallback);
  int Int(const char* key, int fallback);
  bool Bool(const char* key, bool fallback);
  std::string String(const char* key, const std::string& fallback);
  std::optional<std::vector<std::string>> Strings(const char* key);
  std::vector<std::string> RequiredStrings(const char* key);
  nlohmann::json Raw(const char* key);
  // Errors: SchemaViolation when keys were left unread.
  void Done();

  [[noreturn]] void Bad(const char* key, const std::string& what) const;

 private:
  const nlohmann::json& Get(const char* key);

  std::string op_;
  nlohmann::json j_;
  std::set<std::string> used_;
};

// Explicit column list checked against `t` (UnknownColumn, KindMismatch), or
// all feature columns of `kind` when the list is absent.
std::vector<std::string> ResolveColumns(const Table& t,
                                        const std::optional<std::vector<std::string>>& cols,
                                        std::optional<ColumnKind> kind, const std::string& op);

void RequireKind(const Column& c, ColumnKind kind, const std::string& op);

// Row-wise text of a categorical value (caller checks missing).
inline std::string Text(const Column& c, size_t row) { return std::string(c.category(row)); }

// Builds a categorical column from per-row texts over a fixed dictionary.
Column CategoricalFromTexts(const std::string& name,
                            const std::vector<std::optional<std::string>>& texts);

// Appends new feature columns, failing with DuplicateColumn on collisions.
inline Table Append(const Table& t, std::vector<Column> cols) {
  return AppendColumns(t, std::move(cols));
}

inline nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// Shared implementation of Clone.
template <typename Derived>
class OperatorImpl : public Operator {
 public:
  std::unique_ptr<Operator> Clone() const override {
    return std::make_unique<Derived>(static_cast<const Derived&>(*this));
  }
};

using Registry = std::map<std::string, OperatorFactory, std::less<>>;

void RegisterCleaningOps(Registry& r);
void RegisterEncodingOps(Registry& r);
void RegisterDerivedOps(Registry& r);

}  // namespace tabfe::ops

#endif  // TABFE_SRC_OPS_INTERNAL_H_
