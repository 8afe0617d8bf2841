#ifndef TABFE_OPS_H_
#define TABFE_OPS_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/folds.h"
#include "tabfe/table.h"
#include "tabfe/target.h"

namespace tabfe {

enum class FitScope { kTrainOnly, kTrainPlusTest };

FitScope ParseFitScope(std::string_view name);
const char* FitScopeName(FitScope scope);

// Which side a table handed to Transform comes from. Row-dependent
// operators (out-of-fold encoders) need the train rows in fit-time order.
enum class Partition { kTrain, kTest };

struct FitContext {
  const Table* train = nullptr;  // fit-time train rows, target included
  const Table* test = nullptr;   // test features; may be null
  FitScope scope = FitScope::kTrainOnly;
  const FoldAssignment* folds = nullptr;
  const TargetSpec* target = nullptr;
  bool log_target_hint = false;  // dataset declares a heavy-tailed target
  uint64_t seed = 0;
  std::string prefix;  // prepended to every new column name

  // Feature columns of the rows the step may look at: train rows, followed
  // by test rows under TrainPlusTest. Never contains the target.
  Table ScopeFeatures() const;
  // Train target values. Errors: MissingTarget.
  std::vector<double> TrainTarget() const;
};

class Operator {
 public:
  virtual ~Operator() = default;

  virtual std::string name() const = 0;
  // Needs a FoldAssignment to fit.
  virtual bool fold_aware() const { return false; }
  // Reads the train target (or another label column) while fitting.
  virtual bool uses_target() const { return false; }
  // Operators whose train-row outputs must not depend on the row's own
  // label. The leakage audit flips labels for these.
  virtual bool label_independent() const { return false; }
  // Columns treated as labels by the operator.
  virtual std::vector<std::string> label_columns(const Table& train) const;

  virtual void Fit(const FitContext& ctx) = 0;
  virtual Table Transform(const Table& t, Partition part) const = 0;
  virtual nlohmann::json State() const = 0;
  // Step added to the target transform chain, if the operator rescales y.
  virtual std::optional<TargetTransformStep> target_transform() const {
    return std::nullopt;
  }
  virtual std::unique_ptr<Operator> Clone() const = 0;
};

using OperatorFactory =
    std::function<std::unique_ptr<Operator>(const nlohmann::json& params)>;

// Errors: UnknownOperator; SchemaViolation for malformed parameters.
std::unique_ptr<Operator> MakeOperator(std::string_view name,
                                       const nlohmann::json& params);
bool IsKnownOperator(std::string_view name);
std::vector<std::string> OperatorNames();
// Adds or replaces a factory. Used for custom operators and test fixtures.
void RegisterOperator(const std::string& name, OperatorFactory factory);

// Text written for missing categorical values by op_missing_as_category.
inline constexpr std::string_view kMissingCategoryText = "«missing»";

}  // namespace tabfe

#endif  // TABFE_OPS_H_
