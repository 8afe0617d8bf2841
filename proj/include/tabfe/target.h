#ifndef TABFE_TARGET_H_
#define TABFE_TARGET_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/table.h"

namespace tabfe {

enum class Task { kRegression, kBinary, kMulticlass };

Task ParseTask(std::string_view name);
const char* TaskName(Task task);

struct TargetTransformStep {
  enum class Kind { kLog1p, kStandardize };
  Kind kind = Kind::kLog1p;
  double mean = 0.0;
  double std = 1.0;
};

// Ordered chain of target transforms applied before training. Predictions
// are mapped back with Invert, which undoes the steps in reverse order.
class TargetTransform {
 public:
  void Push(TargetTransformStep step) { steps_.push_back(step); }
  bool empty() const { return steps_.empty(); }
  const std::vector<TargetTransformStep>& steps() const { return steps_; }

  double Apply(double y) const;
  double Invert(double y) const;
  nlohmann::json ToJson() const;

 private:
  std::vector<TargetTransformStep> steps_;
};

struct TargetSpec {
  Task task = Task::kRegression;
  int n_classes = 0;  // multiclass only
  // Sorted label texts when the raw target column was categorical.
  std::vector<std::string> class_labels;
  TargetTransform transform;

  bool is_classification() const { return task != Task::kRegression; }
  int num_outputs() const { return task == Task::kMulticlass ? n_classes : 1; }
};

// Converts the target column of `train` to numeric class indices (for
// classification) and fills class_labels / n_classes in `spec`. Binary
// numeric targets must be 0/1; multiclass numeric targets integers in [0,k).
Table EncodeTarget(const Table& train, TargetSpec& spec);
// Applies the label mapping established by EncodeTarget to another table
// (e.g. a test file that carries targets). Tables without target pass through.
Table EncodeTargetLike(const Table& t, const TargetSpec& spec);

// Target column values (numeric). Errors: MissingTarget when absent or when
// any target value is missing.
std::vector<double> TargetValues(const Table& t);

}  // namespace tabfe

#endif  // TABFE_TARGET_H_
