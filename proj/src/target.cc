#include "tabfe/target.h"

#include <algorithm>
#include <cmath>

#include "tabfe/errors.h"

namespace tabfe {

Task ParseTask(std::string_view name) {
  if (name == "regression") return Task::kRegression;
  if (name == "binary") return Task::kBinary;
  if (name == "multiclass") return Task::kMulticlass;
  Fail(ErrorCode::kSchemaViolation, "unknown task '" + std::string(name) + "'");
}

const char* TaskName(Task task) {
  switch (task) {
    case Task::kRegression:
      return "regression";
    case Task::kBinary:
      return "binary";
    case Task::kMulticlass:
      return "multiclass";
  }
  return "?";
}

double TargetTransform::Apply(double y) const {
  for (const auto& s : steps_) {
    y = s.kind == TargetTransformStep::Kind::kLog1p ? std::log1p(y)
                                                    : (y - s.mean) / s.std;
  }
  return y;
}

double TargetTransform::Invert(double y) const {
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    y = it->kind == TargetTransformStep::Kind::kLog1p ? std::expm1(y)
                                                      : y * it->std + it->mean;
  }
  return y;
}

nlohmann::json TargetTransform::ToJson() const {
  auto out = nlohmann::json::array();
  for (const auto& s : steps_) {
    if (s.kind == TargetTransformStep::Kind::kLog1p) {
      out.push_back({{"kind", "log1p"}});
    } else {
      out.push_back({{"kind", "standardize"}, {"mean", s.mean}, {"std", s.std}});
    }
  }
  return out;
}

namespace {

Table ReplaceTarget(const Table& t, std::vector<double> values) {
  const size_t idx = *t.target_index();
  return t.Replace(Column::Numeric(t.column(idx).name(), std::move(values)));
}

}  // namespace

Table EncodeTarget(const Table& train, TargetSpec& spec) {
  const Column* y = train.target();
  if (!y) Fail(ErrorCode::kMissingTarget, "table has no target column");
  if (y->missing_count() > 0) {
    Fail(ErrorCode::kMissingTarget, "target '" + y->name() + "' has missing values");
  }
  if (spec.task == Task::kRegression) {
    if (!y->is_numeric()) {
      Fail(ErrorCode::kWrongTask, "regression target '" + y->name() + "' is categorical");
    }
    return train;
  }
  if (y->is_categorical()) {
    std::vector<std::string> labels;
    for (size_t r = 0; r < y->size(); ++r) labels.emplace_back(y->category(r));
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    spec.class_labels = labels;
    if (spec.task == Task::kBinary && labels.size() != 2) {
      Fail(ErrorCode::kWrongTask, "binary target needs exactly 2 labels, found " +
                                      std::to_string(labels.size()));
    }
    if (spec.task == Task::kMulticlass) spec.n_classes = static_cast<int>(labels.size());
    return EncodeTargetLike(train, spec);
  }
  int max_class = 0;
  for (size_t r = 0; r < y->size(); ++r) {
    const double v = y->value(r);
    if (v != std::floor(v) || v < 0) {
      Fail(ErrorCode::kWrongTask, "class target must hold non-negative integers");
    }
    max_class = std::max(max_class, static_cast<int>(v));
  }
  if (spec.task == Task::kBinary && max_class > 1) {
    Fail(ErrorCode::kWrongTask, "binary target must be 0/1");
  }
  if (spec.task == Task::kMulticlass) {
    spec.n_classes = std::max(spec.n_classes, max_class + 1);
  }
  return train;
}

Table EncodeTargetLike(const Table& t, const TargetSpec& spec) {
  const Column* y = t.target();
  if (!y || !y->is_categorical()) return t;
  if (spec.class_labels.empty()) {
    Fail(ErrorCode::kWrongTask, "categorical target without a label mapping");
  }
  std::vector<double> values(y->size());
  for (size_t r = 0; r < y->size(); ++r) {
    if (y->is_missing(r)) {
      values[r] = std::nan("");
      continue;
    }
    auto it = std::lower_bound(spec.class_labels.begin(), spec.class_labels.end(),
                               y->category(r));
    if (it == spec.class_labels.end() || *it != y->category(r)) {
      Fail(ErrorCode::kWrongTask,
           "unknown class label '" + std::string(y->category(r)) + "'");
    }
    values[r] = static_cast<double>(it - spec.class_labels.begin());
  }
  return ReplaceTarget(t, std::move(values));
}

std::vector<double> TargetValues(const Table& t) {
  const Column* y = t.target();
  if (!y) Fail(ErrorCode::kMissingTarget, "table has no target column");
  if (!y->is_numeric()) Fail(ErrorCode::kKindMismatch, "target is not numeric");
  if (y->missing_count() > 0) {
    Fail(ErrorCode::kMissingTarget, "target has missing values");
  }
  return y->values();
}

}  // namespace tabfe
