#ifndef TABFE_METRICS_H_
#define TABFE_METRICS_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabfe/io.h"
#include "tabfe/matrix.h"

namespace tabfe {

struct MetricValue {
  std::string name;
  double value = 0.0;
  Direction direction = Direction::kHigherBetter;
};

Direction MetricDirection(std::string_view name);

// Metric used for validation, early stopping and HPO: gini -> auc,
// r2 -> rmse, rmsle -> rmse (the target is already log1p-transformed).
std::string ValidationMetricFor(std::string_view metric);

// Midranks (1-based, ties share the mean rank).
std::vector<double> MidRanks(std::span<const double> v);

// (sum of positive midranks - n+(n+ + 1)/2) / (n+ n-). Errors: SingleClass.
double Auc(std::span<const double> y_true, std::span<const double> score);
// Binary log loss with p clipped to [1e-15, 1 - 1e-15].
double BinaryLogLoss(std::span<const double> y_true, std::span<const double> prob);
// Multiclass log loss on an n x k probability matrix.
double MulticlassLogLoss(std::span<const double> y_true, const Matrix& prob);
double Rmse(std::span<const double> y_true, std::span<const double> pred);
// rmse in log1p space. Errors: NegativeBeyondDomain for values <= -1.
double Rmsle(std::span<const double> y_true, std::span<const double> pred);
double R2(std::span<const double> y_true, std::span<const double> pred);

// Computes `name` on an n x k prediction matrix (k = 1 except multiclass
// logloss). Errors: LengthMismatch, NonFinite, SingleClass, SchemaViolation
// for unknown names.
MetricValue ComputeMetric(std::string_view name, std::span<const double> y_true,
                          const Matrix& y_pred);
MetricValue ComputeMetric(std::string_view name, std::span<const double> y_true,
                          std::span<const double> y_pred);

// Pearson correlation of midranks. Errors: LengthMismatch,
// DegenerateConstantVector.
double SpearmanRankCorr(std::span<const double> a, std::span<const double> b);

// Value oriented so that smaller is better.
inline double MinimizeOriented(const MetricValue& m) {
  return m.direction == Direction::kHigherBetter ? -m.value : m.value;
}

}  // namespace tabfe

#endif  // TABFE_METRICS_H_
