#include "tabfe/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabfe/errors.h"

namespace tabfe {

namespace {

void CheckSameLength(size_t a, size_t b) {
  if (a != b) {
    Fail(ErrorCode::kLengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
  }
}

void CheckFinite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) Fail(ErrorCode::kNonFinite, "non-finite value in metric input");
  }
}

double Clip(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

}  // namespace

Direction MetricDirection(std::string_view name) {
  if (name == "auc" || name == "gini" || name == "r2") return Direction::kHigherBetter;
  if (name == "logloss" || name == "rmse" || name == "rmsle") return Direction::kLowerBetter;
  Fail(ErrorCode::kSchemaViolation, "unknown metric '" + std::string(name) + "'");
}

std::string ValidationMetricFor(std::string_view metric) {
  if (metric == "gini") return "auc";
  if (metric == "r2" || metric == "rmsle") return "rmse";
  MetricDirection(metric);
  return std::string(metric);
}

std::vector<double> MidRanks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1.
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double Auc(std::span<const double> y_true, std::span<const double> score) {
  CheckSameLength(y_true.size(), score.size());
  CheckFinite(score);
  const auto ranks = MidRanks(score);
  double pos_rank_sum = 0.0;
  double n_pos = 0.0;
  double n_neg = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1.0) {
      pos_rank_sum += ranks[i];
      n_pos += 1.0;
    } else if (y_true[i] == 0.0) {
      n_neg += 1.0;
    } else {
      Fail(ErrorCode::kWrongTask, "auc needs 0/1 labels");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) Fail(ErrorCode::kSingleClass, "auc needs both classes");
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double BinaryLogLoss(std::span<const double> y_true, std::span<const double> prob) {
  CheckSameLength(y_true.size(), prob.size());
  CheckFinite(prob);
  if (y_true.empty()) Fail(ErrorCode::kLengthMismatch, "empty input");
  double sum = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const double p = Clip(prob[i]);
    sum -= y_true[i] * std::log(p) + (1.0 - y_true[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(y_true.size());
}

double MulticlassLogLoss(std::span<const double> y_true, const Matrix& prob) {
  CheckSameLength(y_true.size(), prob.rows());
  CheckFinite(prob.data());
  if (y_true.empty()) Fail(ErrorCode::kLengthMismatch, "empty input");
  double sum = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const auto k = static_cast<size_t>(y_true[i]);
    if (k >= prob.cols()) Fail(ErrorCode::kShapeMismatch, "class index beyond prediction width");
    sum -= std::log(Clip(prob(i, k)));
  }
  return sum / static_cast<double>(y_true.size());
}

double Rmse(std::span<const double> y_true, std::span<const double> pred) {
  CheckSameLength(y_true.size(), pred.size());
  CheckFinite(pred);
  if (y_true.empty()) Fail(ErrorCode::kLengthMismatch, "empty input");
  double sum = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - pred[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(y_true.size()));
}

double Rmsle(std::span<const double> y_true, std::span<const double> pred) {
  CheckSameLength(y_true.size(), pred.size());
  std::vector<double> a(y_true.size()), b(pred.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (y_true[i] <= -1.0 || pred[i] <= -1.0) {
      Fail(ErrorCode::kNegativeBeyondDomain, "rmsle needs values > -1");
    }
    a[i] = std::log1p(y_true[i]);
    b[i] = std::log1p(pred[i]);
  }
  return Rmse(a, b);
}

double R2(std::span<const double> y_true, std::span<const double> pred) {
  CheckSameLength(y_true.size(), pred.size());
  CheckFinite(pred);
  if (y_true.empty()) Fail(ErrorCode::kLengthMismatch, "empty input");
  const double mean =
      std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - pred[i]) * (y_true[i] - pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) Fail(ErrorCode::kDegenerateConstantVector, "r2 with constant target");
  return 1.0 - ss_res / ss_tot;
}

MetricValue ComputeMetric(std::string_view name, std::span<const double> y_true,
                          const Matrix& y_pred) {
  CheckSameLength(y_true.size(), y_pred.rows());
  MetricValue m{std::string(name), 0.0, MetricDirection(name)};
  if (y_pred.cols() != 1) {
    if (name != "logloss") {
      Fail(ErrorCode::kShapeMismatch, "metric '" + m.name + "' needs a single prediction column");
    }
    m.value = MulticlassLogLoss(y_true, y_pred);
    return m;
  }
  return ComputeMetric(name, y_true, std::span<const double>(y_pred.data()));
}

MetricValue ComputeMetric(std::string_view name, std::span<const double> y_true,
                          std::span<const double> y_pred) {
  MetricValue m{std::string(name), 0.0, MetricDirection(name)};
  if (name == "auc") {
    m.value = Auc(y_true, y_pred);
  } else if (name == "gini") {
    m.value = 2.0 * Auc(y_true, y_pred) - 1.0;
  } else if (name == "logloss") {
    m.value = BinaryLogLoss(y_true, y_pred);
  } else if (name == "rmse") {
    m.value = Rmse(y_true, y_pred);
  } else if (name == "rmsle") {
    m.value = Rmsle(y_true, y_pred);
  } else {
    m.value = R2(y_true, y_pred);
  }
  return m;
}

double SpearmanRankCorr(std::span<const double> a, std::span<const double> b) {
  CheckSameLength(a.size(), b.size());
  CheckFinite(a);
  CheckFinite(b);
  const auto ra = MidRanks(a);
  const auto rb = MidRanks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    Fail(ErrorCode::kDegenerateConstantVector, "spearman with a constant vector");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace tabfe
