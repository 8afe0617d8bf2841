// Histogram gradient boosting: quantile bins per feature, depth-wise tree
// growth with second-order gains, shrinkage, row/column subsampling and
// early stopping on a validation metric.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tabfe/errors.h"
#include "tabfe/learners.h"
#include "tabfe/metrics.h"
#include "tabfe/rng.h"

namespace tabfe {

namespace {

constexpr uint16_t kMissingBin = std::numeric_limits<uint16_t>::max();

struct GbdtParams {
  int n_estimators = 4000;
  int patience = 200;
  double learning_rate = 0.3;
  int max_depth = 6;
  double colsample_bytree = 1.0;
  double subsample = 1.0;
  double min_child_weight = 1.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  int max_bins = 256;
};

GbdtParams ReadParams(const nlohmann::json& p) {
  GbdtParams g;
  auto num = [&](const char* name, double& out) {
    if (p.contains(name)) out = p.at(name).get<double>();
  };
  auto integer = [&](const char* name, int& out) {
    if (p.contains(name)) out = static_cast<int>(std::llround(p.at(name).get<double>()));
  };
  integer("n_estimators", g.n_estimators);
  integer("patience", g.patience);
  num("learning_rate", g.learning_rate);
  integer("max_depth", g.max_depth);
  num("colsample_bytree", g.colsample_bytree);
  num("subsample", g.subsample);
  num("min_child_weight", g.min_child_weight);
  num("reg_alpha", g.reg_alpha);
  num("reg_lambda", g.reg_lambda);
  num("gamma", g.gamma);
  integer("max_bins", g.max_bins);
  g.max_bins = std::clamp(g.max_bins, 2, 256);
  if (g.n_estimators < 1) Fail(ErrorCode::kInvalidConfig, "n_estimators must be >= 1");
  if (g.max_depth < 0) Fail(ErrorCode::kInvalidConfig, "max_depth must be >= 0");
  if (g.subsample <= 0 || g.subsample > 1 || g.colsample_bytree <= 0 || g.colsample_bytree > 1) {
    Fail(ErrorCode::kInvalidConfig, "subsample/colsample_bytree must be in (0, 1]");
  }
  return g;
}

// Bin b holds values v with (number of thresholds <= v) == b.
struct BinMapper {
  std::vector<double> thresholds;

  uint16_t Bin(double v) const {
    if (std::isnan(v)) return kMissingBin;
    return static_cast<uint16_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), v) - thresholds.begin());
  }
  size_t num_bins() const { return thresholds.size() + 1; }
};

BinMapper MakeBinMapper(std::vector<double> values, int max_bins) {
  BinMapper bm;
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  if (values.empty()) return bm;
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= static_cast<size_t>(max_bins)) {
    for (size_t i = 1; i < distinct.size(); ++i) {
      bm.thresholds.push_back(distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2.0);
    }
    return bm;
  }
  const size_t n = values.size();
  for (int q = 1; q < max_bins; ++q) {
    const size_t idx = static_cast<size_t>(q) * n / static_cast<size_t>(max_bins);
    if (idx == 0 || idx >= n || values[idx - 1] == values[idx]) continue;
    const double t = values[idx - 1] + (values[idx] - values[idx - 1]) / 2.0;
    if (bm.thresholds.empty() || t > bm.thresholds.back()) bm.thresholds.push_back(t);
  }
  return bm;
}

double SoftThreshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<uint16_t>>& bins,
              const std::vector<BinMapper>& mappers, const GbdtParams& params,
              const std::vector<size_t>& features)
      : bins_(bins), mappers_(mappers), params_(params), features_(features) {}

  Tree Build(const std::vector<GradPair>& grad, std::vector<size_t> rows) {
    grad_ = &grad;
    tree_ = Tree{};
    Grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  double Score(double g, double h) const {
    const double denom = h + params_.reg_lambda;
    if (denom <= 0.0) return 0.0;
    const double t = SoftThreshold(g, params_.reg_alpha);
    return t * t / denom;
  }

  double LeafValue(double g, double h) const {
    const double denom = h + params_.reg_lambda;
    if (denom <= 0.0) return 0.0;
    return -params_.learning_rate * SoftThreshold(g, params_.reg_alpha) / denom;
  }

  int Grow(std::vector<size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    GradPair total;
    bool uniform_gradient = true;
    const double g0 = rows.empty() ? 0.0 : (*grad_)[rows.front()].g;
    for (auto r : rows) {
      total.g += (*grad_)[r].g;
      total.h += (*grad_)[r].h;
      if ((*grad_)[r].g != g0) uniform_gradient = false;
    }
    tree_.nodes[id].value = LeafValue(total.g, total.h);
    // Identical gradients leave nothing for any split to separate.
    if (depth >= params_.max_depth || rows.size() < 2 || uniform_gradient) return id;

    const double parent_score = Score(total.g, total.h);
    double best_gain = -std::numeric_limits<double>::infinity();
    int best_feature = -1;
    size_t best_bin = 0;
    bool best_default_left = true;
    std::vector<GradPair> hist;
    for (auto f : features_) {
      const auto& mapper = mappers_[f];
      const size_t nb = mapper.num_bins();
      if (nb < 2) continue;
      hist.assign(nb, GradPair{});
      GradPair miss;
      const auto& col = bins_[f];
      for (auto r : rows) {
        const auto b = col[r];
        const auto& gp = (*grad_)[r];
        GradPair& slot = b == kMissingBin ? miss : hist[b];
        slot.g += gp.g;
        slot.h += gp.h;
      }
      GradPair left;
      for (size_t b = 0; b + 1 < nb; ++b) {
        left.g += hist[b].g;
        left.h += hist[b].h;
        for (int dir = 0; dir < 2; ++dir) {
          const bool missing_left = dir == 0;
          GradPair l = left;
          if (missing_left) {
            l.g += miss.g;
            l.h += miss.h;
          }
          const GradPair r{total.g - l.g, total.h - l.h};
          if (l.h < params_.min_child_weight || r.h < params_.min_child_weight) continue;
          if (l.h <= 0.0 || r.h <= 0.0) continue;
          const double gain = Score(l.g, l.h) + Score(r.g, r.h) - parent_score;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_bin = b;
            best_default_left = missing_left;
          }
        }
      }
    }
    // Zero-gain splits are kept: symmetric interactions (XOR) only pay off
    // one level further down.
    const double tolerance = 1e-12 * std::max(1.0, parent_score);
    if (best_feature < 0 || best_gain < params_.gamma - tolerance) return id;

    std::vector<size_t> left_rows, right_rows;
    const auto& col = bins_[static_cast<size_t>(best_feature)];
    for (auto r : rows) {
      const auto b = col[r];
      const bool go_left = b == kMissingBin ? best_default_left : b <= best_bin;
      (go_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    auto& node = tree_.nodes[id];
    node.feature = best_feature;
    node.threshold = mappers_[static_cast<size_t>(best_feature)].thresholds[best_bin];
    node.default_left = best_default_left;
    const int left = Grow(std::move(left_rows), depth + 1);
    const int right = Grow(std::move(right_rows), depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  const std::vector<std::vector<uint16_t>>& bins_;
  const std::vector<BinMapper>& mappers_;
  const GbdtParams& params_;
  const std::vector<size_t>& features_;
  const std::vector<GradPair>* grad_ = nullptr;
  Tree tree_;
};

double Sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Raw margins -> prediction matrix for the task.
Matrix Link(const Matrix& margin, Task task) {
  Matrix out(margin.rows(), margin.cols());
  for (size_t i = 0; i < margin.rows(); ++i) {
    if (task == Task::kBinary) {
      out(i, 0) = Sigmoid(margin(i, 0));
    } else if (task == Task::kMulticlass) {
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < margin.cols(); ++k) mx = std::max(mx, margin(i, k));
      double denom = 0.0;
      for (size_t k = 0; k < margin.cols(); ++k) {
        out(i, k) = std::exp(margin(i, k) - mx);
        denom += out(i, k);
      }
      for (size_t k = 0; k < margin.cols(); ++k) out(i, k) /= denom;
    } else {
      out(i, 0) = margin(i, 0);
    }
  }
  return out;
}

double TrainLoss(std::span<const double> y, const Matrix& pred, Task task) {
  if (task == Task::kRegression) {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += (y[i] - pred(i, 0)) * (y[i] - pred(i, 0));
    return s / static_cast<double>(y.size());
  }
  if (task == Task::kBinary) return BinaryLogLoss(y, pred.data());
  return MulticlassLogLoss(y, pred);
}

void CheckFiniteTarget(std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) Fail(ErrorCode::kNonFiniteInput, "non-finite target");
  }
}

void CheckNoInfinity(const Matrix& x) {
  for (double v : x.data()) {
    if (std::isinf(v)) Fail(ErrorCode::kNonFiniteInput, "infinite feature value");
  }
}

}  // namespace

double Tree::Predict(std::span<const double> row) const {
  int id = 0;
  while (!nodes[static_cast<size_t>(id)].is_leaf()) {
    const auto& n = nodes[static_cast<size_t>(id)];
    const double v = row[static_cast<size_t>(n.feature)];
    const bool left = std::isnan(v) ? n.default_left : v < n.threshold;
    id = left ? n.left : n.right;
  }
  return nodes[static_cast<size_t>(id)].value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

FittedLearner FitGbdt(const Matrix& x, std::span<const double> y,
                      const ValidationData& valid, const TargetSpec& target,
                      const LearnerConfig& cfg) {
  ValidateLearnerParams(cfg);
  const GbdtParams params = ReadParams(cfg.params);
  if (x.rows() != y.size()) Fail(ErrorCode::kLengthMismatch, "X rows vs y length");
  if (x.rows() == 0) Fail(ErrorCode::kTooFewRows, "empty training set");
  CheckFiniteTarget(y);
  CheckNoInfinity(x);
  const bool has_valid = valid.x != nullptr && valid.x->rows() > 0;
  if (params.patience > 0 && !has_valid) {
    Fail(ErrorCode::kEmptyValidation, "patience is set but no validation data was given");
  }
  if (has_valid) {
    if (valid.x->cols() != x.cols()) Fail(ErrorCode::kFeatureCountMismatch, "validation width");
    if (valid.x->rows() != valid.y.size()) Fail(ErrorCode::kLengthMismatch, "validation y length");
    CheckFiniteTarget(valid.y);
    CheckNoInfinity(*valid.x);
  }

  const size_t n = x.rows();
  const size_t d = x.cols();
  const int k = target.num_outputs();
  if (target.task == Task::kMulticlass && k < 2) {
    Fail(ErrorCode::kWrongTask, "multiclass needs n_classes >= 2");
  }

  FittedLearner m;
  m.kind = LearnerKind::kGbdt;
  m.task = target.task;
  m.n_outputs = k;
  m.n_features = d;
  m.valid_metric_name = cfg.valid_metric.empty()
                            ? (target.task == Task::kRegression ? "rmse" : "logloss")
                            : cfg.valid_metric;
  const Direction direction = MetricDirection(m.valid_metric_name);

  // Base margins.
  m.base_score.assign(static_cast<size_t>(k), 0.0);
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  if (target.task == Task::kRegression) {
    m.base_score[0] = mean_y;
  } else if (target.task == Task::kBinary) {
    const double p = std::clamp(mean_y, 1e-6, 1.0 - 1e-6);
    m.base_score[0] = std::log(p / (1.0 - p));
  } else {
    std::vector<double> counts(static_cast<size_t>(k), 0.0);
    for (double v : y) counts.at(static_cast<size_t>(v)) += 1.0;
    for (int c = 0; c < k; ++c) {
      m.base_score[static_cast<size_t>(c)] =
          std::log(std::max(counts[static_cast<size_t>(c)] / static_cast<double>(n), 1e-6));
    }
  }

  std::vector<BinMapper> mappers(d);
  std::vector<std::vector<uint16_t>> bins(d, std::vector<uint16_t>(n));
  for (size_t f = 0; f < d; ++f) {
    mappers[f] = MakeBinMapper(x.column(f), params.max_bins);
    for (size_t i = 0; i < n; ++i) bins[f][i] = mappers[f].Bin(x(i, f));
  }

  Matrix margin(n, static_cast<size_t>(k));
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) margin(i, static_cast<size_t>(c)) = m.base_score[static_cast<size_t>(c)];
  }
  Matrix valid_margin;
  if (has_valid) {
    valid_margin = Matrix(valid.x->rows(), static_cast<size_t>(k));
    for (size_t i = 0; i < valid_margin.rows(); ++i) {
      for (int c = 0; c < k; ++c) {
        valid_margin(i, static_cast<size_t>(c)) = m.base_score[static_cast<size_t>(c)];
      }
    }
  }

  Rng rng(cfg.seed);
  std::vector<GradPair> grad(n);
  std::vector<size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);
  double best_metric = 0.0;

  for (int round = 0; round < params.n_estimators; ++round) {
    std::vector<size_t> rows = all_rows;
    if (params.subsample < 1.0) {
      rng.Shuffle(rows);
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(std::floor(params.subsample * static_cast<double>(n))));
      rows.resize(keep);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<size_t> features = all_features;
    if (params.colsample_bytree < 1.0 && d > 0) {
      rng.Shuffle(features);
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(std::llround(params.colsample_bytree * static_cast<double>(d))));
      features.resize(std::min(keep, d));
      std::sort(features.begin(), features.end());
    }

    const Matrix prob = Link(margin, target.task);
    std::vector<Tree> round_trees;
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<size_t>(c);
      for (size_t i = 0; i < n; ++i) {
        if (target.task == Task::kRegression) {
          grad[i] = {margin(i, 0) - y[i], 1.0};
        } else if (target.task == Task::kBinary) {
          const double p = prob(i, 0);
          grad[i] = {p - y[i], std::max(p * (1.0 - p), 1e-16)};
        } else {
          const double p = prob(i, cc);
          const double yk = static_cast<int>(y[i]) == c ? 1.0 : 0.0;
          grad[i] = {p - yk, std::max(p * (1.0 - p), 1e-16)};
        }
      }
      TreeBuilder builder(bins, mappers, params, features);
      round_trees.push_back(builder.Build(grad, rows));
    }
    for (size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      for (int c = 0; c < k; ++c) {
        margin(i, static_cast<size_t>(c)) += round_trees[static_cast<size_t>(c)].Predict(row);
      }
    }
    m.train_loss.push_back(TrainLoss(y, Link(margin, target.task), target.task));
    m.iterations = round + 1;

    if (has_valid) {
      for (size_t i = 0; i < valid_margin.rows(); ++i) {
        const auto row = valid.x->row(i);
        for (int c = 0; c < k; ++c) {
          valid_margin(i, static_cast<size_t>(c)) += round_trees[static_cast<size_t>(c)].Predict(row);
        }
      }
      const double metric =
          ComputeMetric(m.valid_metric_name, valid.y, Link(valid_margin, target.task)).value;
      m.valid_metric.push_back(metric);
      const bool improved = m.best_iteration < 0 ||
                            (direction == Direction::kHigherBetter ? metric > best_metric
                                                                   : metric < best_metric);
      if (improved) {
        best_metric = metric;
        m.best_iteration = round;
      }
    }
    m.rounds.push_back(std::move(round_trees));
    if (has_valid && params.patience > 0 && round - m.best_iteration >= params.patience) break;
  }
  if (has_valid) m.rounds.resize(static_cast<size_t>(m.best_iteration + 1));
  return m;
}

Matrix PredictGbdt(const FittedLearner& model, const Matrix& x) {
  Matrix margin(x.rows(), static_cast<size_t>(model.n_outputs));
  for (size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (int c = 0; c < model.n_outputs; ++c) {
      double s = model.base_score[static_cast<size_t>(c)];
      for (const auto& round : model.rounds) s += round[static_cast<size_t>(c)].Predict(row);
      margin(i, static_cast<size_t>(c)) = s;
    }
  }
  return Link(margin, model.task);
}

}  // namespace tabfe
