#ifndef TABFE_LEARNERS_H_
#define TABFE_LEARNERS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/matrix.h"
#include "tabfe/table.h"
#include "tabfe/target.h"

namespace tabfe {

enum class LearnerKind { kLinear, kGbdt, kExternal };

LearnerKind ParseLearnerKind(std::string_view name);
const char* LearnerKindName(LearnerKind kind);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kGbdt;
  // Hyperparameters by name; unset names take the learner defaults.
  nlohmann::json params = nlohmann::json::object();
  // Early-stopping / validation metric; empty selects rmse (regression) or
  // logloss (classification).
  std::string valid_metric;
  uint64_t seed = 0;
  // External learners only: command invoked with the fold directory.
  std::string command;
};

// Hyperparameter names a learner accepts.
const std::vector<std::string>& LearnerParameterNames(LearnerKind kind);
// Errors: InvalidConfig for names the learner does not declare.
void ValidateLearnerParams(const LearnerConfig& cfg);

// Regression tree node. Internal nodes route `value < threshold` left and
// missing values along `default_left`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  double Predict(std::span<const double> row) const;
  int depth() const;
};

struct FittedLearner {
  LearnerKind kind = LearnerKind::kLinear;
  Task task = Task::kRegression;
  int n_outputs = 1;
  size_t n_features = 0;

  // Linear: n_outputs x n_features weights and per-output bias. Multiclass
  // uses class 0 as the reference (zero row).
  Matrix weights;
  std::vector<double> bias;

  // GBDT: per-output base margin and rounds[i][output].
  std::vector<double> base_score;
  std::vector<std::vector<Tree>> rounds;

  int iterations = 0;       // rounds / optimizer iterations actually run
  int best_iteration = -1;  // GBDT with validation: 0-based best round
  std::vector<double> train_loss;
  std::vector<double> valid_metric;
  std::string valid_metric_name;
  std::vector<std::string> warnings;

  nlohmann::json ToJson() const;
};

// Numeric view of the feature-role columns: numeric values (NaN = missing)
// and categorical codes as doubles.
Matrix FeatureMatrix(const Table& t);

// Ridge regression (regression) or L2-regularized logistic / softmax
// regression fitted by Newton's method to relative gradient norm <= tol.
// Parameters: lambda (1.0), max_iter (1000), tol (1e-8).
// Missing inputs are imputed with 0 and recorded in `warnings`.
// Errors: NonFiniteInput, LengthMismatch.
FittedLearner FitLinear(const Matrix& x, std::span<const double> y,
                        const TargetSpec& target, const LearnerConfig& cfg);

struct ValidationData {
  const Matrix* x = nullptr;
  std::span<const double> y;
};

// Histogram gradient-boosted trees. Parameters follow the usual boosting
// vocabulary: n_estimators, patience, learning_rate, max_depth,
// colsample_bytree, subsample, min_child_weight, reg_alpha, reg_lambda,
// gamma, max_bins. Errors: NonFiniteInput, EmptyValidation.
FittedLearner FitGbdt(const Matrix& x, std::span<const double> y,
                      const ValidationData& valid, const TargetSpec& target,
                      const LearnerConfig& cfg);

// Dispatches to FitLinear / FitGbdt (External is not fit in-process).
FittedLearner FitLearner(const Matrix& x, std::span<const double> y,
                         const ValidationData& valid, const TargetSpec& target,
                         const LearnerConfig& cfg);

// Binary: P(y=1) column; multiclass: n x k probabilities; regression: raw.
// Errors: FeatureCountMismatch.
Matrix Predict(const FittedLearner& model, const Matrix& x);

// External learner protocol. The fold directory holds train.csv, valid.csv,
// test.csv and manifest.json; the command is run with the directory as its
// only argument and must write valid_pred.csv and test_pred.csv.
void WriteFoldBundle(const std::filesystem::path& dir, const Table& train,
                     const Table& valid, const Table& test,
                     const nlohmann::json& manifest);

struct ExternalPredictions {
  Matrix valid;
  Matrix test;
};

// Errors: ExternalFailed(exit code, stderr), MalformedPrediction.
ExternalPredictions RunExternal(const std::string& command,
                                const std::filesystem::path& dir, size_t n_valid,
                                size_t n_test, const TargetSpec& target);

}  // namespace tabfe

#endif  // TABFE_LEARNERS_H_
