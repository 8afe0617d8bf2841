#include "tabfe/learners.h"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "tabfe/errors.h"
#include "tabfe/io.h"

namespace tabfe {

Matrix PredictGbdt(const FittedLearner& model, const Matrix& x);

LearnerKind ParseLearnerKind(std::string_view name) {
  if (name == "linear") return LearnerKind::kLinear;
  if (name == "gbdt") return LearnerKind::kGbdt;
  if (name == "external") return LearnerKind::kExternal;
  Fail(ErrorCode::kInvalidConfig, "unknown learner '" + std::string(name) + "'");
}

const char* LearnerKindName(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kLinear:
      return "linear";
    case LearnerKind::kGbdt:
      return "gbdt";
    case LearnerKind::kExternal:
      return "external";
  }
  return "?";
}

const std::vector<std::string>& LearnerParameterNames(LearnerKind kind) {
  static const std::vector<std::string> kLinear = {"lambda", "max_iter", "tol"};
  static const std::vector<std::string> kGbdt = {
      "n_estimators", "patience",  "learning_rate", "max_depth",  "colsample_bytree", "subsample",
      "min_child_weight", "reg_alpha", "reg_lambda", "gamma", "max_bins"};
  static const std::vector<std::string> kNone;
  switch (kind) {
    case LearnerKind::kLinear:
      return kLinear;
    case LearnerKind::kGbdt:
      return kGbdt;
    case LearnerKind::kExternal:
      return kNone;
  }
  return kNone;
}

void ValidateLearnerParams(const LearnerConfig& cfg) {
  if (!cfg.params.is_object()) Fail(ErrorCode::kInvalidConfig, "learner params must be an object");
  if (cfg.kind == LearnerKind::kExternal) return;  // passed through to the command
  const auto& names = LearnerParameterNames(cfg.kind);
  for (const auto& [name, value] : cfg.params.items()) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      Fail(ErrorCode::kInvalidConfig, std::string(LearnerKindName(cfg.kind)) +
                                          " learner has no hyperparameter '" + name + "'");
    }
    if (!value.is_number()) {
      Fail(ErrorCode::kInvalidConfig, "hyperparameter '" + name + "' must be numeric");
    }
  }
}

Matrix FeatureMatrix(const Table& t) {
  std::vector<size_t> cols;
  for (size_t c = 0; c < t.num_columns(); ++c) {
    if (t.role(c) == ColumnRole::kFeature) cols.push_back(c);
  }
  Matrix x(t.num_rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    const Column& c = t.column(cols[j]);
    for (size_t i = 0; i < t.num_rows(); ++i) {
      if (c.is_missing(i)) {
        x(i, j) = std::nan("");
      } else {
        x(i, j) = c.is_numeric() ? c.value(i) : static_cast<double>(c.code(i));
      }
    }
  }
  return x;
}

FittedLearner FitLearner(const Matrix& x, std::span<const double> y,
                         const ValidationData& valid, const TargetSpec& target,
                         const LearnerConfig& cfg) {
  switch (cfg.kind) {
    case LearnerKind::kLinear:
      return FitLinear(x, y, target, cfg);
    case LearnerKind::kGbdt:
      return FitGbdt(x, y, valid, target, cfg);
    case LearnerKind::kExternal:
      break;
  }
  Fail(ErrorCode::kInvalidConfig, "external learners run through RunExternal");
}

Matrix Predict(const FittedLearner& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    Fail(ErrorCode::kFeatureCountMismatch, "model expects " + std::to_string(model.n_features) +
                                               " features, got " + std::to_string(x.cols()));
  }
  if (model.kind == LearnerKind::kGbdt) return PredictGbdt(model, x);

  const size_t k = static_cast<size_t>(model.n_outputs);
  Matrix eta(x.rows(), k);
  for (size_t i = 0; i < x.rows(); ++i) {
    for (size_t c = 0; c < k; ++c) {
      double s = model.bias[c];
      for (size_t j = 0; j < x.cols(); ++j) {
        const double v = x(i, j);
        if (!std::isnan(v)) s += model.weights(c, j) * v;
      }
      eta(i, c) = s;
    }
  }
  if (model.task == Task::kRegression) return eta;
  Matrix out(x.rows(), k);
  for (size_t i = 0; i < x.rows(); ++i) {
    if (model.task == Task::kBinary) {
      out(i, 0) = 1.0 / (1.0 + std::exp(-eta(i, 0)));
      continue;
    }
    double mx = eta(i, 0);
    for (size_t c = 1; c < k; ++c) mx = std::max(mx, eta(i, c));
    double denom = 0.0;
    for (size_t c = 0; c < k; ++c) {
      out(i, c) = std::exp(eta(i, c) - mx);
      denom += out(i, c);
    }
    for (size_t c = 0; c < k; ++c) out(i, c) /= denom;
  }
  return out;
}

nlohmann::json FittedLearner::ToJson() const {
  nlohmann::json j;
  j["kind"] = LearnerKindName(kind);
  j["task"] = TaskName(task);
  j["n_outputs"] = n_outputs;
  j["n_features"] = n_features;
  j["iterations"] = iterations;
  j["best_iteration"] = best_iteration;
  j["train_loss"] = train_loss;
  j["valid_metric"] = valid_metric;
  j["valid_metric_name"] = valid_metric_name;
  j["warnings"] = warnings;
  if (kind == LearnerKind::kLinear) {
    auto w = nlohmann::json::array();
    for (size_t c = 0; c < weights.rows(); ++c) {
      const auto row = weights.row(c);
      w.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["weights"] = w;
    j["bias"] = bias;
  } else {
    j["base_score"] = base_score;
    auto rounds_json = nlohmann::json::array();
    for (const auto& round : rounds) {
      auto trees = nlohmann::json::array();
      for (const auto& tree : round) {
        auto nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
          if (n.is_leaf()) {
            nodes.push_back({{"leaf", n.value}});
          } else {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"default_left", n.default_left},
                             {"left", n.left},
                             {"right", n.right}});
          }
        }
        trees.push_back(nodes);
      }
      rounds_json.push_back(trees);
    }
    j["rounds"] = rounds_json;
  }
  return j;
}

void WriteFoldBundle(const std::filesystem::path& dir, const Table& train,
                     const Table& valid, const Table& test,
                     const nlohmann::json& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create '" + dir.string() + "'");
  WriteCsv(dir / "train.csv", train);
  WriteCsv(dir / "valid.csv", valid);
  WriteCsv(dir / "test.csv", test);
  WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

void CheckProbabilities(const Matrix& m, const std::string& what) {
  for (double v : m.data()) {
    if (v < 0.0 || v > 1.0) {
      Fail(ErrorCode::kMalformedPrediction, what + ": probability outside [0, 1]");
    }
  }
}

}  // namespace

ExternalPredictions RunExternal(const std::string& command,
                                const std::filesystem::path& dir, size_t n_valid,
                                size_t n_test, const TargetSpec& target) {
  std::filesystem::remove(dir / "valid_pred.csv");
  std::filesystem::remove(dir / "test_pred.csv");
  const auto stderr_path = dir / "stderr.txt";
  const std::string cmd = command + " " + ShellQuote(dir.string()) + " > " +
                          ShellQuote((dir / "stdout.txt").string()) + " 2> " +
                          ShellQuote(stderr_path.string());
  const int status = std::system(cmd.c_str());
  int exit_code = status;
  if (status != -1 && WIFEXITED(status)) exit_code = WEXITSTATUS(status);
  if (status == -1 || exit_code != 0) {
    std::string err;
    try {
      err = ReadFile(stderr_path);
    } catch (const Error&) {
    }
    throw Error(ErrorCode::kExternalFailed,
                "exit code " + std::to_string(exit_code) + (err.empty() ? "" : ": " + err));
  }
  const size_t k = static_cast<size_t>(target.num_outputs());
  ExternalPredictions out;
  out.valid = ReadPredictionValues(dir / "valid_pred.csv", n_valid, k);
  out.test = ReadPredictionValues(dir / "test_pred.csv", n_test, k);
  if (target.is_classification()) {
    CheckProbabilities(out.valid, "valid_pred.csv");
    CheckProbabilities(out.test, "test_pred.csv");
  }
  return out;
}

}  // namespace tabfe
