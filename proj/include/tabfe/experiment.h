#ifndef TABFE_EXPERIMENT_H_
#define TABFE_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/folds.h"
#include "tabfe/hpo.h"
#include "tabfe/io.h"
#include "tabfe/learners.h"
#include "tabfe/matrix.h"
#include "tabfe/metrics.h"
#include "tabfe/pipeline.h"
#include "tabfe/target.h"

namespace tabfe {

// Mean of per-fold predictions. Multiclass rows are renormalized to sum 1;
// regression means are taken in model space and mapped back once through
// `transform`. Errors: ShapeMismatch.
Matrix EnsembleFolds(const std::vector<Matrix>& per_fold, const TargetSpec& target);

// (entries not strictly better than score) / |lb|. Ties do not count as
// better. Errors: NonFinite.
double LeaderboardPercentile(const Leaderboard& lb, double score);

struct LeaderboardRef {
  std::filesystem::path path;
  Direction direction = Direction::kHigherBetter;
};

// Experiment document. Paths are resolved against the directory of the
// document; schema, pipeline and space may also be given inline.
//   {"dataset": "smoke", "train": "train.csv", "test": "test.csv",
//    "schema": "schema.json", "pipeline": "standardized.json",
//    "learner": {"kind": "linear", "params": {}, "command": ""},
//    "space": "linear.json", "regime": "default", "n_folds": 10,
//    "fold_strategy": "stratified_target", "group_column": "",
//    "seed": 0, "leaderboard": {"path": "lb.csv", "direction": "higher_better"}}
struct ExperimentConfig {
  std::string dataset;
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> test_path;
  SchemaConfig schema;
  PipelineSpec pipeline;
  std::string pipeline_name;  // defaults to the pipeline kind
  LearnerKind learner = LearnerKind::kLinear;
  std::string learner_name;  // defaults to the learner kind
  nlohmann::json learner_params = nlohmann::json::object();
  std::string learner_command;
  SearchSpace space;
  Regime regime = Regime::kDefault;
  std::optional<int> n_folds;
  FoldStrategy fold_strategy = FoldStrategy::kPlain;
  std::string group_column;
  uint64_t seed = 0;
  std::optional<LeaderboardRef> leaderboard;

  std::string id() const;
  // Canonical form with every referenced document inlined and absolute
  // data paths.
  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir);
};

// Errors: IoError, SchemaViolation / InvalidConfig and the errors of the
// referenced documents.
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

struct FoldResult {
  int fold = 0;
  MetricValue valid;             // validation metric, model space
  std::optional<double> valid_original;  // regression rmse after inversion
  int best_trial = -1;
  nlohmann::json best_params;
  int n_trials = 0;
  std::vector<Trial> trials;  // not stored in metrics.json
};

struct RunResult {
  std::string experiment_id;
  std::string dataset;
  std::string pipeline;  // pipeline name
  std::string pipeline_kind;
  std::string learner;
  std::string regime;
  uint64_t seed = 0;
  int n_folds = 0;
  std::string metric;
  std::string valid_metric;
  std::vector<FoldResult> folds;
  MetricValue cv;                  // out-of-fold metric, schema metric
  std::optional<MetricValue> test;  // when the test file has targets
  std::optional<double> percentile;
  std::string percentile_source;  // "test", "cv" or empty

  // Percentile when present, else the test metric, else the CV metric.
  double score() const;
  bool score_higher_better() const;

  nlohmann::json ToJson() const;  // metrics.json content (trial histories excluded)
  static RunResult FromJson(const nlohmann::json& doc);
};

struct RunOptions {
  int jobs = 1;
  bool force = false;  // clear a non-empty run directory first
};

// load -> folds -> pipeline -> per fold {HPO, prediction} -> ensemble ->
// metrics -> artifacts in `run_dir`. Errors are rethrown with their stage
// ("load", "folds", "pipeline", "fold k", "evaluate", "write") prefixed;
// RunDirNotEmpty when `run_dir` has content and `force` is unset.
RunResult RunExperiment(const ExperimentConfig& cfg, const std::filesystem::path& run_dir,
                        const RunOptions& options = {});

// Leakage audit of the configured pipeline on the configured data. Folds
// are built only when the document sets n_folds.
AuditReport AuditExperiment(const ExperimentConfig& cfg, const AuditOptions& options);

// Markdown summary of one run.
std::string RunReportMarkdown(const RunResult& r);

}  // namespace tabfe

#endif  // TABFE_EXPERIMENT_H_
