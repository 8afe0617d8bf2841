#ifndef TABFE_REPORT_H_
#define TABFE_REPORT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabfe/experiment.h"

namespace tabfe {

// Runs indexed by (dataset, pipeline, learner, regime).
struct ResultMatrix {
  std::vector<RunResult> cells;

  // Errors: InvalidConfig on a duplicate index.
  void Add(RunResult r);
  const RunResult* Find(const std::string& dataset, const std::string& pipeline,
                        const std::string& learner, const std::string& regime) const;
};

// Component chain of the gain tables, in order.
struct GainStage {
  std::string label;
  std::string pipeline_kind;
  std::string regime;  // empty: the richest regime present
};
const std::vector<GainStage>& GainStages();

struct Report {
  std::string markdown;
  nlohmann::json json;
  std::string csv;  // dataset,pipeline,learner,regime,metric,value,percentile
};

// Per dataset and learner: the score at each stage of the chain
// Default -> LightHPO -> ExtensiveHPO -> ExpertFE -> TTA and the deltas
// between consecutive present stages (oriented so that positive is better).
// Per-learner mean deltas across datasets. Pairwise Spearman correlation of
// pipeline scores over the (dataset, learner, regime) cells they share.
// Errors: EmptyMatrix.
Report MakeReport(const ResultMatrix& matrix);

// Matrix document. Each dataset names its pipelines; the grid is
// datasets x pipelines x learners x regimes.
//   {"datasets": [{"name": "d", "train": "train.csv", "test": "test.csv",
//                  "schema": "schema.json",
//                  "leaderboard": {"path": "lb.csv", "direction": "higher_better"},
//                  "pipelines": {"standardized": "std.json", "expert_fe": "fe.json"}}],
//    "pipelines": ["standardized", "expert_fe"],
//    "learners": [{"name": "linear", "kind": "linear", "space": "linear.json"}],
//    "regimes": ["default", "light"],
//    "n_folds": 5, "fold_strategy": "stratified", "seed": 0}
struct MatrixCell {
  ExperimentConfig config;
  std::string key;          // directory name under cells/
  std::string content_hash; // config plus input file digests
};

// Errors: InvalidConfig for an empty grid or a pipeline a dataset lacks,
// and the errors of the referenced documents.
std::vector<MatrixCell> LoadMatrixConfig(const std::filesystem::path& path);

struct MatrixOutcome {
  ResultMatrix matrix;
  std::vector<std::string> ran;
  std::vector<std::string> skipped;  // completed earlier with the same hash
  std::vector<std::pair<std::string, std::string>> failed;  // key, message
};

// Runs every cell into run_dir/cells/<key> on `jobs` workers, skipping cells
// whose stored hash matches, then writes report.md, report.json and
// matrix.csv over the completed cells.
MatrixOutcome RunMatrix(const std::vector<MatrixCell>& cells, const std::filesystem::path& run_dir,
                        int jobs);

// Rebuilds the matrix from the metrics.json files under run_dir/cells.
ResultMatrix CollectMatrix(const std::filesystem::path& run_dir);
void WriteReport(const Report& report, const std::filesystem::path& dir);

}  // namespace tabfe

#endif  // TABFE_REPORT_H_
