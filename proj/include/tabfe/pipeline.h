#ifndef TABFE_PIPELINE_H_
#define TABFE_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/folds.h"
#include "tabfe/ops.h"
#include "tabfe/table.h"
#include "tabfe/target.h"

namespace tabfe {

enum class PipelineKind { kStandardized, kExpertFe, kExpertFeTta };

// "standardized", "expert_fe", "expert_fe_tta".
PipelineKind ParsePipelineKind(std::string_view name);
const char* PipelineKindName(PipelineKind kind);

struct PipelineStep {
  std::string op;
  nlohmann::json params = nlohmann::json::object();
  FitScope scope = FitScope::kTrainOnly;
};

// Document form:
//   {"kind": "expert_fe", "provenance": "...",
//    "steps": [{"op": "op_frequency_encode", "scope": "train_only",
//               "params": {"columns": ["a"]}}]}
struct PipelineSpec {
  PipelineKind kind = PipelineKind::kStandardized;
  std::vector<PipelineStep> steps;
  std::string provenance;

  bool needs_test() const;
  nlohmann::json ToJson() const;
};

// Errors: SchemaViolation (message carries the JSON path),
// IllegalScopeForKind, UnknownOperator.
PipelineSpec ParsePipelineSpec(std::string_view text);
PipelineSpec PipelineSpecFromJson(const nlohmann::json& doc);

// Hash of the ordered (name, kind) list of non-target columns.
uint64_t SchemaFingerprint(const Table& t);

struct PipelineOptions {
  bool log_target_hint = false;
  uint64_t seed = 0;
};

struct FittedStep {
  PipelineStep step;
  std::unique_ptr<Operator> op;
};

class FittedPipeline {
 public:
  FittedPipeline() = default;
  FittedPipeline(FittedPipeline&&) = default;
  FittedPipeline& operator=(FittedPipeline&&) = default;

  const PipelineSpec& spec() const { return spec_; }
  // Target spec after the pipeline; its transform chain holds the target
  // rescaling steps to invert on predictions.
  const TargetSpec& target() const { return target_; }
  uint64_t input_fingerprint() const { return input_fingerprint_; }
  uint64_t output_fingerprint() const { return output_fingerprint_; }
  size_t num_steps() const { return steps_.size(); }
  const Operator& op(size_t i) const { return *steps_.at(i).op; }

  nlohmann::json StateJson() const;

 private:
  friend struct PipelineFitter;
  friend Table ApplyPipeline(const FittedPipeline& fp, const Table& t, Partition part);

  PipelineSpec spec_;
  TargetSpec target_;
  uint64_t input_fingerprint_ = 0;
  uint64_t output_fingerprint_ = 0;
  std::vector<FittedStep> steps_;
};

struct PipelineResult {
  FittedPipeline fitted;
  Table train;                // transformed train, target included
  std::optional<Table> test;  // transformed test features, if test was given
};

// Fits every step on its declared scope, transforming train (and test)
// before the next step. A target column on `test` is ignored.
// Errors: ScopeDataMissing; operator errors carry the step index.
PipelineResult FitPipeline(const PipelineSpec& spec, const Table& train, const Table* test,
                           const FoldAssignment* folds, const TargetSpec& target,
                           const PipelineOptions& options = {});

// Replays the fitted steps. Errors: SchemaMismatch.
Table ApplyPipeline(const FittedPipeline& fp, const Table& t, Partition part);

struct StepAudit {
  int step = 0;
  std::string op;
  FitScope scope = FitScope::kTrainOnly;
  int scope_probes = 0;  // test perturbations run
  int label_probes = 0;  // single-label perturbations run
  bool passed = true;
  std::string violation;  // first violating probe
};

struct AuditReport {
  std::vector<StepAudit> steps;
  bool passed() const;
  nlohmann::json ToJson() const;
  std::string ToText() const;
};

struct AuditOptions {
  int n_probes = 16;
  uint64_t seed = 0;
  // Label probes visit every train row instead of n_probes random ones.
  bool all_label_rows = false;
};

// Re-fits each step in isolation on the inputs it saw during the pipeline
// fit. TrainOnly steps are refit under random test-row perturbations and
// must reproduce their state and train output bit for bit; steps that
// promise label independence are refit with one train label changed and
// must reproduce that row's output. Without a test table, a pseudo-test
// copy of the train features is probed.
AuditReport AuditLeakage(const PipelineSpec& spec, const Table& train, const Table* test,
                         const FoldAssignment* folds, const TargetSpec& target,
                         const PipelineOptions& options, const AuditOptions& audit);

}  // namespace tabfe

#endif  // TABFE_PIPELINE_H_
