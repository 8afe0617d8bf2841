#include "tabfe/pipeline.h"

#include <cstring>
#include <set>
#include <sstream>

#include "tabfe/errors.h"
#include "tabfe/hash.h"
#include "tabfe/rng.h"

namespace tabfe {

PipelineKind ParsePipelineKind(std::string_view name) {
  if (name == "standardized") return PipelineKind::kStandardized;
  if (name == "expert_fe") return PipelineKind::kExpertFe;
  if (name == "expert_fe_tta") return PipelineKind::kExpertFeTta;
  Fail(ErrorCode::kSchemaViolation, "$.kind: unknown pipeline kind '" + std::string(name) + "'");
}

const char* PipelineKindName(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kStandardized:
      return "standardized";
    case PipelineKind::kExpertFe:
      return "expert_fe";
    case PipelineKind::kExpertFeTta:
      return "expert_fe_tta";
  }
  return "?";
}

bool PipelineSpec::needs_test() const {
  for (const auto& s : steps) {
    if (s.scope == FitScope::kTrainPlusTest) return true;
  }
  return false;
}

nlohmann::json PipelineSpec::ToJson() const {
  auto out_steps = nlohmann::json::array();
  for (const auto& s : steps) {
    out_steps.push_back({{"op", s.op}, {"scope", FitScopeName(s.scope)}, {"params", s.params}});
  }
  return {{"kind", PipelineKindName(kind)}, {"provenance", provenance}, {"steps", out_steps}};
}

namespace {

const std::set<std::string, std::less<>> kStandardizedOps = {
    "op_drop_constant", "op_impute_mean", "op_missing_as_category", "op_log_target"};

[[noreturn]] void Violation(const std::string& path, const std::string& what) {
  Fail(ErrorCode::kSchemaViolation, path + ": " + what);
}

}  // namespace

PipelineSpec PipelineSpecFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) Violation("$", "expected an object");
  for (const auto& [key, v] : doc.items()) {
    if (key != "kind" && key != "provenance" && key != "steps" && key != "name") {
      Violation("$." + key, "unknown key");
    }
  }
  PipelineSpec spec;
  if (!doc.contains("kind") || !doc["kind"].is_string()) Violation("$.kind", "required string");
  spec.kind = ParsePipelineKind(doc["kind"].get<std::string>());
  if (doc.contains("provenance")) {
    if (!doc["provenance"].is_string()) Violation("$.provenance", "expected a string");
    spec.provenance = doc["provenance"].get<std::string>();
  }
  if (!doc.contains("steps") || !doc["steps"].is_array()) Violation("$.steps", "required array");
  const auto& steps = doc["steps"];
  for (size_t i = 0; i < steps.size(); ++i) {
    const std::string path = "$.steps[" + std::to_string(i) + "]";
    const auto& s = steps[i];
    if (!s.is_object()) Violation(path, "expected an object");
    for (const auto& [key, v] : s.items()) {
      if (key != "op" && key != "scope" && key != "params") Violation(path + "." + key, "unknown key");
    }
    PipelineStep step;
    if (!s.contains("op") || !s["op"].is_string()) Violation(path + ".op", "required string");
    step.op = s["op"].get<std::string>();
    if (!IsKnownOperator(step.op)) {
      throw Error(ErrorCode::kUnknownOperator, path + ".op: " + step.op, static_cast<int>(i));
    }
    if (s.contains("scope")) {
      if (!s["scope"].is_string()) Violation(path + ".scope", "expected a string");
      const std::string scope = s["scope"].get<std::string>();
      if (scope != "train_only" && scope != "train_plus_test") {
        Violation(path + ".scope", "expected train_only or train_plus_test");
      }
      step.scope = ParseFitScope(scope);
    }
    if (s.contains("params")) {
      if (!s["params"].is_object()) Violation(path + ".params", "expected an object");
      step.params = s["params"];
    }
    if (spec.kind == PipelineKind::kStandardized && !kStandardizedOps.count(step.op)) {
      Violation(path + ".op", step.op + " is not allowed in a standardized pipeline");
    }
    if (step.scope == FitScope::kTrainPlusTest && spec.kind != PipelineKind::kExpertFeTta) {
      throw Error(ErrorCode::kIllegalScopeForKind,
                  path + ": train_plus_test scope in a " + PipelineKindName(spec.kind) + " pipeline",
                  static_cast<int>(i));
    }
    try {
      (void)MakeOperator(step.op, step.params);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSchemaViolation) throw;
      Violation(path + ".params", e.detail());
    }
    spec.steps.push_back(std::move(step));
  }
  return spec;
}

PipelineSpec ParsePipelineSpec(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    Violation("$", std::string("invalid JSON: ") + e.what());
  }
  return PipelineSpecFromJson(doc);
}

uint64_t SchemaFingerprint(const Table& t) {
  uint64_t h = kFnvOffsetBasis;
  for (size_t i = 0; i < t.num_columns(); ++i) {
    if (t.role(i) == ColumnRole::kTarget) continue;
    const Column& c = t.column(i);
    h = Fnv1a64(c.name(), h);
    h = Fnv1a64(std::string_view("\x1f", 1), h);
    h = Fnv1a64(ColumnKindName(c.kind()), h);
    h = Fnv1a64(std::string_view("\x1e", 1), h);
  }
  return h;
}

namespace {

std::string Hex(uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// Inputs a step saw during the pipeline fit; kept for the audit.
struct StepInputs {
  Table train;
  std::optional<Table> test;
  TargetSpec target;
};

std::string StepPrefix(size_t i) { return "s" + std::to_string(i) + "_"; }

Error AtStep(const Error& e, size_t i, const std::string& op) {
  return Error(e.code(), "step " + std::to_string(i) + " (" + op + "): " + e.detail(),
               static_cast<int>(i));
}

}  // namespace

struct PipelineFitter {
  static PipelineResult Fit(const PipelineSpec& spec, const Table& train, const Table* test,
                            const FoldAssignment* folds, const TargetSpec& target,
                            const PipelineOptions& options, std::vector<StepInputs>* record) {
    if (spec.needs_test() && test == nullptr) {
      Fail(ErrorCode::kScopeDataMissing, "a train_plus_test step needs the test features");
    }
    PipelineResult result;
    FittedPipeline& fp = result.fitted;
    fp.spec_ = spec;
    for (size_t i = 0; i < spec.steps.size(); ++i) {
      const auto& step = spec.steps[i];
      FittedStep fs{step, MakeOperator(step.op, step.params)};
      if (fs.op->fold_aware() && folds == nullptr) {
        Fail(ErrorCode::kScopeDataMissing,
             "step " + std::to_string(i) + " (" + step.op + ") needs a fold assignment");
      }
      fp.steps_.push_back(std::move(fs));
    }
    fp.input_fingerprint_ = SchemaFingerprint(train);
    Table cur_train = train;
    std::optional<Table> cur_test;
    if (test != nullptr) {
      cur_test = test->WithoutTarget();
      if (SchemaFingerprint(*cur_test) != fp.input_fingerprint_) {
        Fail(ErrorCode::kSchemaMismatch, "test columns differ from train columns");
      }
    }
    TargetSpec cur_target = target;
    for (size_t i = 0; i < fp.steps_.size(); ++i) {
      auto& fs = fp.steps_[i];
      if (record) record->push_back({cur_train, cur_test, cur_target});
      FitContext ctx;
      ctx.train = &cur_train;
      ctx.test = cur_test ? &*cur_test : nullptr;
      ctx.scope = fs.step.scope;
      ctx.folds = folds;
      ctx.target = &cur_target;
      ctx.log_target_hint = options.log_target_hint;
      ctx.seed = MixSeed(options.seed, i);
      ctx.prefix = StepPrefix(i);
      try {
        fs.op->Fit(ctx);
        Table next_train = fs.op->Transform(cur_train, Partition::kTrain);
        if (cur_test) cur_test = fs.op->Transform(*cur_test, Partition::kTest);
        cur_train = std::move(next_train);
      } catch (const Error& e) {
        if (e.step() >= 0) throw;
        throw AtStep(e, i, fs.step.op);
      }
      if (auto t = fs.op->target_transform()) cur_target.transform.Push(*t);
    }
    fp.target_ = cur_target;
    fp.output_fingerprint_ = SchemaFingerprint(cur_train);
    result.train = std::move(cur_train);
    result.test = std::move(cur_test);
    return result;
  }
};

PipelineResult FitPipeline(const PipelineSpec& spec, const Table& train, const Table* test,
                           const FoldAssignment* folds, const TargetSpec& target,
                           const PipelineOptions& options) {
  return PipelineFitter::Fit(spec, train, test, folds, target, options, nullptr);
}

Table ApplyPipeline(const FittedPipeline& fp, const Table& t, Partition part) {
  if (SchemaFingerprint(t) != fp.input_fingerprint_) {
    Fail(ErrorCode::kSchemaMismatch, "table columns differ from the fit-time input");
  }
  Table cur = t;
  for (size_t i = 0; i < fp.steps_.size(); ++i) {
    try {
      cur = fp.steps_[i].op->Transform(cur, part);
    } catch (const Error& e) {
      throw AtStep(e, i, fp.steps_[i].step.op);
    }
  }
  return cur;
}

nlohmann::json FittedPipeline::StateJson() const {
  auto steps = nlohmann::json::array();
  for (size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    steps.push_back({{"index", i},
                     {"op", s.step.op},
                     {"scope", FitScopeName(s.step.scope)},
                     {"params", s.step.params},
                     {"state", s.op->State()}});
  }
  return {{"kind", PipelineKindName(spec_.kind)},
          {"provenance", spec_.provenance},
          {"input_fingerprint", Hex(input_fingerprint_)},
          {"output_fingerprint", Hex(output_fingerprint_)},
          {"target_transform", target_.transform.ToJson()},
          {"steps", steps}};
}

bool AuditReport::passed() const {
  for (const auto& s : steps) {
    if (!s.passed) return false;
  }
  return true;
}

nlohmann::json AuditReport::ToJson() const {
  auto out = nlohmann::json::array();
  for (const auto& s : steps) {
    out.push_back({{"step", s.step},
                   {"op", s.op},
                   {"scope", FitScopeName(s.scope)},
                   {"scope_probes", s.scope_probes},
                   {"label_probes", s.label_probes},
                   {"passed", s.passed},
                   {"violation", s.violation}});
  }
  return {{"passed", passed()}, {"steps", out}};
}

std::string AuditReport::ToText() const {
  std::ostringstream os;
  for (const auto& s : steps) {
    os << "step " << s.step << " " << s.op << " [" << FitScopeName(s.scope) << "] "
       << (s.passed ? "PASS" : "FAIL") << " (scope probes " << s.scope_probes
       << ", label probes " << s.label_probes << ")";
    if (!s.passed) os << ": " << s.violation;
    os << "\n";
  }
  os << (passed() ? "audit passed" : "audit FAILED") << "\n";
  return os.str();
}

namespace {

// Randomly rewrites about half of the cells of every non-target column.
Table PerturbRows(const Table& t, Rng& rng) {
  std::vector<Column> cols;
  for (size_t c = 0; c < t.num_columns(); ++c) {
    const Column& col = t.column(c);
    if (t.role(c) == ColumnRole::kTarget) {
      cols.push_back(col);
      continue;
    }
    if (col.is_numeric()) {
      std::vector<double> v = col.values();
      for (double& x : v) {
        if (rng.Uniform01() < 0.5) continue;
        const double u = rng.Uniform01();
        if (u < 0.1) {
          x = std::nan("");
        } else {
          const double base = std::isnan(x) ? 0.0 : x;
          x = base + (1.0 + std::abs(base)) * rng.Normal();
        }
      }
      cols.push_back(Column::Numeric(col.name(), std::move(v)));
      continue;
    }
    auto dict = std::make_shared<Dictionary>(col.dictionary());
    std::vector<int32_t> codes = col.codes();
    for (auto& code : codes) {
      if (rng.Uniform01() < 0.5) continue;
      const double u = rng.Uniform01();
      if (u < 0.1) {
        code = kMissingCode;
      } else if (u < 0.5 || dict->size() == 0) {
        code = dict->Intern("probe_" + std::to_string(rng.UniformInt(8)));
      } else {
        code = static_cast<int32_t>(rng.UniformInt(static_cast<uint64_t>(dict->size())));
      }
    }
    cols.push_back(Column::Categorical(col.name(), std::move(dict), std::move(codes)));
  }
  return Table(std::move(cols), t.roles());
}

Table WithLabelChanged(const Table& t, const std::string& column, size_t row,
                       const TargetSpec& target, Rng& rng) {
  const Column& c = t.column(column);
  std::vector<double> v = c.values();
  const bool is_target = t.target() != nullptr && t.target()->name() == column;
  if (is_target && target.task == Task::kBinary) {
    v[row] = 1.0 - v[row];
  } else if (is_target && target.task == Task::kMulticlass) {
    const auto k = static_cast<uint64_t>(target.n_classes);
    v[row] = static_cast<double>((static_cast<uint64_t>(v[row]) + 1 + rng.UniformInt(k - 1)) % k);
  } else {
    v[row] += (1.0 + std::abs(v[row])) * (0.5 + rng.Uniform01());
  }
  return t.Replace(Column::Numeric(column, std::move(v)));
}

bool SameBits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

// Compares row `r` of every column of `a` (except `skip`) against `b`.
std::optional<std::string> RowDifference(const Table& a, const Table& b, size_t r,
                                         const std::vector<std::string>& skip) {
  if (a.column_names() != b.column_names()) return "output columns changed";
  for (size_t c = 0; c < a.num_columns(); ++c) {
    const Column& ca = a.column(c);
    if (std::find(skip.begin(), skip.end(), ca.name()) != skip.end()) continue;
    const Column& cb = b.column(c);
    bool same;
    if (ca.is_numeric()) {
      same = cb.is_numeric() && SameBits(ca.value(r), cb.value(r));
    } else {
      same = cb.is_categorical() && ca.is_missing(r) == cb.is_missing(r) &&
             (ca.is_missing(r) || ca.category(r) == cb.category(r));
    }
    if (!same) return "column '" + ca.name() + "' changed";
  }
  return std::nullopt;
}

}  // namespace

AuditReport AuditLeakage(const PipelineSpec& spec, const Table& train, const Table* test,
                         const FoldAssignment* folds, const TargetSpec& target,
                         const PipelineOptions& options, const AuditOptions& audit) {
  std::vector<StepInputs> inputs;
  (void)PipelineFitter::Fit(spec, train, test, folds, target, options, &inputs);
  Rng rng(audit.seed);
  AuditReport report;
  for (size_t i = 0; i < spec.steps.size(); ++i) {
    const PipelineStep& step = spec.steps[i];
    const StepInputs& in = inputs[i];
    StepAudit sa;
    sa.step = static_cast<int>(i);
    sa.op = step.op;
    sa.scope = step.scope;
    Table pseudo_test;
    const Table* test_in = in.test ? &*in.test : nullptr;
    if (test_in == nullptr) {
      pseudo_test = in.train.WithoutTarget();
      test_in = &pseudo_test;
    }
    auto fit_once = [&](const Table& tr, const Table* te) {
      auto op = MakeOperator(step.op, step.params);
      FitContext ctx;
      ctx.train = &tr;
      ctx.test = te;
      ctx.scope = step.scope;
      ctx.folds = folds;
      ctx.target = &in.target;
      ctx.log_target_hint = options.log_target_hint;
      ctx.seed = MixSeed(options.seed, i);
      ctx.prefix = StepPrefix(i);
      op->Fit(ctx);
      Table out = op->Transform(tr, Partition::kTrain);
      return std::make_tuple(op->State().dump(), std::move(out), std::move(op));
    };
    auto [state0, out0, op0] = fit_once(in.train, test_in);

    if (step.scope == FitScope::kTrainOnly) {
      for (int p = 0; p < audit.n_probes && sa.passed; ++p) {
        const Table perturbed = PerturbRows(*test_in, rng);
        auto [state, out, op] = fit_once(in.train, &perturbed);
        ++sa.scope_probes;
        if (state != state0) {
          sa.passed = false;
          sa.violation = "scope probe " + std::to_string(p) + ": test perturbation changed the fitted state";
        } else if (!out.SameAs(out0)) {
          sa.passed = false;
          sa.violation = "scope probe " + std::to_string(p) + ": test perturbation changed the train output";
        }
      }
    }

    if (op0->label_independent() && sa.passed) {
      const auto labels = op0->label_columns(in.train);
      std::vector<size_t> rows;
      if (audit.all_label_rows) {
        for (size_t r = 0; r < in.train.num_rows(); ++r) rows.push_back(r);
      } else {
        for (int p = 0; p < audit.n_probes && in.train.num_rows() > 0; ++p) {
          rows.push_back(static_cast<size_t>(rng.UniformInt(in.train.num_rows())));
        }
      }
      for (size_t r : rows) {
        if (!sa.passed) break;
        for (const auto& label : labels) {
          const Column& lc = in.train.column(label);
          if (!lc.is_numeric() || lc.is_missing(r)) continue;
          const Table changed = WithLabelChanged(in.train, label, r, in.target, rng);
          auto [state, out, op] = fit_once(changed, test_in);
          ++sa.label_probes;
          if (auto diff = RowDifference(out0, out, r, labels)) {
            sa.passed = false;
            sa.violation = "label probe at row " + std::to_string(r) + " of '" + label +
                           "': " + *diff;
            break;
          }
        }
      }
    }
    report.steps.push_back(std::move(sa));
  }
  return report;
}

}  // namespace tabfe
