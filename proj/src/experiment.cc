#include "tabfe/experiment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "parallel.h"
#include "tabfe/errors.h"
#include "tabfe/rng.h"

namespace tabfe {

namespace fs = std::filesystem;
using nlohmann::json;

Matrix EnsembleFolds(const std::vector<Matrix>& per_fold, const TargetSpec& target) {
  if (per_fold.empty()) Fail(ErrorCode::kShapeMismatch, "no fold predictions");
  const size_t rows = per_fold[0].rows(), cols = per_fold[0].cols();
  Matrix out(rows, cols, 0.0);
  for (const auto& m : per_fold) {
    if (m.rows() != rows || m.cols() != cols) {
      Fail(ErrorCode::kShapeMismatch, "fold predictions differ in shape");
    }
    for (size_t i = 0; i < m.data().size(); ++i) out.data()[i] += m.data()[i];
  }
  const double k = static_cast<double>(per_fold.size());
  for (double& v : out.data()) v /= k;
  if (target.task == Task::kMulticlass && cols > 1) {
    for (size_t r = 0; r < rows; ++r) {
      auto row = out.row(r);
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      if (s > 0.0) {
        for (double& v : row) v /= s;
      }
    }
  } else if (target.task == Task::kRegression && !target.transform.empty()) {
    for (double& v : out.data()) v = target.transform.Invert(v);
  }
  return out;
}

double LeaderboardPercentile(const Leaderboard& lb, double score) {
  if (!std::isfinite(score)) Fail(ErrorCode::kNonFinite, "score is not finite");
  if (lb.scores.empty()) Fail(ErrorCode::kMissingScoreColumn, "empty leaderboard");
  size_t better = 0;
  for (double s : lb.scores) {
    const bool b = lb.direction == Direction::kHigherBetter ? s > score : s < score;
    if (b) ++better;
  }
  const size_t n = lb.scores.size();
  return static_cast<double>(n - better) / static_cast<double>(n);
}

namespace {

[[noreturn]] void Bad(const std::string& path, const std::string& msg) {
  Fail(ErrorCode::kSchemaViolation, path + ": " + msg);
}

json ParseDoc(const fs::path& p) {
  const std::string text = ReadFile(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaViolation, p.string() + ": " + e.what());
  }
}

// A referenced document: a path string (relative to base) or an inline object.
json DocOrInline(const json& v, const fs::path& base, const std::string& path) {
  if (v.is_string()) return ParseDoc(base / v.get<std::string>());
  if (v.is_object()) return v;
  Bad(path, "expected a path or an object");
}

std::string GetString(const json& doc, const char* key, const std::string& fallback = "") {
  if (!doc.contains(key)) return fallback;
  if (!doc[key].is_string()) Bad(std::string("$.") + key, "expected a string");
  return doc[key].get<std::string>();
}

// Rethrows library errors with a stage label in front of the message.
template <class F>
auto Stage(const std::string& label, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), label + ": " + e.detail(), e.step());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, label + ": " + e.what());
  }
}

Column IdColumn(const Table& t, const std::string& id) {
  if (!id.empty() && t.has_column(id)) return t.column(id).Renamed("id");
  std::vector<double> rows(t.num_rows());
  std::iota(rows.begin(), rows.end(), 0.0);
  return Column::Numeric("id", std::move(rows));
}

// Metric on an n x k prediction matrix; binary tasks use the single
// probability column.
MetricValue Evaluate(const std::string& name, const std::vector<double>& y, const Matrix& pred) {
  return ComputeMetric(name, y, pred);
}

struct FoldOutput {
  FoldResult result;
  Matrix valid_pred;  // model space
  Matrix test_pred;   // model space
};

struct FoldInputs {
  const ExperimentConfig* cfg;
  const FoldAssignment* folds;
  const Table* train;  // transformed, target included
  const Table* test;   // transformed features or null
  const Matrix* x;
  const std::vector<double>* y;
  const Matrix* x_test;
  const TargetSpec* target;
  std::string valid_metric;
  fs::path run_dir;
};

FoldOutput RunFold(const FoldInputs& in, int f) {
  const ExperimentConfig& cfg = *in.cfg;
  const auto train_rows = in.folds->RowsOutsideFold(f);
  const auto valid_rows = in.folds->RowsInFold(f);
  const Matrix xt = in.x->TakeRows(train_rows);
  const Matrix xv = in.x->TakeRows(valid_rows);
  std::vector<double> yt, yv;
  for (size_t r : train_rows) yt.push_back((*in.y)[r]);
  for (size_t r : valid_rows) yv.push_back((*in.y)[r]);
  const size_t n_test = in.x_test ? in.x_test->rows() : 0;

  FoldOutput out;
  out.result.fold = f;
  int calls = 0;
  int best = -1;
  double best_value = 0.0;
  Objective objective = [&](const json& params) -> std::optional<double> {
    const int index = calls++;
    json merged = cfg.learner_params;
    const json materialized = cfg.space.Materialize(params);
    for (const auto& [k, v] : materialized.items()) merged[k] = v;
    Matrix vp, tp;
    if (cfg.learner == LearnerKind::kExternal) {
      const fs::path dir =
          in.run_dir / "external" / ("fold_" + std::to_string(f)) / ("trial_" + std::to_string(index));
      const Table empty_test = in.test ? *in.test : in.train->Take(std::vector<size_t>{}).WithoutTarget();
      json manifest = {{"target", cfg.schema.target},
                       {"task", TaskName(in.target->task)},
                       {"n_classes", in.target->n_classes},
                       {"metric", in.valid_metric},
                       {"hyperparameters", merged},
                       {"seed", cfg.seed ^ static_cast<uint64_t>(f)}};
      WriteFoldBundle(dir, in.train->Take(train_rows), in.train->Take(valid_rows), empty_test,
                      manifest);
      auto preds = RunExternal(cfg.learner_command, dir, valid_rows.size(), n_test, *in.target);
      vp = std::move(preds.valid);
      tp = std::move(preds.test);
    } else {
      LearnerConfig lc;
      lc.kind = cfg.learner;
      lc.params = merged;
      lc.valid_metric = in.valid_metric;
      lc.seed = cfg.seed ^ static_cast<uint64_t>(f);
      ValidateLearnerParams(lc);
      const FittedLearner model = FitLearner(xt, yt, {&xv, yv}, *in.target, lc);
      vp = Predict(model, xv);
      if (n_test > 0) tp = Predict(model, *in.x_test);
    }
    const MetricValue m = Evaluate(in.valid_metric, yv, vp);
    const double v = MinimizeOriented(m);
    if (std::isfinite(v) && (best < 0 || v < best_value)) {
      best = index;
      best_value = v;
      out.valid_pred = std::move(vp);
      out.test_pred = std::move(tp);
      out.result.valid = m;
    }
    return v;
  };
  RegimeResult rr = RunRegime(cfg.regime, cfg.space, objective, MixSeed(cfg.seed, f));
  if (rr.best_index != best) {
    Fail(ErrorCode::kInvalidConfig, "best trial bookkeeping disagrees");
  }
  out.result.best_trial = rr.best_index;
  out.result.best_params = cfg.space.Materialize(rr.best_params);
  out.result.n_trials = static_cast<int>(rr.trials.size());
  out.result.trials = std::move(rr.trials);
  if (in.target->task == Task::kRegression && !in.target->transform.empty()) {
    std::vector<double> raw_y, raw_p;
    for (size_t i = 0; i < yv.size(); ++i) {
      raw_y.push_back(in.target->transform.Invert(yv[i]));
      raw_p.push_back(in.target->transform.Invert(out.valid_pred(i, 0)));
    }
    out.result.valid_original = Rmse(raw_y, raw_p);
  }
  return out;
}

void PrepareRunDir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
    if (!force) {
      Fail(ErrorCode::kRunDirNotEmpty, dir.string() + " is not empty (use --force)");
    }
    for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
  }
  fs::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

json MetricJson(const MetricValue& m) {
  return {{"metric", m.name}, {"value", m.value}, {"direction", DirectionName(m.direction)}};
}

MetricValue MetricFromJson(const json& j) {
  return {j.at("metric").get<std::string>(), j.at("value").get<double>(),
          ParseDirection(j.at("direction").get<std::string>())};
}

struct LoadedData {
  Table train;
  std::optional<Table> test;
  bool test_has_target = false;
  TargetSpec target;
};

LoadedData LoadData(const ExperimentConfig& cfg) {
  LoadedData d;
  d.target = cfg.schema.MakeTargetSpec();
  d.train = EncodeTarget(LoadCsv(cfg.train_path, cfg.schema), d.target);
  if (cfg.test_path) {
    Table test = LoadCsv(*cfg.test_path, cfg.schema, &d.train, false);
    const Column* y = test.target();
    if (y && y->missing_count() == 0 && test.num_rows() > 0) {
      test = EncodeTargetLike(test, d.target);
      d.test_has_target = true;
    }
    d.test = std::move(test);
  }
  return d;
}

}  // namespace

std::string ExperimentConfig::id() const {
  return dataset + "__" + pipeline_name + "__" + learner_name + "__" + RegimeName(regime) +
         "__s" + std::to_string(seed);
}

json ExperimentConfig::ToJson() const {
  json j;
  j["dataset"] = dataset;
  j["train"] = train_path.string();
  if (test_path) j["test"] = test_path->string();
  j["schema"] = schema.ToJson();
  j["pipeline"] = pipeline.ToJson();
  j["pipeline_name"] = pipeline_name;
  j["learner"] = {{"kind", LearnerKindName(learner)},
                  {"name", learner_name},
                  {"params", learner_params},
                  {"command", learner_command}};
  j["space"] = space.ToJson();
  j["regime"] = RegimeName(regime);
  if (n_folds) j["n_folds"] = *n_folds;
  j["fold_strategy"] = FoldStrategyName(fold_strategy);
  j["group_column"] = group_column;
  j["seed"] = seed;
  if (leaderboard) {
    j["leaderboard"] = {{"path", leaderboard->path.string()},
                        {"direction", DirectionName(leaderboard->direction)}};
  }
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) Bad("$", "expected an object");
  static const std::vector<std::string> kKeys = {
      "dataset", "train",  "test",    "schema",        "pipeline",     "pipeline_name",
      "learner", "space",  "regime",  "n_folds",       "fold_strategy", "group_column",
      "seed",    "leaderboard"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) Bad("$." + key, "unknown key");
  }
  ExperimentConfig c;
  c.dataset = GetString(doc, "dataset", "dataset");
  const std::string train = GetString(doc, "train");
  if (train.empty()) Bad("$.train", "required");
  c.train_path = fs::absolute(base_dir / train).lexically_normal();
  if (doc.contains("test") && !doc["test"].is_null()) {
    c.test_path = fs::absolute(base_dir / GetString(doc, "test")).lexically_normal();
  }
  if (!doc.contains("schema")) Bad("$.schema", "required");
  c.schema = Stage("$.schema", [&] { return SchemaConfig::FromJson(DocOrInline(doc["schema"], base_dir, "$.schema")); });
  if (c.schema.target.empty()) Bad("$.schema.target", "required");
  if (!doc.contains("pipeline")) Bad("$.pipeline", "required");
  c.pipeline = Stage("$.pipeline", [&] {
    return PipelineSpecFromJson(DocOrInline(doc["pipeline"], base_dir, "$.pipeline"));
  });
  c.pipeline_name = GetString(doc, "pipeline_name", PipelineKindName(c.pipeline.kind));

  const json learner = doc.value("learner", json::object());
  if (!learner.is_object()) Bad("$.learner", "expected an object");
  c.learner = Stage("$.learner.kind", [&] { return ParseLearnerKind(learner.value("kind", "linear")); });
  c.learner_name = learner.value("name", std::string(LearnerKindName(c.learner)));
  c.learner_params = learner.value("params", json::object());
  c.learner_command = learner.value("command", "");
  if (c.learner == LearnerKind::kExternal && c.learner_command.empty()) {
    Bad("$.learner.command", "required for external learners");
  }
  if (doc.contains("space") && !doc["space"].is_null()) {
    c.space = Stage("$.space", [&] { return ParseSpace(DocOrInline(doc["space"], base_dir, "$.space")); });
  }
  c.regime = Stage("$.regime", [&] { return ParseRegime(GetString(doc, "regime", "default")); });
  if (c.regime != Regime::kDefault && c.space.parameters.empty()) {
    Fail(ErrorCode::kInvalidConfig, "$.space: HPO regime '" + std::string(RegimeName(c.regime)) +
                                        "' needs a search space");
  }
  if (c.learner != LearnerKind::kExternal) {
    LearnerConfig lc;
    lc.kind = c.learner;
    lc.params = c.learner_params;
    Stage("$.learner.params", [&] { ValidateLearnerParams(lc); });
    const auto& names = LearnerParameterNames(c.learner);
    for (const auto& p : c.space.parameters) {
      if (std::find(names.begin(), names.end(), p.name) == names.end()) {
        Fail(ErrorCode::kInvalidConfig, "$.space: " + std::string(LearnerKindName(c.learner)) +
                                            " learner has no hyperparameter '" + p.name + "'");
      }
    }
  }
  if (doc.contains("n_folds")) {
    if (!doc["n_folds"].is_number_integer()) Bad("$.n_folds", "expected an integer");
    c.n_folds = doc["n_folds"].get<int>();
  }
  c.fold_strategy = Stage("$.fold_strategy", [&] { return ParseFoldStrategy(GetString(doc, "fold_strategy", "plain")); });
  c.group_column = GetString(doc, "group_column");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<int64_t>() >= 0)) {
      Bad("$.seed", "expected a non-negative integer");
    }
    c.seed = doc["seed"].get<uint64_t>();
  }
  if (doc.contains("leaderboard") && !doc["leaderboard"].is_null()) {
    const json& lb = doc["leaderboard"];
    if (!lb.is_object() || !lb.contains("path")) Bad("$.leaderboard", "expected {path, direction}");
    LeaderboardRef ref;
    ref.path = fs::absolute(base_dir / lb["path"].get<std::string>()).lexically_normal();
    ref.direction = Stage("$.leaderboard.direction", [&] {
      return ParseDirection(lb.value("direction", "higher_better"));
    });
    c.leaderboard = ref;
  }
  return c;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  const json doc = ParseDoc(path);
  return ExperimentConfig::FromJson(doc, fs::absolute(path).parent_path());
}

double RunResult::score() const {
  if (percentile) return *percentile;
  if (test) return test->value;
  return cv.value;
}

bool RunResult::score_higher_better() const {
  if (percentile) return true;
  return (test ? test->direction : cv.direction) == Direction::kHigherBetter;
}

json RunResult::ToJson() const {
  json j;
  j["experiment"] = experiment_id;
  j["dataset"] = dataset;
  j["pipeline"] = pipeline;
  j["pipeline_kind"] = pipeline_kind;
  j["learner"] = learner;
  j["regime"] = regime;
  j["seed"] = seed;
  j["n_folds"] = n_folds;
  j["metric"] = metric;
  j["valid_metric"] = valid_metric;
  json folds_j = json::array();
  for (const auto& f : folds) {
    json fj = MetricJson(f.valid);
    fj["fold"] = f.fold;
    fj["best_trial"] = f.best_trial;
    fj["best_params"] = f.best_params;
    fj["n_trials"] = f.n_trials;
    if (f.valid_original) fj["rmse_original_space"] = *f.valid_original;
    folds_j.push_back(fj);
  }
  j["folds"] = folds_j;
  j["cv"] = MetricJson(cv);
  j["test"] = test ? MetricJson(*test) : json(nullptr);
  j["percentile"] = percentile ? json(*percentile) : json(nullptr);
  j["percentile_source"] = percentile_source;
  return j;
}

RunResult RunResult::FromJson(const json& j) {
  try {
    RunResult r;
    r.experiment_id = j.at("experiment").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.pipeline = j.at("pipeline").get<std::string>();
    r.pipeline_kind = j.at("pipeline_kind").get<std::string>();
    r.learner = j.at("learner").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.n_folds = j.at("n_folds").get<int>();
    r.metric = j.at("metric").get<std::string>();
    r.valid_metric = j.at("valid_metric").get<std::string>();
    for (const auto& fj : j.at("folds")) {
      FoldResult f;
      f.fold = fj.at("fold").get<int>();
      f.valid = MetricFromJson(fj);
      f.best_trial = fj.at("best_trial").get<int>();
      f.best_params = fj.at("best_params");
      f.n_trials = fj.at("n_trials").get<int>();
      if (fj.contains("rmse_original_space")) f.valid_original = fj["rmse_original_space"].get<double>();
      r.folds.push_back(std::move(f));
    }
    r.cv = MetricFromJson(j.at("cv"));
    if (!j.at("test").is_null()) r.test = MetricFromJson(j["test"]);
    if (!j.at("percentile").is_null()) r.percentile = j["percentile"].get<double>();
    r.percentile_source = j.value("percentile_source", "");
    return r;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaViolation, std::string("metrics document: ") + e.what());
  }
}

RunResult RunExperiment(const ExperimentConfig& cfg, const fs::path& run_dir,
                        const RunOptions& options) {
  if (!cfg.n_folds) Fail(ErrorCode::kInvalidConfig, "$.n_folds: required to run an experiment");
  Stage("write", [&] { PrepareRunDir(run_dir, options.force); });

  LoadedData data = Stage("load", [&] { return LoadData(cfg); });
  const FoldAssignment folds = Stage("folds", [&] {
    return MakeFolds(data.train, cfg.fold_strategy, *cfg.n_folds, cfg.seed, data.target,
                     cfg.group_column);
  });
  PipelineOptions popts;
  popts.log_target_hint = cfg.schema.log_target;
  popts.seed = cfg.seed;
  const Table* test_in = data.test ? &*data.test : nullptr;
  PipelineResult pr = Stage("pipeline", [&] {
    return FitPipeline(cfg.pipeline, data.train, test_in, &folds, data.target, popts);
  });
  const TargetSpec& target = pr.fitted.target();

  const std::string valid_metric = Stage("evaluate", [&] { return ValidationMetricFor(cfg.schema.metric); });
  const Matrix x = FeatureMatrix(pr.train);
  const std::vector<double> y = TargetValues(pr.train);
  Matrix x_test;
  if (pr.test) x_test = FeatureMatrix(*pr.test);

  FoldInputs in{&cfg,
                &folds,
                &pr.train,
                pr.test ? &*pr.test : nullptr,
                &x,
                &y,
                pr.test ? &x_test : nullptr,
                &target,
                valid_metric,
                run_dir};
  std::vector<FoldOutput> outputs(folds.n_folds);
  ParallelFor(outputs.size(), options.jobs, [&](size_t f) {
    outputs[f] = Stage("fold " + std::to_string(f), [&] { return RunFold(in, static_cast<int>(f)); });
  });

  RunResult r;
  r.experiment_id = cfg.id();
  r.dataset = cfg.dataset;
  r.pipeline = cfg.pipeline_name;
  r.pipeline_kind = PipelineKindName(cfg.pipeline.kind);
  r.learner = cfg.learner_name;
  r.regime = RegimeName(cfg.regime);
  r.seed = cfg.seed;
  r.n_folds = folds.n_folds;
  r.metric = cfg.schema.metric;
  r.valid_metric = valid_metric;

  // Out-of-fold predictions, mapped back to the original target space.
  const size_t k = static_cast<size_t>(target.num_outputs());
  Matrix oof(y.size(), k, 0.0);
  for (const auto& o : outputs) {
    const auto rows = folds.RowsInFold(o.result.fold);
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t c = 0; c < k; ++c) oof(rows[i], c) = o.valid_pred(i, c);
    }
  }
  std::vector<double> y_raw = TargetValues(data.train);
  if (target.task == Task::kRegression && !target.transform.empty()) {
    for (double& v : oof.data()) v = target.transform.Invert(v);
  }
  std::optional<Matrix> ensembled;
  if (pr.test) {
    std::vector<Matrix> per_fold;
    for (const auto& o : outputs) per_fold.push_back(o.test_pred);
    ensembled = Stage("evaluate", [&] { return EnsembleFolds(per_fold, target); });
  }
  Stage("evaluate", [&] {
    r.cv = Evaluate(cfg.schema.metric, y_raw, oof);
    if (ensembled && data.test_has_target) {
      r.test = Evaluate(cfg.schema.metric, TargetValues(*data.test), *ensembled);
    }
    if (cfg.leaderboard) {
      const Leaderboard lb = LoadLeaderboard(cfg.leaderboard->path, cfg.leaderboard->direction);
      r.percentile = LeaderboardPercentile(lb, r.test ? r.test->value : r.cv.value);
      r.percentile_source = r.test ? "test" : "cv";
    }
  });
  for (auto& o : outputs) r.folds.push_back(std::move(o.result));

  Stage("write", [&] {
    WriteFile(run_dir / "config.json", cfg.ToJson().dump(2) + "\n");
    WriteFile(run_dir / "folds.json", folds.ToJson().dump() + "\n");
    WriteFile(run_dir / "pipeline_state.json", pr.fitted.StateJson().dump(2) + "\n");
    WritePredictions(run_dir / "oof_predictions.csv", IdColumn(data.train, cfg.schema.id), oof);
    if (ensembled) {
      WritePredictions(run_dir / "predictions.csv", IdColumn(*data.test, cfg.schema.id), *ensembled);
    }
    for (size_t f = 0; f < outputs.size(); ++f) {
      const std::string tag = std::to_string(f);
      WriteFile(run_dir / ("trials_fold_" + tag + ".jsonl"), TrialsToJsonl(r.folds[f].trials));
      if (ensembled) {
        fs::create_directories(run_dir / ("fold_" + tag));
        WriteFile(run_dir / ("fold_" + tag) / "test_pred.csv",
                  FormatPredictionValues(outputs[f].test_pred));
      }
    }
    WriteFile(run_dir / "metrics.json", r.ToJson().dump(2) + "\n");
    WriteFile(run_dir / "report.md", RunReportMarkdown(r));
  });
  return r;
}

AuditReport AuditExperiment(const ExperimentConfig& cfg, const AuditOptions& options) {
  LoadedData data = Stage("load", [&] { return LoadData(cfg); });
  std::optional<FoldAssignment> folds;
  if (cfg.n_folds) {
    folds = Stage("folds", [&] {
      return MakeFolds(data.train, cfg.fold_strategy, *cfg.n_folds, cfg.seed, data.target,
                       cfg.group_column);
    });
  }
  PipelineOptions popts;
  popts.log_target_hint = cfg.schema.log_target;
  popts.seed = cfg.seed;
  return Stage("audit", [&] {
    return AuditLeakage(cfg.pipeline, data.train, data.test ? &*data.test : nullptr,
                        folds ? &*folds : nullptr, data.target, popts, options);
  });
}

std::string RunReportMarkdown(const RunResult& r) {
  std::ostringstream os;
  os << "# " << r.experiment_id << "\n\n";
  os << "| field | value |\n|---|---|\n";
  os << "| dataset | " << r.dataset << " |\n";
  os << "| pipeline | " << r.pipeline << " (" << r.pipeline_kind << ") |\n";
  os << "| learner | " << r.learner << " |\n";
  os << "| regime | " << r.regime << " |\n";
  os << "| seed | " << r.seed << " |\n";
  os << "| cv " << r.cv.name << " | " << FormatDouble(r.cv.value) << " |\n";
  if (r.test) os << "| test " << r.test->name << " | " << FormatDouble(r.test->value) << " |\n";
  if (r.percentile) {
    os << "| percentile (" << r.percentile_source << ") | " << FormatDouble(*r.percentile) << " |\n";
  }
  os << "\n## Folds\n\n| fold | " << r.valid_metric << " | best trial | best params |\n|---|---|---|---|\n";
  for (const auto& f : r.folds) {
    os << "| " << f.fold << " | " << FormatDouble(f.valid.value) << " | " << f.best_trial << " | `"
       << f.best_params.dump() << "` |\n";
  }
  return os.str();
}

}  // namespace tabfe
