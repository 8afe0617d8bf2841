// tabfe command-line front end.
//
// Exit codes: 0 ok, 2 invalid config, 3 IO, 4 runtime failure, 5 leakage.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabfe/errors.h"
#include "tabfe/experiment.h"
#include "tabfe/hpo.h"
#include "tabfe/io.h"
#include "tabfe/pipeline.h"
#include "tabfe/report.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitLeakage = 5;

bool g_verbose = false;

bool IsConfigError(tabfe::ErrorCode c) {
  using tabfe::ErrorCode;
  switch (c) {
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kIllegalScopeForKind:
    case ErrorCode::kUnknownOperator:
    case ErrorCode::kScopeDataMissing:
    case ErrorCode::kMissingFolds:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidBounds:
    case ErrorCode::kEmptyCategorical:
    case ErrorCode::kEmptySpace:
    case ErrorCode::kOrderTooSmall:
      return true;
    default:
      return false;
  }
}

// Config errors map to 2 and IO errors to 3 in every subcommand; anything
// else is `fallback`.
int ExitFor(const tabfe::Error& e, int fallback) {
  if (e.code() == tabfe::ErrorCode::kIoError) return kExitIo;
  if (IsConfigError(e.code())) return kExitConfig;
  return fallback;
}

int Report(const tabfe::Error& e, int fallback) {
  std::cerr << "error: " << e.what() << "\n";
  return ExitFor(e, fallback);
}

bool RequireFile(const fs::path& p) {
  std::error_code ec;
  if (fs::is_regular_file(p, ec)) return true;
  std::cerr << "error: IoError: cannot read " << p.string() << "\n";
  return false;
}

fs::path DefaultRunDir(const std::string& id) {
  const char* root = std::getenv("TABFE_RUN_ROOT");
  return fs::path(root && *root ? root : "runs") / id;
}

void PrintSummary(const tabfe::RunResult& r) {
  const tabfe::MetricValue& m = r.test ? *r.test : r.cv;
  std::cout << r.dataset << "\t" << r.pipeline << "\t" << r.learner << "\t" << r.regime << "\t"
            << m.name << "=" << tabfe::FormatDouble(m.value) << "\t"
            << (r.percentile ? tabfe::FormatDouble(*r.percentile) : "NA") << "\n";
}

int Validate(const fs::path& path) {
  if (!RequireFile(path)) return kExitIo;
  try {
    json doc;
    try {
      doc = json::parse(tabfe::ReadFile(path));
    } catch (const json::exception& e) {
      throw tabfe::Error(tabfe::ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
    }
    std::string kind;
    if (doc.is_object() && doc.contains("datasets")) {
      kind = "matrix";
      tabfe::LoadMatrixConfig(path);
    } else if (doc.is_object() && doc.contains("steps")) {
      kind = "pipeline";
      tabfe::PipelineSpecFromJson(doc);
    } else if (doc.is_object() && doc.contains("parameters")) {
      kind = "space";
      tabfe::ParseSpace(doc);
    } else if (doc.is_object() && doc.contains("train")) {
      kind = "experiment";
      tabfe::LoadExperimentConfig(path);
    } else if (doc.is_object() && doc.contains("target")) {
      kind = "schema";
      tabfe::SchemaConfig::FromJson(doc);
    } else {
      throw tabfe::Error(tabfe::ErrorCode::kSchemaViolation, "$: unrecognized document");
    }
    std::cout << "ok\t" << kind << "\t" << path.string() << "\n";
    return kExitOk;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitConfig);
  }
}

int Run(const fs::path& path, std::optional<std::string> run_dir, std::optional<uint64_t> seed,
        int jobs, bool force) {
  if (!RequireFile(path)) return kExitIo;
  tabfe::ExperimentConfig cfg;
  try {
    cfg = tabfe::LoadExperimentConfig(path);
    if (seed) cfg.seed = *seed;
    if (!cfg.n_folds) throw tabfe::Error(tabfe::ErrorCode::kInvalidConfig, "$.n_folds: required");
  } catch (const tabfe::Error& e) {
    return Report(e, kExitConfig);
  }
  const fs::path dir = run_dir ? fs::path(*run_dir) : DefaultRunDir(cfg.id());
  if (g_verbose) std::cerr << "run dir: " << dir.string() << "\n";
  try {
    tabfe::RunOptions opts;
    opts.jobs = jobs;
    opts.force = force;
    PrintSummary(tabfe::RunExperiment(cfg, dir, opts));
    return kExitOk;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitRuntime);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int Matrix(const fs::path& path, std::optional<std::string> run_dir, int jobs) {
  if (!RequireFile(path)) return kExitIo;
  std::vector<tabfe::MatrixCell> cells;
  try {
    cells = tabfe::LoadMatrixConfig(path);
  } catch (const tabfe::Error& e) {
    return Report(e, kExitConfig);
  }
  const fs::path dir = run_dir ? fs::path(*run_dir) : DefaultRunDir(path.stem().string());
  if (g_verbose) std::cerr << "matrix dir: " << dir.string() << ", " << cells.size() << " cells\n";
  try {
    const tabfe::MatrixOutcome out = tabfe::RunMatrix(cells, dir, jobs);
    for (const auto& r : out.matrix.cells) PrintSummary(r);
    std::cerr << "cells: " << out.ran.size() << " ran, " << out.skipped.size() << " skipped, "
              << out.failed.size() << " failed\n";
    if (!out.failed.empty()) {
      for (const auto& [key, msg] : out.failed) std::cerr << "failed\t" << key << "\t" << msg << "\n";
      return kExitRuntime;
    }
    return kExitOk;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitRuntime);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int Audit(const fs::path& path, int probes, std::optional<uint64_t> seed, bool as_json) {
  if (!RequireFile(path)) return kExitIo;
  try {
    tabfe::ExperimentConfig cfg = tabfe::LoadExperimentConfig(path);
    if (seed) cfg.seed = *seed;
    tabfe::AuditOptions opts;
    opts.n_probes = probes;
    opts.seed = cfg.seed;
    const tabfe::AuditReport rep = tabfe::AuditExperiment(cfg, opts);
    std::cout << (as_json ? rep.ToJson().dump(2) + "\n" : rep.ToText());
    return rep.passed() ? kExitOk : kExitLeakage;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitRuntime);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int ReportCmd(const fs::path& dir) {
  std::error_code ec;
  try {
    if (fs::is_directory(dir / "cells", ec)) {
      const tabfe::Report rep = tabfe::MakeReport(tabfe::CollectMatrix(dir));
      tabfe::WriteReport(rep, dir);
      std::cout << rep.markdown;
      return kExitOk;
    }
    if (fs::is_regular_file(dir / "metrics.json", ec)) {
      const auto r = tabfe::RunResult::FromJson(json::parse(tabfe::ReadFile(dir / "metrics.json")));
      const std::string md = tabfe::RunReportMarkdown(r);
      tabfe::WriteFile(dir / "report.md", md);
      std::cout << md;
      return kExitOk;
    }
    std::cerr << "error: IoError: no run or matrix results in " << dir.string() << "\n";
    return kExitIo;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitRuntime);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int InferSchemaCmd(const fs::path& csv) {
  if (!RequireFile(csv)) return kExitIo;
  try {
    std::cout << tabfe::InferSchema(csv).ToJson().dump(2) << "\n";
    return kExitOk;
  } catch (const tabfe::Error& e) {
    return Report(e, kExitRuntime);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabfe: leakage-safe tabular feature engineering and evaluation"};
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", g_verbose, "Print run directories to stderr");

  std::string config;
  std::optional<std::string> run_dir;
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool force = false;
  int probes = 16;
  bool as_json = false;

  auto* validate = app.add_subcommand("validate", "Parse a schema, pipeline, space, experiment or matrix document");
  validate->add_option("config", config, "Document path")->required();

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config, "Experiment document")->required();
  run->add_option("--run-dir", run_dir, "Run directory (default $TABFE_RUN_ROOT/<id>)");
  run->add_option("--seed", seed, "Master seed override");
  run->add_option("--jobs", jobs, "Parallel folds")->check(CLI::PositiveNumber);
  run->add_flag("--force", force, "Clear a non-empty run directory");

  auto* matrix = app.add_subcommand("matrix", "Run a result matrix (resumable)");
  matrix->add_option("config", config, "Matrix document")->required();
  matrix->add_option("--run-dir", run_dir, "Run directory (default $TABFE_RUN_ROOT/<name>)");
  matrix->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "Leakage audit of an experiment's pipeline");
  audit->add_option("config", config, "Experiment document")->required();
  audit->add_option("--probes", probes, "Perturbations per step")->check(CLI::PositiveNumber);
  audit->add_option("--seed", seed, "Probe seed override");
  audit->add_flag("--json", as_json, "Print the report as JSON");

  std::string dir;
  auto* report = app.add_subcommand("report", "Regenerate the report of a run or matrix directory");
  report->add_option("run-dir", dir, "Run or matrix directory")->required();

  std::string csv;
  auto* infer = app.add_subcommand("infer-schema", "Print a draft schema for a CSV file");
  infer->add_option("csv", csv, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*validate) return Validate(config);
  if (*run) return Run(config, run_dir, seed, jobs, force);
  if (*matrix) return Matrix(config, run_dir, jobs);
  if (*audit) return Audit(config, probes, seed, as_json);
  if (*report) return ReportCmd(dir);
  if (*infer) return InferSchemaCmd(csv);
  return kExitConfig;
}
