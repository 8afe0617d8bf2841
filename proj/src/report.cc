#include "tabfe/report.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "parallel.h"
#include "tabfe/errors.h"
#include "tabfe/hash.h"

namespace tabfe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

auto IndexOf(const RunResult& r) { return std::tie(r.dataset, r.pipeline, r.learner, r.regime); }

int RegimeRank(const std::string& regime) {
  if (regime == "default") return 0;
  if (regime == "light") return 1;
  if (regime == "extensive") return 2;
  return -1;
}

std::string Cell(const std::optional<double>& v) { return v ? FormatDouble(*v) : "-"; }

json OrNull(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<const RunResult*> Sorted(const ResultMatrix& m) {
  std::vector<const RunResult*> out;
  for (const auto& r : m.cells) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const RunResult* a, const RunResult* b) { return IndexOf(*a) < IndexOf(*b); });
  return out;
}

// Score oriented so that larger is better.
double Oriented(const RunResult& r) { return r.score_higher_better() ? r.score() : -r.score(); }

// Cell used for one gain stage: the named regime, or the richest regime
// present for that pipeline kind.
const RunResult* StageCell(const ResultMatrix& m, const std::string& dataset,
                           const std::string& learner, const GainStage& stage) {
  const RunResult* best = nullptr;
  for (const auto* r : Sorted(m)) {
    if (r->dataset != dataset || r->learner != learner || r->pipeline_kind != stage.pipeline_kind) {
      continue;
    }
    if (!stage.regime.empty()) {
      if (r->regime == stage.regime && !best) best = r;
    } else if (!best || RegimeRank(r->regime) > RegimeRank(best->regime)) {
      best = r;
    }
  }
  return best;
}

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string SafeKey(std::string s) {
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

uint64_t FileDigest(const fs::path& p, uint64_t state) {
  std::error_code ec;
  if (!fs::exists(p, ec)) return Fnv1a64("<absent>", state);
  return Fnv1a64(ReadFile(p), state);
}

}  // namespace

void ResultMatrix::Add(RunResult r) {
  if (Find(r.dataset, r.pipeline, r.learner, r.regime)) {
    Fail(ErrorCode::kInvalidConfig, "duplicate matrix cell " + r.experiment_id);
  }
  cells.push_back(std::move(r));
}

const RunResult* ResultMatrix::Find(const std::string& dataset, const std::string& pipeline,
                                    const std::string& learner, const std::string& regime) const {
  for (const auto& r : cells) {
    if (r.dataset == dataset && r.pipeline == pipeline && r.learner == learner &&
        r.regime == regime) {
      return &r;
    }
  }
  return nullptr;
}

const std::vector<GainStage>& GainStages() {
  static const std::vector<GainStage> kStages = {
      {"default", "standardized", "default"},
      {"light_hpo", "standardized", "light"},
      {"extensive_hpo", "standardized", "extensive"},
      {"expert_fe", "expert_fe", ""},
      {"tta", "expert_fe_tta", ""},
  };
  return kStages;
}

Report MakeReport(const ResultMatrix& matrix) {
  if (matrix.cells.empty()) Fail(ErrorCode::kEmptyMatrix, "no completed cells");
  const auto cells = Sorted(matrix);
  const auto& stages = GainStages();
  std::set<std::string> datasets, learners, pipelines;
  for (const auto* r : cells) {
    datasets.insert(r->dataset);
    learners.insert(r->learner);
    pipelines.insert(r->pipeline);
  }

  Report rep;
  std::ostringstream md, csv;
  json cells_j = json::array();
  md << "# Result matrix\n\n## Cells\n\n"
     << "| dataset | pipeline | learner | regime | metric | value | percentile |\n"
     << "|---|---|---|---|---|---|---|\n";
  csv << "dataset,pipeline,learner,regime,metric,value,percentile\n";
  for (const auto* r : cells) {
    const MetricValue& m = r->test ? *r->test : r->cv;
    const std::string metric = (r->test ? "test_" : "cv_") + m.name;
    md << "| " << r->dataset << " | " << r->pipeline << " | " << r->learner << " | " << r->regime
       << " | " << metric << " | " << FormatDouble(m.value) << " | " << Cell(r->percentile) << " |\n";
    csv << r->dataset << "," << r->pipeline << "," << r->learner << "," << r->regime << ","
        << metric << "," << FormatDouble(m.value) << ","
        << (r->percentile ? FormatDouble(*r->percentile) : "") << "\n";
    cells_j.push_back(r->ToJson());
  }

  // Gain tables.
  json gains = json::object();
  std::map<std::string, std::map<std::string, std::vector<double>>> deltas_by_learner;
  for (const auto& d : datasets) {
    md << "\n## Component gains: " << d << "\n\n| learner |";
    for (const auto& s : stages) md << " " << s.label << " |";
    for (size_t i = 1; i < stages.size(); ++i) md << " delta " << stages[i].label << " |";
    md << "\n|---|";
    for (size_t i = 0; i < 2 * stages.size() - 1; ++i) md << "---|";
    md << "\n";
    for (const auto& l : learners) {
      std::vector<std::optional<double>> score(stages.size()), delta(stages.size());
      bool any = false;
      std::optional<double> prev;
      for (size_t i = 0; i < stages.size(); ++i) {
        if (const RunResult* r = StageCell(matrix, d, l, stages[i])) {
          score[i] = r->score();
          any = true;
          const double o = Oriented(*r);
          if (prev) {
            delta[i] = o - *prev;
            deltas_by_learner[l][stages[i].label].push_back(*delta[i]);
          }
          prev = o;
        }
      }
      if (!any) continue;
      md << "| " << l << " |";
      json sj = json::object(), dj = json::object();
      for (size_t i = 0; i < stages.size(); ++i) {
        md << " " << Cell(score[i]) << " |";
        sj[stages[i].label] = OrNull(score[i]);
      }
      for (size_t i = 1; i < stages.size(); ++i) {
        md << " " << (delta[i] ? FormatDouble(*delta[i]) : "") << " |";
        dj[stages[i].label] = OrNull(delta[i]);
      }
      md << "\n";
      gains[d][l] = {{"scores", sj}, {"deltas", dj}};
    }
  }

  // Per-learner mean deltas.
  json means = json::object();
  md << "\n## Mean gains per learner\n\n| learner |";
  for (size_t i = 1; i < stages.size(); ++i) md << " " << stages[i].label << " |";
  md << "\n|---|";
  for (size_t i = 1; i < stages.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& l : learners) {
    md << "| " << l << " |";
    json lj = json::object();
    for (size_t i = 1; i < stages.size(); ++i) {
      std::optional<double> mean;
      auto it = deltas_by_learner[l].find(stages[i].label);
      if (it != deltas_by_learner[l].end() && !it->second.empty()) {
        double s = 0.0;
        for (double v : it->second) s += v;
        mean = s / static_cast<double>(it->second.size());
      }
      md << " " << (mean ? FormatDouble(*mean) : "") << " |";
      lj[stages[i].label] = OrNull(mean);
    }
    md << "\n";
    means[l] = lj;
  }

  // Pairwise Spearman over shared cells.
  json spearman = json::array();
  md << "\n## Pipeline rank correlation (Spearman)\n\n| pipeline a | pipeline b | cells | rho |\n"
     << "|---|---|---|---|\n";
  const std::vector<std::string> pl(pipelines.begin(), pipelines.end());
  for (size_t a = 0; a < pl.size(); ++a) {
    for (size_t b = a + 1; b < pl.size(); ++b) {
      std::vector<double> va, vb;
      for (const auto* r : cells) {
        if (r->pipeline != pl[a]) continue;
        if (const RunResult* o = matrix.Find(r->dataset, pl[b], r->learner, r->regime)) {
          va.push_back(Oriented(*r));
          vb.push_back(Oriented(*o));
        }
      }
      std::optional<double> rho;
      if (va.size() >= 2) {
        try {
          rho = SpearmanRankCorr(va, vb);
        } catch (const Error&) {
          // constant scores: undefined
        }
      }
      md << "| " << pl[a] << " | " << pl[b] << " | " << va.size() << " | "
         << (rho ? FormatDouble(*rho) : "n/a") << " |\n";
      spearman.push_back({{"a", pl[a]}, {"b", pl[b]}, {"cells", va.size()}, {"rho", OrNull(rho)}});
    }
  }

  rep.markdown = md.str();
  rep.csv = csv.str();
  rep.json = {{"cells", cells_j}, {"gains", gains}, {"learner_mean_gains", means},
              {"spearman", spearman}};
  return rep;
}

std::vector<MatrixCell> LoadMatrixConfig(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  std::vector<MatrixCell> cells;
  try {
    if (!doc.is_object()) Fail(ErrorCode::kSchemaViolation, "$: expected an object");
    const json& datasets = doc.at("datasets");
    const auto pipelines = doc.at("pipelines").get<std::vector<std::string>>();
    const json& learners = doc.at("learners");
    const auto regimes = doc.at("regimes").get<std::vector<std::string>>();
    if (datasets.empty() || pipelines.empty() || learners.empty() || regimes.empty()) {
      Fail(ErrorCode::kInvalidConfig, "empty grid");
    }
    for (size_t di = 0; di < datasets.size(); ++di) {
      const json& d = datasets[di];
      const std::string dpath = "$.datasets[" + std::to_string(di) + "]";
      for (const auto& p : pipelines) {
        if (!d.contains("pipelines") || !d["pipelines"].contains(p)) {
          Fail(ErrorCode::kInvalidConfig, dpath + ".pipelines: no pipeline '" + p + "'");
        }
        for (size_t li = 0; li < learners.size(); ++li) {
          const json& l = learners[li];
          for (const auto& regime : regimes) {
            json e;
            e["dataset"] = d.at("name");
            e["train"] = d.at("train");
            if (d.contains("test")) e["test"] = d["test"];
            e["schema"] = d.at("schema");
            if (d.contains("leaderboard")) e["leaderboard"] = d["leaderboard"];
            e["pipeline"] = d["pipelines"][p];
            e["pipeline_name"] = p;
            json learner = l;
            learner.erase("space");
            e["learner"] = learner;
            if (l.contains("space")) e["space"] = l["space"];
            e["regime"] = regime;
            for (const char* key : {"n_folds", "fold_strategy", "group_column", "seed"}) {
              if (d.contains(key)) {
                e[key] = d[key];
              } else if (doc.contains(key)) {
                e[key] = doc[key];
              }
            }
            MatrixCell cell;
            try {
              cell.config = ExperimentConfig::FromJson(e, base);
            } catch (const Error& err) {
              throw Error(err.code(), dpath + " x " + p + " x learners[" + std::to_string(li) +
                                          "] x " + regime + ": " + err.detail());
            }
            const auto& c = cell.config;
            cell.key = SafeKey(c.dataset + "__" + c.pipeline_name + "__" + c.learner_name + "__" +
                               RegimeName(c.regime));
            uint64_t h = Fnv1a64(c.ToJson().dump());
            h = FileDigest(c.train_path, h);
            if (c.test_path) h = FileDigest(*c.test_path, h);
            if (c.leaderboard) h = FileDigest(c.leaderboard->path, h);
            cell.content_hash = Hex(h);
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  std::set<std::string> keys;
  for (const auto& c : cells) {
    if (!keys.insert(c.key).second) Fail(ErrorCode::kInvalidConfig, "duplicate cell " + c.key);
  }
  return cells;
}

MatrixOutcome RunMatrix(const std::vector<MatrixCell>& cells, const fs::path& run_dir, int jobs) {
  fs::create_directories(run_dir / "cells");
  struct Slot {
    std::optional<RunResult> result;
    bool skipped = false;
    std::string error;
  };
  std::vector<Slot> slots(cells.size());
  ParallelFor(cells.size(), jobs, [&](size_t i) {
    const MatrixCell& cell = cells[i];
    const fs::path dir = run_dir / "cells" / cell.key;
    const fs::path hash_file = dir / "cell_hash";
    std::error_code ec;
    try {
      if (fs::exists(hash_file, ec) && fs::exists(dir / "metrics.json", ec) &&
          ReadFile(hash_file) == cell.content_hash + "\n") {
        slots[i].result = RunResult::FromJson(json::parse(ReadFile(dir / "metrics.json")));
        slots[i].skipped = true;
        return;
      }
      RunOptions opts;
      opts.jobs = 1;
      opts.force = true;
      slots[i].result = RunExperiment(cell.config, dir, opts);
      WriteFile(hash_file, cell.content_hash + "\n");
    } catch (const std::exception& e) {
      slots[i].result.reset();
      slots[i].error = e.what();
    }
  });
  MatrixOutcome out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (slots[i].result) {
      (slots[i].skipped ? out.skipped : out.ran).push_back(cells[i].key);
      out.matrix.Add(std::move(*slots[i].result));
    } else {
      out.failed.emplace_back(cells[i].key, slots[i].error);
    }
  }
  if (!out.matrix.cells.empty()) WriteReport(MakeReport(out.matrix), run_dir);
  return out;
}

ResultMatrix CollectMatrix(const fs::path& run_dir) {
  ResultMatrix m;
  const fs::path cells = run_dir / "cells";
  std::error_code ec;
  if (!fs::is_directory(cells, ec)) return m;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(cells)) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    if (!fs::exists(d / "cell_hash", ec) || !fs::exists(d / "metrics.json", ec)) continue;
    m.Add(RunResult::FromJson(json::parse(ReadFile(d / "metrics.json"))));
  }
  return m;
}

void WriteReport(const Report& report, const fs::path& dir) {
  WriteFile(dir / "report.md", report.markdown);
  WriteFile(dir / "report.json", report.json.dump(2) + "\n");
  WriteFile(dir / "matrix.csv", report.csv);
}

}  // namespace tabfe
