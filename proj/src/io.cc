#include "tabfe/io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tabfe/errors.h"

namespace tabfe {

namespace {

const std::vector<std::string> kMetrics = {"auc", "logloss", "rmse", "rmsle", "r2", "gini"};

bool IsMissingToken(std::string_view cell, bool quoted,
                    const std::vector<std::string>& tokens) {
  if (quoted) return false;
  return std::find(tokens.begin(), tokens.end(), cell) != tokens.end();
}

std::optional<double> ParseNumber(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string ParseErrorMessage(size_t row, size_t col, std::string_view what) {
  return "row " + std::to_string(row) + ", col " + std::to_string(col) + ": " +
         std::string(what);
}

bool NeedsQuoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

std::string Quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string CsvField(std::string_view s) {
  return NeedsQuoting(s) ? Quote(s) : std::string(s);
}

}  // namespace

bool IsKnownMetric(std::string_view name) {
  return std::find(kMetrics.begin(), kMetrics.end(), name) != kMetrics.end();
}

SchemaConfig SchemaConfig::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) Fail(ErrorCode::kSchemaViolation, "schema: expected object");
  SchemaConfig s;
  try {
    s.target = doc.value("target", "");
    s.id = doc.value("id", "");
    s.task = ParseTask(doc.value("task", "regression"));
    s.n_classes = doc.value("n_classes", 0);
    s.log_target = doc.value("log_target", false);
    s.metric = doc.value("metric", s.task == Task::kRegression   ? "rmse"
                                   : s.task == Task::kMulticlass ? "logloss"
                                                                 : "auc");
    if (doc.contains("missing_tokens")) {
      s.missing_tokens = doc.at("missing_tokens").get<std::vector<std::string>>();
    }
    if (doc.contains("kinds")) {
      for (const auto& [name, kind] : doc.at("kinds").items()) {
        const auto k = kind.get<std::string>();
        if (k == "numeric") {
          s.kinds[name] = ColumnKind::kNumeric;
        } else if (k == "categorical") {
          s.kinds[name] = ColumnKind::kCategorical;
        } else {
          Fail(ErrorCode::kSchemaViolation, "schema.kinds." + name + ": unknown kind '" + k + "'");
        }
      }
    }
    if (doc.contains("sentinels")) {
      for (const auto& r : doc.at("sentinels")) {
        s.sentinels.push_back({r.at("column").get<std::string>(), r.at("value").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchemaViolation, std::string("schema: ") + e.what());
  }
  s.Validate();
  return s;
}

nlohmann::json SchemaConfig::ToJson() const {
  nlohmann::json doc;
  doc["target"] = target;
  doc["id"] = id;
  doc["task"] = TaskName(task);
  doc["n_classes"] = n_classes;
  doc["log_target"] = log_target;
  doc["metric"] = metric;
  doc["missing_tokens"] = missing_tokens;
  doc["kinds"] = nlohmann::json::object();
  for (const auto& [name, kind] : kinds) doc["kinds"][name] = ColumnKindName(kind);
  doc["sentinels"] = nlohmann::json::array();
  for (const auto& r : sentinels) {
    doc["sentinels"].push_back({{"column", r.column}, {"value", r.value}});
  }
  return doc;
}

void SchemaConfig::Validate() const {
  if (!IsKnownMetric(metric)) {
    Fail(ErrorCode::kSchemaViolation, "schema.metric: unknown metric '" + metric + "'");
  }
  if (!target.empty() && target == id) {
    Fail(ErrorCode::kSchemaViolation, "schema: target and id name the same column");
  }
  if (task == Task::kMulticlass && metric != "logloss") {
    Fail(ErrorCode::kSchemaViolation, "schema.metric: multiclass tasks support logloss only");
  }
  if (log_target && task != Task::kRegression) {
    Fail(ErrorCode::kSchemaViolation, "schema.log_target: only valid for regression");
  }
}

TargetSpec SchemaConfig::MakeTargetSpec() const {
  TargetSpec spec;
  spec.task = task;
  spec.n_classes = n_classes;
  return spec;
}

std::vector<std::vector<std::string>> ParseCsvRecords(
    std::string_view text, std::vector<std::vector<bool>>* quoted) {
  std::vector<std::vector<std::string>> records;
  if (quoted) quoted->clear();
  if (text.empty()) return records;
  std::vector<std::string> record;
  std::vector<bool> record_quoted;
  std::string field;
  bool field_quoted = false;
  size_t i = 0;
  const size_t n = text.size();
  auto end_field = [&] {
    record.push_back(std::move(field));
    record_quoted.push_back(field_quoted);
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    if (quoted) quoted->push_back(std::move(record_quoted));
    record.clear();
    record_quoted.clear();
  };
  bool at_field_start = true;
  while (i < n) {
    const char c = text[i];
    if (at_field_start && c == '"') {
      field_quoted = true;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          closed = true;
          ++i;
          break;
        }
        field += text[i++];
      }
      if (!closed) {
        Fail(ErrorCode::kParseError,
             ParseErrorMessage(records.size(), record.size(), "unterminated quote"));
      }
      if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        Fail(ErrorCode::kParseError,
             ParseErrorMessage(records.size(), record.size(),
                               "unexpected character after closing quote"));
      }
      at_field_start = false;
      continue;
    }
    if (c == ',') {
      end_field();
      at_field_start = true;
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      at_field_start = true;
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
    } else if (c == '"') {
      Fail(ErrorCode::kParseError,
           ParseErrorMessage(records.size(), record.size(), "quote inside unquoted field"));
    } else {
      field += c;
      at_field_start = false;
      ++i;
    }
  }
  if (!at_field_start || !record.empty() || !field.empty() || field_quoted) end_record();
  return records;
}

Table ParseCsvTable(std::string_view text, const SchemaConfig& schema,
                    const Table* reference, bool require_target) {
  std::vector<std::vector<bool>> quoted;
  const auto records = ParseCsvRecords(text, &quoted);
  if (records.empty()) Fail(ErrorCode::kParseError, ParseErrorMessage(0, 0, "missing header"));
  const auto& header = records.front();
  const size_t ncol = header.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != ncol) {
      Fail(ErrorCode::kRaggedRow, "row " + std::to_string(r) + " has " +
                                      std::to_string(records[r].size()) +
                                      " fields, header has " + std::to_string(ncol));
    }
  }
  if (require_target && !schema.target.empty() &&
      std::find(header.begin(), header.end(), schema.target) == header.end()) {
    Fail(ErrorCode::kMissingTarget, "target column '" + schema.target + "' not in header");
  }
  for (const auto& rule : schema.sentinels) {
    if (std::find(header.begin(), header.end(), rule.column) == header.end()) {
      Fail(ErrorCode::kUnknownColumn, "sentinel column '" + rule.column + "'");
    }
  }

  const size_t nrow = records.size() - 1;
  std::vector<Column> columns;
  std::vector<ColumnRole> roles;
  for (size_t c = 0; c < ncol; ++c) {
    const std::string& name = header[c];
    auto missing_at = [&](size_t r) {
      return IsMissingToken(records[r + 1][c], quoted[r + 1][c], schema.missing_tokens);
    };
    const Column* ref = nullptr;
    if (reference) {
      if (auto idx = reference->index_of(name)) ref = &reference->column(*idx);
    }

    ColumnKind kind;
    if (auto it = schema.kinds.find(name); it != schema.kinds.end()) {
      kind = it->second;
    } else if (ref) {
      kind = ref->kind();
    } else {
      kind = ColumnKind::kNumeric;
      for (size_t r = 0; r < nrow; ++r) {
        if (!missing_at(r) && !ParseNumber(records[r + 1][c])) {
          kind = ColumnKind::kCategorical;
          break;
        }
      }
    }

    if (kind == ColumnKind::kNumeric) {
      std::vector<double> values(nrow, std::nan(""));
      for (size_t r = 0; r < nrow; ++r) {
        if (missing_at(r)) continue;
        auto v = ParseNumber(records[r + 1][c]);
        if (!v) {
          Fail(ErrorCode::kParseError,
               ParseErrorMessage(r + 1, c, "'" + records[r + 1][c] + "' is not numeric"));
        }
        values[r] = *v;
      }
      for (const auto& rule : schema.sentinels) {
        if (rule.column != name) continue;
        for (auto& v : values) {
          if (v == rule.value) v = std::nan("");
        }
      }
      columns.push_back(Column::Numeric(name, std::move(values)));
    } else {
      auto dict = ref && ref->is_categorical()
                      ? std::make_shared<Dictionary>(ref->dictionary())
                      : std::make_shared<Dictionary>();
      std::vector<int32_t> codes(nrow, kMissingCode);
      for (size_t r = 0; r < nrow; ++r) {
        if (!missing_at(r)) codes[r] = dict->Intern(records[r + 1][c]);
      }
      columns.push_back(Column::Categorical(name, std::move(dict), std::move(codes)));
    }

    ColumnRole role = ColumnRole::kFeature;
    if (!schema.target.empty() && name == schema.target) role = ColumnRole::kTarget;
    if (!schema.id.empty() && name == schema.id) role = ColumnRole::kId;
    roles.push_back(role);
  }
  return Table(std::move(columns), std::move(roles));
}

Table LoadCsv(const std::filesystem::path& path, const SchemaConfig& schema,
              const Table* reference, bool require_target) {
  return ParseCsvTable(ReadFile(path), schema, reference, require_target);
}

SchemaConfig InferSchemaFromText(std::string_view text) {
  SchemaConfig draft;
  const Table t = ParseCsvTable(text, draft, nullptr, false);
  for (const auto& c : t.columns()) draft.kinds[c.name()] = c.kind();
  return draft;
}

SchemaConfig InferSchema(const std::filesystem::path& path) {
  return InferSchemaFromText(ReadFile(path));
}

Direction ParseDirection(std::string_view name) {
  if (name == "higher" || name == "higher_better") return Direction::kHigherBetter;
  if (name == "lower" || name == "lower_better") return Direction::kLowerBetter;
  Fail(ErrorCode::kSchemaViolation, "unknown leaderboard direction '" + std::string(name) + "'");
}

const char* DirectionName(Direction d) {
  return d == Direction::kHigherBetter ? "higher_better" : "lower_better";
}

Leaderboard ParseLeaderboard(std::string_view text, Direction direction) {
  const auto records = ParseCsvRecords(text);
  if (records.empty()) Fail(ErrorCode::kMissingScoreColumn, "empty leaderboard file");
  const auto& header = records.front();
  auto it = std::find(header.begin(), header.end(), "score");
  if (it == header.end()) Fail(ErrorCode::kMissingScoreColumn, "no 'score' column");
  const size_t col = static_cast<size_t>(it - header.begin());
  Leaderboard lb;
  lb.direction = direction;
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      Fail(ErrorCode::kRaggedRow, "leaderboard row " + std::to_string(r));
    }
    auto v = ParseNumber(records[r][col]);
    if (!v) {
      Fail(ErrorCode::kParseError,
           ParseErrorMessage(r, col, "'" + records[r][col] + "' is not numeric"));
    }
    if (!std::isfinite(*v)) {
      Fail(ErrorCode::kNonFiniteScore, "leaderboard row " + std::to_string(r));
    }
    lb.scores.push_back(*v);
  }
  if (lb.scores.empty()) Fail(ErrorCode::kMissingScoreColumn, "leaderboard has no scores");
  return lb;
}

Leaderboard LoadLeaderboard(const std::filesystem::path& path, Direction direction) {
  return ParseLeaderboard(ReadFile(path), direction);
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::string PredictionHeader(size_t k) {
  if (k == 1) return "pred";
  std::string h;
  for (size_t j = 0; j < k; ++j) {
    if (j) h += ',';
    h += "class_" + std::to_string(j);
  }
  return h;
}

std::string CellText(const Column& c, size_t r) {
  if (c.is_missing(r)) return "";
  if (c.is_numeric()) return FormatDouble(c.value(r));
  const std::string_view s = c.category(r);
  if (s.empty() || s == "NA" || s == "NaN" || NeedsQuoting(s)) return Quote(s);
  return std::string(s);
}

}  // namespace

std::string FormatPredictionValues(const Matrix& preds) {
  std::string out = PredictionHeader(preds.cols()) + "\n";
  for (size_t r = 0; r < preds.rows(); ++r) {
    for (size_t j = 0; j < preds.cols(); ++j) {
      if (j) out += ',';
      out += FormatDouble(preds(r, j));
    }
    out += '\n';
  }
  return out;
}

std::string FormatPredictions(const Column& ids, const Matrix& preds) {
  if (ids.size() != preds.rows()) {
    Fail(ErrorCode::kLengthMismatch, std::to_string(ids.size()) + " ids vs " +
                                         std::to_string(preds.rows()) + " prediction rows");
  }
  std::string out = CsvField(ids.name()) + "," + PredictionHeader(preds.cols()) + "\n";
  for (size_t r = 0; r < preds.rows(); ++r) {
    out += CellText(ids, r);
    for (size_t j = 0; j < preds.cols(); ++j) {
      out += ',';
      out += FormatDouble(preds(r, j));
    }
    out += '\n';
  }
  return out;
}

void WritePredictions(const std::filesystem::path& path, const Column& ids,
                      const Matrix& preds) {
  WriteFile(path, FormatPredictions(ids, preds));
}

Matrix ReadPredictionValues(const std::filesystem::path& path, size_t expected_rows,
                            size_t expected_cols) {
  std::vector<std::vector<std::string>> records;
  try {
    records = ParseCsvRecords(ReadFile(path));
  } catch (const Error& e) {
    Fail(ErrorCode::kMalformedPrediction, path.string() + ": " + e.what());
  }
  if (records.empty()) Fail(ErrorCode::kMalformedPrediction, path.string() + ": empty");
  const auto expected_header = ParseCsvRecords(PredictionHeader(expected_cols)).front();
  if (records.front() != expected_header) {
    Fail(ErrorCode::kMalformedPrediction, path.string() + ": header must be '" +
                                              PredictionHeader(expected_cols) + "'");
  }
  if (records.size() - 1 != expected_rows) {
    Fail(ErrorCode::kMalformedPrediction,
         path.string() + ": expected " + std::to_string(expected_rows) + " rows, got " +
             std::to_string(records.size() - 1));
  }
  Matrix out(expected_rows, expected_cols);
  for (size_t r = 0; r < expected_rows; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != expected_cols) {
      Fail(ErrorCode::kMalformedPrediction, path.string() + ": ragged row " + std::to_string(r + 1));
    }
    for (size_t j = 0; j < expected_cols; ++j) {
      auto v = ParseNumber(rec[j]);
      if (!v || !std::isfinite(*v)) {
        Fail(ErrorCode::kMalformedPrediction,
             path.string() + ": non-finite value at row " + std::to_string(r + 1));
      }
      out(r, j) = *v;
    }
  }
  return out;
}

std::string FormatCsv(const Table& t) {
  std::string out;
  for (size_t c = 0; c < t.num_columns(); ++c) {
    if (c) out += ',';
    out += CsvField(t.column(c).name());
  }
  out += '\n';
  for (size_t r = 0; r < t.num_rows(); ++r) {
    for (size_t c = 0; c < t.num_columns(); ++c) {
      if (c) out += ',';
      out += CellText(t.column(c), r);
    }
    out += '\n';
  }
  return out;
}

void WriteCsv(const std::filesystem::path& path, const Table& t) {
  WriteFile(path, FormatCsv(t));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) Fail(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

}  // namespace tabfe
