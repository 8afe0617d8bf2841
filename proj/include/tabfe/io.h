#ifndef TABFE_IO_H_
#define TABFE_IO_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/matrix.h"
#include "tabfe/table.h"
#include "tabfe/target.h"

namespace tabfe {

struct SentinelRule {
  std::string column;
  double value = 0.0;
};

// Ingestion contract for one dataset. JSON form:
//   {"target": "y", "id": "id", "task": "binary", "n_classes": 0,
//    "log_target": false, "metric": "auc",
//    "missing_tokens": ["", "NA", "NaN"],
//    "kinds": {"col": "categorical"},
//    "sentinels": [{"column": "f", "value": -1}]}
struct SchemaConfig {
  std::map<std::string, ColumnKind> kinds;
  std::vector<std::string> missing_tokens{"", "NA", "NaN"};
  std::vector<SentinelRule> sentinels;
  std::string target;
  std::string id;
  Task task = Task::kRegression;
  int n_classes = 0;
  bool log_target = false;
  std::string metric = "rmse";

  static SchemaConfig FromJson(const nlohmann::json& doc);
  nlohmann::json ToJson() const;
  // Errors: SchemaViolation for an unknown metric.
  void Validate() const;
  TargetSpec MakeTargetSpec() const;
};

bool IsKnownMetric(std::string_view name);

// Parses RFC 4180 CSV text into rows of fields. `quoted` (optional) receives
// per-field quoting flags. Errors: ParseError(row, col).
std::vector<std::vector<std::string>> ParseCsvRecords(
    std::string_view text, std::vector<std::vector<bool>>* quoted = nullptr);

// Loads a CSV file. Kinds follow schema overrides, else inference (every
// non-missing cell parses as a float -> numeric). `reference`, when given,
// seeds categorical dictionaries so that codes agree with the reference
// table (used to load test files against train). When `require_target` is
// set the schema's target column must exist.
// Errors: ParseError, MissingTarget, RaggedRow, IoError.
Table LoadCsv(const std::filesystem::path& path, const SchemaConfig& schema,
              const Table* reference = nullptr, bool require_target = true);
Table ParseCsvTable(std::string_view text, const SchemaConfig& schema,
                    const Table* reference = nullptr, bool require_target = true);

// Draft schema with inferred kinds and no target.
SchemaConfig InferSchema(const std::filesystem::path& path);
SchemaConfig InferSchemaFromText(std::string_view text);

enum class Direction { kHigherBetter, kLowerBetter };
Direction ParseDirection(std::string_view name);
const char* DirectionName(Direction d);

struct Leaderboard {
  std::vector<double> scores;
  Direction direction = Direction::kHigherBetter;
};

// Errors: MissingScoreColumn, NonFiniteScore, IoError.
Leaderboard LoadLeaderboard(const std::filesystem::path& path, Direction direction);
Leaderboard ParseLeaderboard(std::string_view text, Direction direction);

// Shortest representation that reads back to the same double.
std::string FormatDouble(double v);

// "id,pred" for one output column, "id,class_0,...,class_{k-1}" otherwise.
// Errors: LengthMismatch, IoError.
std::string FormatPredictions(const Column& ids, const Matrix& preds);
void WritePredictions(const std::filesystem::path& path, const Column& ids,
                      const Matrix& preds);
// Header "pred" or "class_0,..." without an id column.
std::string FormatPredictionValues(const Matrix& preds);
// Reads a prediction file with header "pred" or "class_0..class_{k-1}".
// Errors: MalformedPrediction.
Matrix ReadPredictionValues(const std::filesystem::path& path, size_t expected_rows,
                            size_t expected_cols);

// Table -> CSV text. Category texts that would read back as missing tokens
// (or need escaping) are quoted; missing cells are written empty.
std::string FormatCsv(const Table& t);
void WriteCsv(const std::filesystem::path& path, const Table& t);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view content);

}  // namespace tabfe

#endif  // TABFE_IO_H_
