#ifndef TABFE_HPO_H_
#define TABFE_HPO_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/rng.h"

namespace tabfe {

enum class Distribution { kUniform, kLogUniform, kUniformInt, kCategorical };

struct Condition {
  std::string parameter;
  nlohmann::json equals;
};

struct ParameterSpec {
  std::string name;
  Distribution dist = Distribution::kUniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<nlohmann::json> values;  // categorical choices
  std::optional<nlohmann::json> default_value;
  std::optional<Condition> condition;

  // True when the guard (if any) is satisfied by `assignment`.
  bool active(const nlohmann::json& assignment) const;
  // Bounds and choices check.
  bool admits(const nlohmann::json& value) const;
};

// Document form:
//   {"parameters": [{"name": "learning_rate", "search": "LogUniform[1e-3, 0.7]",
//                    "default": 0.3},
//                   {"name": "max_depth", "search": "UniformInt[1, 11]"},
//                   {"name": "booster", "search": "{gbtree, dart}"},
//                   {"name": "rate_drop", "search": "Uniform[0, 0.5]",
//                    "condition": {"parameter": "booster", "equals": "dart"}}],
//    "fixed": {"patience": 200}}
// A guard may only refer to an earlier parameter.
struct SearchSpace {
  std::vector<ParameterSpec> parameters;
  nlohmann::json fixed = nlohmann::json::object();

  // Declared defaults of the active parameters.
  nlohmann::json Defaults() const;
  // fixed values overlaid with `assignment`.
  nlohmann::json Materialize(const nlohmann::json& assignment) const;
  // Every active parameter present and admissible, inactive ones absent.
  bool Admits(const nlohmann::json& assignment) const;
  nlohmann::json ToJson() const;
};

// Errors: InvalidBounds, EmptyCategorical, SchemaViolation for malformed
// documents.
SearchSpace ParseSpace(const nlohmann::json& doc);
SearchSpace ParseSpaceText(std::string_view text);

// Independent draws of the active parameters; LogUniform is
// exp(Uniform(ln a, ln b)).
nlohmann::json SampleRandom(const SearchSpace& space, Rng& rng);

enum class TrialStatus { kComplete, kFailed };

struct Trial {
  int index = 0;
  nlohmann::json params = nlohmann::json::object();
  double objective = 0.0;  // minimize-oriented; meaningless when failed
  TrialStatus status = TrialStatus::kComplete;
  std::string sampler;  // "default", "random" or "tpe"
  std::string error;

  nlohmann::json ToJson() const;
};

struct TpeConfig {
  double gamma = 0.25;
  int n_candidates = 24;
  int n_startup = 20;
};

// Tree-structured Parzen estimator proposal. Falls back to SampleRandom
// (same rng) while fewer than n_startup trials are complete.
// Errors: EmptySpace.
nlohmann::json TpeSuggest(const SearchSpace& space, const std::vector<Trial>& history,
                          Rng& rng, const TpeConfig& cfg = {});

enum class Regime { kDefault, kLight, kExtensive };

Regime ParseRegime(std::string_view name);
const char* RegimeName(Regime r);

inline constexpr int kLightTrials = 20;
inline constexpr int kExtensiveRandomTrials = 20;
inline constexpr int kExtensiveTrials = 100;

int RegimeBudget(Regime r);

// Returns the minimize-oriented objective, or nullopt for a failed trial.
// Exceptions thrown by the callback also mark the trial failed.
using Objective = std::function<std::optional<double>(const nlohmann::json& params)>;

struct RegimeResult {
  nlohmann::json best_params;
  int best_index = -1;
  double best_objective = 0.0;
  std::vector<Trial> trials;
};

// Default: one trial at the declared defaults. Light: 20 random trials.
// Extensive: 20 random then 80 TPE trials. Best is the lowest objective,
// earliest trial on ties. Errors: AllTrialsFailed.
RegimeResult RunRegime(Regime regime, const SearchSpace& space, const Objective& objective,
                       uint64_t seed, const TpeConfig& cfg = {});

// One JSON document per line.
std::string TrialsToJsonl(const std::vector<Trial>& trials);

}  // namespace tabfe

#endif  // TABFE_HPO_H_
