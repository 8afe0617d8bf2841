#include "tabfe/hpo.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>

#include "tabfe/errors.h"

namespace tabfe {

bool ParameterSpec::active(const nlohmann::json& assignment) const {
  if (!condition) return true;
  auto it = assignment.find(condition->parameter);
  return it != assignment.end() && *it == condition->equals;
}

bool ParameterSpec::admits(const nlohmann::json& value) const {
  switch (dist) {
    case Distribution::kUniform:
    case Distribution::kLogUniform: {
      if (!value.is_number()) return false;
      const double v = value.get<double>();
      return v >= low && v <= high;
    }
    case Distribution::kUniformInt: {
      if (!value.is_number_integer()) return false;
      const double v = value.get<double>();
      return v >= low && v <= high;
    }
    case Distribution::kCategorical:
      return std::find(values.begin(), values.end(), value) != values.end();
  }
  return false;
}

nlohmann::json SearchSpace::Defaults() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : parameters) {
    if (p.default_value && p.active(out)) out[p.name] = *p.default_value;
  }
  return out;
}

nlohmann::json SearchSpace::Materialize(const nlohmann::json& assignment) const {
  nlohmann::json out = fixed;
  for (const auto& [k, v] : assignment.items()) out[k] = v;
  return out;
}

bool SearchSpace::Admits(const nlohmann::json& assignment) const {
  for (const auto& p : parameters) {
    const bool present = assignment.contains(p.name);
    if (p.active(assignment)) {
      if (!present || !p.admits(assignment.at(p.name))) return false;
    } else if (present) {
      return false;
    }
  }
  return true;
}

namespace {

std::string FormatNumber(double v) { return nlohmann::json(v).dump(); }

std::string SearchText(const ParameterSpec& p) {
  switch (p.dist) {
    case Distribution::kUniform:
      return "Uniform[" + FormatNumber(p.low) + ", " + FormatNumber(p.high) + "]";
    case Distribution::kLogUniform:
      return "LogUniform[" + FormatNumber(p.low) + ", " + FormatNumber(p.high) + "]";
    case Distribution::kUniformInt:
      return "UniformInt[" + std::to_string(static_cast<long long>(p.low)) + ", " +
             std::to_string(static_cast<long long>(p.high)) + "]";
    case Distribution::kCategorical: {
      std::string s = "{";
      for (size_t i = 0; i < p.values.size(); ++i) {
        if (i) s += ", ";
        s += p.values[i].is_string() ? p.values[i].get<std::string>() : p.values[i].dump();
      }
      return s + "}";
    }
  }
  return "";
}

}  // namespace

nlohmann::json SearchSpace::ToJson() const {
  auto params = nlohmann::json::array();
  for (const auto& p : parameters) {
    nlohmann::json j = {{"name", p.name}, {"search", SearchText(p)}};
    if (p.default_value) j["default"] = *p.default_value;
    if (p.condition) j["condition"] = {{"parameter", p.condition->parameter}, {"equals", p.condition->equals}};
    params.push_back(j);
  }
  return {{"parameters", params}, {"fixed", fixed}};
}

namespace {

[[noreturn]] void Malformed(const std::string& path, const std::string& what) {
  Fail(ErrorCode::kSchemaViolation, path + ": " + what);
}

std::string Trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::optional<double> ParseNumber(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> SplitList(std::string_view body) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      out.push_back(Trim(body.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

nlohmann::json ParseChoice(const std::string& s) {
  if (auto v = ParseNumber(s)) {
    if (s.find_first_of(".eE") == std::string::npos && std::abs(*v) < 9e15) {
      return static_cast<long long>(*v);
    }
    return *v;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

void ParseSearch(const std::string& text, ParameterSpec& p, const std::string& path) {
  const std::string s = Trim(text);
  if (s.size() >= 2 && s.front() == '{' && s.back() == '}') {
    p.dist = Distribution::kCategorical;
    const std::string body = Trim(std::string_view(s).substr(1, s.size() - 2));
    if (body.empty()) Fail(ErrorCode::kEmptyCategorical, path + ": no choices");
    for (const auto& item : SplitList(body)) {
      if (item.empty()) Malformed(path, "empty choice");
      nlohmann::json v = ParseChoice(item);
      if (std::find(p.values.begin(), p.values.end(), v) != p.values.end()) {
        Malformed(path, "duplicate choice " + item);
      }
      p.values.push_back(std::move(v));
    }
    return;
  }
  const size_t open = s.find('[');
  if (open == std::string::npos || s.back() != ']') Malformed(path, "cannot parse '" + s + "'");
  const std::string kind = Trim(std::string_view(s).substr(0, open));
  const auto bounds = SplitList(std::string_view(s).substr(open + 1, s.size() - open - 2));
  if (bounds.size() != 2) Malformed(path, "expected two bounds");
  const auto lo = ParseNumber(bounds[0]);
  const auto hi = ParseNumber(bounds[1]);
  if (!lo || !hi) Malformed(path, "bounds must be numbers");
  if (kind == "Uniform") {
    p.dist = Distribution::kUniform;
  } else if (kind == "LogUniform") {
    p.dist = Distribution::kLogUniform;
  } else if (kind == "UniformInt") {
    p.dist = Distribution::kUniformInt;
    if (*lo != std::floor(*lo) || *hi != std::floor(*hi)) {
      Fail(ErrorCode::kInvalidBounds, path + ": UniformInt bounds must be integers");
    }
  } else {
    Malformed(path, "unknown distribution '" + kind + "'");
  }
  if (!std::isfinite(*lo) || !std::isfinite(*hi) || !(*lo < *hi)) {
    Fail(ErrorCode::kInvalidBounds, path + ": need low < high");
  }
  if (p.dist == Distribution::kLogUniform && !(*lo > 0.0)) {
    Fail(ErrorCode::kInvalidBounds, path + ": LogUniform needs low > 0");
  }
  p.low = *lo;
  p.high = *hi;
}

}  // namespace

SearchSpace ParseSpace(const nlohmann::json& doc) {
  if (!doc.is_object()) Malformed("$", "expected an object");
  for (const auto& [key, v] : doc.items()) {
    if (key != "parameters" && key != "fixed") Malformed("$." + key, "unknown key");
  }
  SearchSpace space;
  if (doc.contains("fixed")) {
    if (!doc["fixed"].is_object()) Malformed("$.fixed", "expected an object");
    space.fixed = doc["fixed"];
  }
  if (!doc.contains("parameters")) return space;
  if (!doc["parameters"].is_array()) Malformed("$.parameters", "expected an array");
  const auto& params = doc["parameters"];
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string path = "$.parameters[" + std::to_string(i) + "]";
    const auto& j = params[i];
    if (!j.is_object()) Malformed(path, "expected an object");
    for (const auto& [key, v] : j.items()) {
      if (key != "name" && key != "search" && key != "default" && key != "condition") {
        Malformed(path + "." + key, "unknown key");
      }
    }
    ParameterSpec p;
    if (!j.contains("name") || !j["name"].is_string()) Malformed(path + ".name", "required string");
    p.name = j["name"].get<std::string>();
    for (const auto& other : space.parameters) {
      if (other.name == p.name) Malformed(path + ".name", "duplicate parameter " + p.name);
    }
    if (space.fixed.contains(p.name)) Malformed(path + ".name", p.name + " is also fixed");
    if (!j.contains("search") || !j["search"].is_string()) Malformed(path + ".search", "required string");
    ParseSearch(j["search"].get<std::string>(), p, path + ".search");
    if (j.contains("default")) {
      if (!p.admits(j["default"])) Malformed(path + ".default", "outside the search range");
      p.default_value = j["default"];
    }
    if (j.contains("condition")) {
      const auto& c = j["condition"];
      if (!c.is_object() || !c.contains("parameter") || !c["parameter"].is_string() ||
          !c.contains("equals")) {
        Malformed(path + ".condition", "expected {\"parameter\": ..., \"equals\": ...}");
      }
      const std::string parent = c["parameter"].get<std::string>();
      const bool earlier = std::any_of(space.parameters.begin(), space.parameters.end(),
                                       [&](const ParameterSpec& q) { return q.name == parent; });
      if (!earlier) Malformed(path + ".condition", "must refer to an earlier parameter");
      p.condition = Condition{parent, c["equals"]};
    }
    space.parameters.push_back(std::move(p));
  }
  return space;
}

SearchSpace ParseSpaceText(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    Malformed("$", std::string("invalid JSON: ") + e.what());
  }
  return ParseSpace(doc);
}

namespace {

nlohmann::json DrawRandom(const ParameterSpec& p, Rng& rng) {
  switch (p.dist) {
    case Distribution::kUniform:
      return std::clamp(rng.Uniform(p.low, p.high), p.low, p.high);
    case Distribution::kLogUniform:
      return std::clamp(std::exp(rng.Uniform(std::log(p.low), std::log(p.high))), p.low, p.high);
    case Distribution::kUniformInt: {
      const auto lo = static_cast<long long>(p.low);
      const auto span = static_cast<uint64_t>(static_cast<long long>(p.high) - lo + 1);
      return lo + static_cast<long long>(rng.UniformInt(span));
    }
    case Distribution::kCategorical:
      return p.values[rng.UniformInt(p.values.size())];
  }
  return nullptr;
}

}  // namespace

nlohmann::json SampleRandom(const SearchSpace& space, Rng& rng) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : space.parameters) {
    if (p.active(out)) out[p.name] = DrawRandom(p, rng);
  }
  return out;
}

nlohmann::json Trial::ToJson() const {
  nlohmann::json j = {{"index", index},
                      {"sampler", sampler},
                      {"status", status == TrialStatus::kComplete ? "complete" : "failed"},
                      {"params", params}};
  j["objective"] = status == TrialStatus::kComplete ? nlohmann::json(objective) : nlohmann::json(nullptr);
  if (!error.empty()) j["error"] = error;
  return j;
}

namespace {

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Mixture of Gaussian kernels truncated to [low, high], equal weights.
class Parzen {
 public:
  Parzen(const std::vector<double>& obs, double low, double high) : low_(low), high_(high) {
    const double range = high - low;
    double bw = range;
    const size_t n = obs.size();
    if (n >= 2) {
      double mean = 0.0;
      for (double x : obs) mean += x;
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double x : obs) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      bw = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    }
    // Shrinks with the sample count; without it the good set collapses early.
    bw = std::max({bw, range / (1.0 + static_cast<double>(n)), 1e-3 * range});
    for (double x : obs) Add(x, bw);
    Add(0.5 * (low + high), range);  // prior kernel
  }

  double Sample(Rng& rng) const {
    const size_t k = rng.UniformInt(mu_.size());
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double x = mu_[k] + sigma_[k] * rng.Normal();
      if (x >= low_ && x <= high_) return x;
    }
    return std::clamp(mu_[k], low_, high_);
  }

  double LogDensity(double x) const {
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(mu_.size());
    for (size_t k = 0; k < mu_.size(); ++k) {
      const double z = (x - mu_[k]) / sigma_[k];
      terms[k] = -0.5 * z * z - std::log(sigma_[k] * std::sqrt(2.0 * std::numbers::pi) * mass_[k]);
      mx = std::max(mx, terms[k]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - mx);
    return mx + std::log(sum / static_cast<double>(mu_.size()));
  }

 private:
  void Add(double mu, double sigma) {
    mu_.push_back(mu);
    sigma_.push_back(sigma);
    const double mass = NormalCdf((high_ - mu) / sigma) - NormalCdf((low_ - mu) / sigma);
    mass_.push_back(std::max(mass, 1e-300));
  }

  double low_;
  double high_;
  std::vector<double> mu_;
  std::vector<double> sigma_;
  std::vector<double> mass_;
};

double ToInternal(const ParameterSpec& p, double v) {
  return p.dist == Distribution::kLogUniform ? std::log(v) : v;
}

nlohmann::json FromInternal(const ParameterSpec& p, double t) {
  switch (p.dist) {
    case Distribution::kLogUniform:
      return std::clamp(std::exp(t), p.low, p.high);
    case Distribution::kUniformInt:
      return static_cast<long long>(std::clamp(std::round(t), p.low, p.high));
    default:
      return std::clamp(t, p.low, p.high);
  }
}

std::vector<nlohmann::json> Observed(const std::vector<const Trial*>& trials, const std::string& name) {
  std::vector<nlohmann::json> out;
  for (const Trial* t : trials) {
    auto it = t->params.find(name);
    if (it != t->params.end()) out.push_back(*it);
  }
  return out;
}

}  // namespace

nlohmann::json TpeSuggest(const SearchSpace& space, const std::vector<Trial>& history, Rng& rng,
                          const TpeConfig& cfg) {
  if (space.parameters.empty()) Fail(ErrorCode::kEmptySpace, "search space has no parameters");
  std::vector<const Trial*> complete;
  for (const auto& t : history) {
    if (t.status == TrialStatus::kComplete && std::isfinite(t.objective)) complete.push_back(&t);
  }
  if (static_cast<int>(complete.size()) < cfg.n_startup) return SampleRandom(space, rng);

  std::stable_sort(complete.begin(), complete.end(), [](const Trial* a, const Trial* b) {
    if (a->objective != b->objective) return a->objective < b->objective;
    return a->index < b->index;
  });
  const size_t n_good = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(cfg.gamma * static_cast<double>(complete.size()))));
  const std::vector<const Trial*> good(complete.begin(), complete.begin() + static_cast<std::ptrdiff_t>(n_good));
  const std::vector<const Trial*> bad(complete.begin() + static_cast<std::ptrdiff_t>(n_good), complete.end());

  nlohmann::json best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < cfg.n_candidates; ++c) {
    nlohmann::json cand = nlohmann::json::object();
    double score = 0.0;
    for (const auto& p : space.parameters) {
      if (!p.active(cand)) continue;
      const auto g_obs = Observed(good, p.name);
      const auto b_obs = Observed(bad, p.name);
      if (p.dist == Distribution::kCategorical) {
        const size_t k = p.values.size();
        std::vector<double> pg(k, 1.0), pb(k, 1.0);
        for (const auto& v : g_obs) {
          auto it = std::find(p.values.begin(), p.values.end(), v);
          if (it != p.values.end()) pg[static_cast<size_t>(it - p.values.begin())] += 1.0;
        }
        for (const auto& v : b_obs) {
          auto it = std::find(p.values.begin(), p.values.end(), v);
          if (it != p.values.end()) pb[static_cast<size_t>(it - p.values.begin())] += 1.0;
        }
        double sg = 0.0, sb = 0.0;
        for (size_t j = 0; j < k; ++j) {
          sg += pg[j];
          sb += pb[j];
        }
        double u = rng.Uniform01() * sg;
        size_t pick = k - 1;
        for (size_t j = 0; j < k; ++j) {
          if (u < pg[j]) {
            pick = j;
            break;
          }
          u -= pg[j];
        }
        cand[p.name] = p.values[pick];
        score += std::log(pg[pick] / sg) - std::log(pb[pick] / sb);
        continue;
      }
      const double lo = ToInternal(p, p.low);
      const double hi = ToInternal(p, p.high);
      std::vector<double> g, b;
      for (const auto& v : g_obs) g.push_back(ToInternal(p, v.get<double>()));
      for (const auto& v : b_obs) b.push_back(ToInternal(p, v.get<double>()));
      const Parzen lg(g, lo, hi);
      const Parzen lb(b, lo, hi);
      const nlohmann::json value = FromInternal(p, lg.Sample(rng));
      const double t = ToInternal(p, value.get<double>());
      cand[p.name] = value;
      score += lg.LogDensity(t) - lb.LogDensity(t);
    }
    if (score > best_score || best.is_null()) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

Regime ParseRegime(std::string_view name) {
  if (name == "default") return Regime::kDefault;
  if (name == "light") return Regime::kLight;
  if (name == "extensive") return Regime::kExtensive;
  Fail(ErrorCode::kInvalidConfig, "unknown regime '" + std::string(name) + "'");
}

const char* RegimeName(Regime r) {
  switch (r) {
    case Regime::kDefault:
      return "default";
    case Regime::kLight:
      return "light";
    case Regime::kExtensive:
      return "extensive";
  }
  return "?";
}

int RegimeBudget(Regime r) {
  switch (r) {
    case Regime::kDefault:
      return 1;
    case Regime::kLight:
      return kLightTrials;
    case Regime::kExtensive:
      return kExtensiveTrials;
  }
  return 0;
}

RegimeResult RunRegime(Regime regime, const SearchSpace& space, const Objective& objective,
                       uint64_t seed, const TpeConfig& cfg) {
  Rng rng(seed);
  RegimeResult result;
  const int budget = RegimeBudget(regime);
  for (int i = 0; i < budget; ++i) {
    Trial t;
    t.index = i;
    if (regime == Regime::kDefault) {
      t.params = space.Defaults();
      t.sampler = "default";
    } else if (regime == Regime::kLight || i < kExtensiveRandomTrials) {
      t.params = SampleRandom(space, rng);
      t.sampler = "random";
    } else {
      t.params = TpeSuggest(space, result.trials, rng, cfg);
      t.sampler = "tpe";
    }
    try {
      const std::optional<double> v = objective(t.params);
      if (v && std::isfinite(*v)) {
        t.objective = *v;
      } else {
        t.status = TrialStatus::kFailed;
        t.error = v ? "non-finite objective" : "objective reported failure";
      }
    } catch (const std::exception& e) {
      t.status = TrialStatus::kFailed;
      t.error = e.what();
    }
    result.trials.push_back(std::move(t));
  }
  for (const auto& t : result.trials) {
    if (t.status != TrialStatus::kComplete) continue;
    if (result.best_index < 0 || t.objective < result.best_objective) {
      result.best_index = t.index;
      result.best_objective = t.objective;
      result.best_params = t.params;
    }
  }
  if (result.best_index < 0) {
    std::string last = result.trials.empty() ? "" : result.trials.back().error;
    Fail(ErrorCode::kAllTrialsFailed, std::to_string(budget) + " trials failed; last: " + last);
  }
  return result;
}

std::string TrialsToJsonl(const std::vector<Trial>& trials) {
  std::string out;
  for (const auto& t : trials) out += t.ToJson().dump() + "\n";
  return out;
}

}  // namespace tabfe
