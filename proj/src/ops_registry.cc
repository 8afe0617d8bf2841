#include <algorithm>
#include <mutex>

#include "ops_internal.h"

namespace tabfe {

FitScope ParseFitScope(std::string_view name) {
  if (name == "train_only") return FitScope::kTrainOnly;
  if (name == "train_plus_test") return FitScope::kTrainPlusTest;
  Fail(ErrorCode::kSchemaViolation, "unknown scope '" + std::string(name) + "'");
}

const char* FitScopeName(FitScope scope) {
  return scope == FitScope::kTrainOnly ? "train_only" : "train_plus_test";
}

Table FitContext::ScopeFeatures() const {
  Table features = train->WithoutTarget();
  if (scope == FitScope::kTrainPlusTest && test != nullptr) {
    return ConcatRows(features, test->WithoutTarget());
  }
  return features;
}

std::vector<double> FitContext::TrainTarget() const { return TargetValues(*train); }

std::vector<std::string> Operator::label_columns(const Table& train) const {
  if (const Column* t = train.target()) return {t->name()};
  return {};
}

namespace {

std::mutex& RegistryMutex() {
  static std::mutex m;
  return m;
}

ops::Registry& GetRegistry() {
  static ops::Registry r = [] {
    ops::Registry init;
    ops::RegisterCleaningOps(init);
    ops::RegisterEncodingOps(init);
    ops::RegisterDerivedOps(init);
    return init;
  }();
  return r;
}

}  // namespace

std::unique_ptr<Operator> MakeOperator(std::string_view name, const nlohmann::json& params) {
  OperatorFactory factory;
  {
    std::lock_guard lock(RegistryMutex());
    auto& r = GetRegistry();
    auto it = r.find(name);
    if (it == r.end()) Fail(ErrorCode::kUnknownOperator, std::string(name));
    factory = it->second;
  }
  return factory(params);
}

bool IsKnownOperator(std::string_view name) {
  std::lock_guard lock(RegistryMutex());
  auto& r = GetRegistry();
  return r.find(name) != r.end();
}

std::vector<std::string> OperatorNames() {
  std::lock_guard lock(RegistryMutex());
  std::vector<std::string> out;
  for (const auto& [name, f] : GetRegistry()) out.push_back(name);
  return out;
}

void RegisterOperator(const std::string& name, OperatorFactory factory) {
  std::lock_guard lock(RegistryMutex());
  GetRegistry()[name] = std::move(factory);
}

namespace ops {

Params::Params(std::string op, const nlohmann::json& j) : op_(std::move(op)) {
  if (j.is_null()) {
    j_ = nlohmann::json::object();
  } else if (j.is_object()) {
    j_ = j;
  } else {
    Fail(ErrorCode::kSchemaViolation, op_ + ".params: expected an object");
  }
}

void Params::Bad(const char* key, const std::string& what) const {
  Fail(ErrorCode::kSchemaViolation, op_ + ".params." + key + ": " + what);
}

const nlohmann::json& Params::Get(const char* key) {
  used_.insert(key);
  return j_.at(key);
}

double Params::Number(const char* key, double fallback) {
  if (!Has(key)) return fallback;
  const auto& v = Get(key);
  if (!v.is_number()) Bad(key, "expected a number");
  return v.get<double>();
}

int Params::Int(const char* key, int fallback) {
  if (!Has(key)) return fallback;
  const auto& v = Get(key);
  if (!v.is_number_integer()) Bad(key, "expected an integer");
  return v.get<int>();
}

bool Params::Bool(const char* key, bool fallback) {
  if (!Has(key)) return fallback;
  const auto& v = Get(key);
  if (!v.is_boolean()) Bad(key, "expected true or false");
  return v.get<bool>();
}

std::string Params::String(const char* key, const std::string& fallback) {
  if (!Has(key)) return fallback;
  const auto& v = Get(key);
  if (!v.is_string()) Bad(key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::vector<std::string>> Params::Strings(const char* key) {
  if (!Has(key)) return std::nullopt;
  const auto& v = Get(key);
  if (!v.is_array()) Bad(key, "expected an array of column names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) Bad(key, "expected an array of column names");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<std::string> Params::RequiredStrings(const char* key) {
  auto v = Strings(key);
  if (!v) Bad(key, "required");
  return *v;
}

nlohmann::json Params::Raw(const char* key) {
  if (!Has(key)) return nullptr;
  return Get(key);
}

void Params::Done() {
  for (const auto& [key, value] : j_.items()) {
    if (!used_.count(key)) Bad(key.c_str(), "unknown parameter");
  }
}

void RequireKind(const Column& c, ColumnKind kind, const std::string& op) {
  if (c.kind() != kind) {
    Fail(ErrorCode::kKindMismatch, op + ": column '" + c.name() + "' is " +
                                       ColumnKindName(c.kind()) + ", expected " +
                                       ColumnKindName(kind));
  }
}

std::vector<std::string> ResolveColumns(const Table& t,
                                        const std::optional<std::vector<std::string>>& cols,
                                        std::optional<ColumnKind> kind, const std::string& op) {
  if (!cols) return kind ? t.feature_names(*kind) : t.feature_names();
  std::set<std::string> seen;
  for (const auto& name : *cols) {
    if (!seen.insert(name).second) {
      Fail(ErrorCode::kDuplicateSelection, op + ": column '" + name + "' listed twice");
    }
    const Column& c = t.column(name);
    if (kind) RequireKind(c, *kind, op);
  }
  return *cols;
}

Column CategoricalFromTexts(const std::string& name,
                            const std::vector<std::optional<std::string>>& texts) {
  return Column::Categorical(name, texts);
}

}  // namespace ops
}  // namespace tabfe
