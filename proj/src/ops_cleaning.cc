// Cleaning, scaling and column-selection operators.

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "ops_internal.h"

namespace tabfe::ops {
namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;  // population
  size_t n = 0;
};

Moments NonMissingMoments(const Column& c) {
  Moments m;
  double sum = 0.0;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c.is_missing(i)) continue;
    sum += c.value(i);
    ++m.n;
  }
  if (m.n == 0) return m;
  m.mean = sum / static_cast<double>(m.n);
  double ss = 0.0;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c.is_missing(i)) continue;
    const double d = c.value(i) - m.mean;
    ss += d * d;
  }
  m.std = std::sqrt(ss / static_cast<double>(m.n));
  return m;
}

Table MapNumeric(const Table& t, const std::string& name, const std::string& op,
                 const auto& fn) {
  const Column& c = t.column(name);
  RequireKind(c, ColumnKind::kNumeric, op);
  std::vector<double> v(c.size());
  for (size_t i = 0; i < c.size(); ++i) v[i] = fn(c.is_missing(i), c.value(i));
  return t.Replace(Column::Numeric(name, std::move(v)));
}

class ImputeMean : public OperatorImpl<ImputeMean> {
 public:
  explicit ImputeMean(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_impute_mean"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    means_.clear();
    for (const auto& n : names_) {
      const Moments m = NonMissingMoments(scope.column(n));
      if (m.n == 0) Fail(ErrorCode::kAllMissingColumn, n);
      means_.push_back(m.mean);
    }
  }

  Table Transform(const Table& t, Partition) const override {
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const double mean = means_[k];
      out = MapNumeric(out, names_[k], name(),
                       [&](bool missing, double v) { return missing ? mean : v; });
    }
    return out;
  }

  nlohmann::json State() const override { return {{"columns", names_}, {"means", means_}}; }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> names_;
  std::vector<double> means_;
};

class MissingAsCategory : public OperatorImpl<MissingAsCategory> {
 public:
  explicit MissingAsCategory(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_missing_as_category"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kCategorical, name());
    labels_.clear();
    for (const auto& n : names_) {
      const Dictionary& dict = scope.column(n).dictionary();
      std::string label(kMissingCategoryText);
      for (int suffix = 1; dict.Find(label); ++suffix) {
        label = std::string(kMissingCategoryText) + "_" + std::to_string(suffix);
      }
      labels_.push_back(label);
    }
  }

  Table Transform(const Table& t, Partition) const override {
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kCategorical, name());
      if (c.missing_count() == 0) continue;
      auto dict = std::make_shared<Dictionary>(c.dictionary());
      const int32_t code = dict->Intern(labels_[k]);
      std::vector<int32_t> codes = c.codes();
      for (auto& x : codes) {
        if (x == kMissingCode) x = code;
      }
      out = out.Replace(Column::Categorical(c.name(), std::move(dict), std::move(codes)));
    }
    return out;
  }

  nlohmann::json State() const override { return {{"columns", names_}, {"labels", labels_}}; }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> names_;
  std::vector<std::string> labels_;
};

class DropConstant : public OperatorImpl<DropConstant> {
 public:
  explicit DropConstant(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_drop_constant"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    dropped_.clear();
    for (const auto& n : ResolveColumns(scope, cols_, std::nullopt, name())) {
      const Column& c = scope.column(n);
      bool seen = false;
      bool varies = false;
      double first_value = 0.0;
      int32_t first_code = 0;
      for (size_t i = 0; i < c.size() && !varies; ++i) {
        if (c.is_missing(i)) continue;
        if (!seen) {
          seen = true;
          first_value = c.is_numeric() ? c.value(i) : 0.0;
          first_code = c.is_numeric() ? 0 : c.code(i);
        } else if (c.is_numeric() ? c.value(i) != first_value : c.code(i) != first_code) {
          varies = true;
        }
      }
      if (!varies) dropped_.push_back(n);
    }
  }

  Table Transform(const Table& t, Partition) const override { return t.Drop(dropped_); }

  nlohmann::json State() const override { return {{"dropped", dropped_}}; }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> dropped_;
};

Table ReplaceTargetValues(const Table& t, const auto& fn) {
  const Column* target = t.target();
  if (target == nullptr) return t;
  std::vector<double> v(target->size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = fn(target->value(i));
  return t.Replace(Column::Numeric(target->name(), std::move(v)));
}

class LogTarget : public OperatorImpl<LogTarget> {
 public:
  explicit LogTarget(const nlohmann::json& j) {
    Params p(name(), j);
    mode_ = p.String("mode", "auto");
    if (mode_ != "auto" && mode_ != "always") p.Bad("mode", "expected \"auto\" or \"always\"");
    p.Done();
  }
  std::string name() const override { return "op_log_target"; }
  bool uses_target() const override { return true; }

  void Fit(const FitContext& ctx) override {
    const bool regression = ctx.target->task == Task::kRegression;
    if (mode_ == "always" && !regression) {
      Fail(ErrorCode::kWrongTask, "log target needs a regression task");
    }
    active_ = regression && (mode_ == "always" || ctx.log_target_hint);
    if (!active_) return;
    for (double y : ctx.TrainTarget()) {
      if (!(y > -1.0)) Fail(ErrorCode::kNegativeBeyondDomain, "target value " + std::to_string(y));
    }
  }

  Table Transform(const Table& t, Partition) const override {
    if (!active_) return t;
    return ReplaceTargetValues(t, [](double y) {
      if (!(y > -1.0)) Fail(ErrorCode::kNegativeBeyondDomain, "target value " + std::to_string(y));
      return std::log1p(y);
    });
  }

  nlohmann::json State() const override { return {{"mode", mode_}, {"active", active_}}; }

  std::optional<TargetTransformStep> target_transform() const override {
    if (!active_) return std::nullopt;
    return TargetTransformStep{TargetTransformStep::Kind::kLog1p, 0.0, 1.0};
  }

 private:
  std::string mode_;
  bool active_ = false;
};

class Standardize : public OperatorImpl<Standardize> {
 public:
  explicit Standardize(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    target_ = p.Bool("target", false);
    if (target_ && cols_) p.Bad("columns", "not allowed together with target");
    p.Done();
  }
  std::string name() const override { return "op_standardize"; }
  bool uses_target() const override { return target_; }

  void Fit(const FitContext& ctx) override {
    names_.clear();
    stats_.clear();
    if (target_) {
      if (ctx.target->task != Task::kRegression) {
        Fail(ErrorCode::kWrongTask, "target standardization needs a regression task");
      }
      const std::vector<double> y = ctx.TrainTarget();
      stats_.push_back(Check(NonMissingMoments(Column::Numeric("y", y)), "target"));
      return;
    }
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    for (const auto& n : names_) stats_.push_back(Check(NonMissingMoments(scope.column(n)), n));
  }

  Table Transform(const Table& t, Partition) const override {
    if (target_) {
      const Moments m = stats_[0];
      return ReplaceTargetValues(t, [m](double y) { return (y - m.mean) / m.std; });
    }
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Moments m = stats_[k];
      out = MapNumeric(out, names_[k], name(), [m](bool missing, double v) {
        return missing ? kNaN : (v - m.mean) / m.std;
      });
    }
    return out;
  }

  nlohmann::json State() const override {
    std::vector<double> mean, sd;
    for (const auto& m : stats_) {
      mean.push_back(m.mean);
      sd.push_back(m.std);
    }
    return {{"target", target_}, {"columns", names_}, {"mean", mean}, {"std", sd}};
  }

  std::optional<TargetTransformStep> target_transform() const override {
    if (!target_) return std::nullopt;
    return TargetTransformStep{TargetTransformStep::Kind::kStandardize, stats_[0].mean,
                               stats_[0].std};
  }

 private:
  static Moments Check(const Moments& m, const std::string& what) {
    if (m.n == 0) Fail(ErrorCode::kAllMissingColumn, what);
    if (m.std < 1e-12) Fail(ErrorCode::kZeroVariance, what);
    return m;
  }

  std::optional<std::vector<std::string>> cols_;
  bool target_ = false;
  std::vector<std::string> names_;
  std::vector<Moments> stats_;
};

double InverseNormalCdf(double q) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

class QuantileNormalize : public OperatorImpl<QuantileNormalize> {
 public:
  static constexpr double kClip = 1e-7;

  explicit QuantileNormalize(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_quantile_normalize"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    grids_.clear();
    for (const auto& n : names_) {
      const Column& c = scope.column(n);
      std::vector<double> v;
      for (size_t i = 0; i < c.size(); ++i) {
        if (!c.is_missing(i)) v.push_back(c.value(i));
      }
      std::sort(v.begin(), v.end());
      Grid g;
      const double total = static_cast<double>(v.size());
      for (size_t i = 0; i < v.size();) {
        size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        g.x.push_back(v[i]);
        g.q.push_back((midrank - 0.5) / total);
        i = j;
      }
      if (g.x.size() < 2) Fail(ErrorCode::kDegenerateColumn, n);
      grids_.push_back(std::move(g));
    }
  }

  Table Transform(const Table& t, Partition) const override {
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Grid& g = grids_[k];
      out = MapNumeric(out, names_[k], name(), [&g](bool missing, double v) {
        return missing ? kNaN : InverseNormalCdf(g.Quantile(v));
      });
    }
    return out;
  }

  nlohmann::json State() const override {
    auto grids = nlohmann::json::array();
    for (const auto& g : grids_) grids.push_back({{"x", g.x}, {"q", g.q}});
    return {{"columns", names_}, {"grids", grids}};
  }

 private:
  struct Grid {
    std::vector<double> x;
    std::vector<double> q;

    double Quantile(double v) const {
      double q_v;
      if (v <= x.front()) {
        q_v = q.front();
      } else if (v >= x.back()) {
        q_v = q.back();
      } else {
        const size_t hi = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), v) - x.begin());
        const size_t lo = hi - 1;
        const double w = (v - x[lo]) / (x[hi] - x[lo]);
        q_v = q[lo] + w * (q[hi] - q[lo]);
      }
      return std::clamp(q_v, kClip, 1.0 - kClip);
    }
  };

  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> names_;
  std::vector<Grid> grids_;
};

// Pearson correlation over rows where both values are present; nullopt when
// either side is constant there.
std::optional<double> PairwiseCorrelation(const Column& a, const Column& b) {
  double sa = 0, sb = 0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.is_missing(i) || b.is_missing(i)) continue;
    sa += a.value(i);
    sb += b.value(i);
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double ma = sa / static_cast<double>(n);
  const double mb = sb / static_cast<double>(n);
  double saa = 0, sbb = 0, sab = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.is_missing(i) || b.is_missing(i)) continue;
    const double da = a.value(i) - ma;
    const double db = b.value(i) - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

class DropCorrelated : public OperatorImpl<DropCorrelated> {
 public:
  explicit DropCorrelated(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    threshold_ = p.Number("threshold", 0.99);
    if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) p.Bad("threshold", "expected a value in [0, 1]");
    p.Done();
  }
  std::string name() const override { return "op_drop_correlated"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    const auto names = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    std::vector<bool> drop(names.size(), false);
    dropped_.clear();
    for (size_t a = 0; a < names.size(); ++a) {
      if (drop[a]) continue;
      for (size_t b = a + 1; b < names.size(); ++b) {
        if (drop[b]) continue;
        const auto r = PairwiseCorrelation(scope.column(names[a]), scope.column(names[b]));
        if (r && std::abs(*r) > threshold_) drop[b] = true;
      }
    }
    for (size_t k = 0; k < names.size(); ++k) {
      if (drop[k]) dropped_.push_back(names[k]);
    }
  }

  Table Transform(const Table& t, Partition) const override { return t.Drop(dropped_); }

  nlohmann::json State() const override {
    return {{"threshold", threshold_}, {"dropped", dropped_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  double threshold_ = 0.99;
  std::vector<std::string> dropped_;
};

class DropLowTargetSupport : public OperatorImpl<DropLowTargetSupport> {
 public:
  explicit DropLowTargetSupport(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    min_pos_ = p.Int("min_pos", 4);
    p.Done();
  }
  std::string name() const override { return "op_drop_low_target_support"; }
  bool uses_target() const override { return true; }

  void Fit(const FitContext& ctx) override {
    if (ctx.target->task != Task::kBinary) {
      Fail(ErrorCode::kWrongTask, "target support filtering needs a binary task");
    }
    const Table& train = *ctx.train;
    const std::vector<double> y = ctx.TrainTarget();
    dropped_.clear();
    for (const auto& n : ResolveColumns(train.WithoutTarget(), cols_, std::nullopt, name())) {
      const Column& c = train.column(n);
      bool binary = true;
      if (c.is_numeric()) {
        for (size_t i = 0; i < c.size() && binary; ++i) {
          binary = c.is_missing(i) || c.value(i) == 0.0 || c.value(i) == 1.0;
        }
      }
      if (!binary) continue;
      int pos = 0;
      for (size_t i = 0; i < c.size(); ++i) {
        const bool active = !c.is_missing(i) && (!c.is_numeric() || c.value(i) != 0.0);
        if (active && y[i] == 1.0) ++pos;
      }
      if (pos < min_pos_) dropped_.push_back(n);
    }
  }

  Table Transform(const Table& t, Partition) const override { return t.Drop(dropped_); }

  nlohmann::json State() const override { return {{"min_pos", min_pos_}, {"dropped", dropped_}}; }

 private:
  std::optional<std::vector<std::string>> cols_;
  int min_pos_ = 4;
  std::vector<std::string> dropped_;
};

class FeatureSelectList : public OperatorImpl<FeatureSelectList> {
 public:
  explicit FeatureSelectList(const nlohmann::json& j) {
    Params p(name(), j);
    keep_ = p.RequiredStrings("keep");
    p.Done();
  }
  std::string name() const override { return "op_feature_select_list"; }

  void Fit(const FitContext& ctx) override { (void)Select(*ctx.train); }

  Table Transform(const Table& t, Partition) const override { return Select(t); }

  nlohmann::json State() const override { return {{"keep", keep_}}; }

 private:
  Table Select(const Table& t) const {
    std::unordered_set<std::string> keep;
    for (const auto& n : keep_) {
      const auto idx = t.index_of(n);
      if (!idx || t.role(*idx) != ColumnRole::kFeature) Fail(ErrorCode::kUnknownColumn, n);
      keep.insert(n);
    }
    std::vector<std::string> drop;
    for (const auto& n : t.feature_names()) {
      if (!keep.count(n)) drop.push_back(n);
    }
    return t.Drop(drop);
  }

  std::vector<std::string> keep_;
};

class UniqueValueSmooth : public OperatorImpl<UniqueValueSmooth> {
 public:
  explicit UniqueValueSmooth(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_unique_value_smooth"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    uniques_.clear();
    means_.clear();
    for (const auto& n : names_) {
      const Column& c = scope.column(n);
      const Moments m = NonMissingMoments(c);
      if (m.n == 0) Fail(ErrorCode::kAllMissingColumn, n);
      std::map<double, int> counts;
      for (size_t i = 0; i < c.size(); ++i) {
        if (!c.is_missing(i)) ++counts[c.value(i)];
      }
      std::vector<double> unique;
      for (const auto& [v, k] : counts) {
        if (k == 1) unique.push_back(v);
      }
      uniques_.push_back(std::move(unique));
      means_.push_back(m.mean);
    }
  }

  Table Transform(const Table& t, Partition) const override {
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const auto& u = uniques_[k];
      const double mean = means_[k];
      out = MapNumeric(out, names_[k], name(), [&](bool missing, double v) {
        if (missing) return kNaN;
        return std::binary_search(u.begin(), u.end(), v) ? mean : v;
      });
    }
    return out;
  }

  nlohmann::json State() const override {
    return {{"columns", names_}, {"means", means_}, {"unique_values", uniques_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> uniques_;
  std::vector<double> means_;
};

template <typename Op>
void Add(Registry& r) {
  const std::string name = Op(nlohmann::json::object()).name();
  r[name] = [](const nlohmann::json& p) { return std::make_unique<Op>(p); };
}

}  // namespace

void RegisterCleaningOps(Registry& r) {
  Add<ImputeMean>(r);
  Add<MissingAsCategory>(r);
  Add<DropConstant>(r);
  Add<LogTarget>(r);
  Add<Standardize>(r);
  Add<QuantileNormalize>(r);
  Add<DropCorrelated>(r);
  Add<DropLowTargetSupport>(r);
  Add<UniqueValueSmooth>(r);
  r["op_feature_select_list"] = [](const nlohmann::json& p) {
    return std::make_unique<FeatureSelectList>(p);
  };
}

}  // namespace tabfe::ops
