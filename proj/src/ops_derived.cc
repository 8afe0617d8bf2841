// Operators that derive new numeric features from existing columns.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ops_internal.h"
#include "tabfe/learners.h"
#include "tabfe/rng.h"

namespace tabfe::ops {
namespace {

// A pair operand is a column name or a numeric constant.
struct Operand {
  std::string column;
  double constant = 0.0;
  bool is_constant = false;

  std::string Label() const {
    if (!is_constant) return column;
    return nlohmann::json(constant).dump();
  }
};

class ArithCombine : public OperatorImpl<ArithCombine> {
 public:
  explicit ArithCombine(const nlohmann::json& j) {
    Params p(name(), j);
    const nlohmann::json pairs = p.Raw("pairs");
    if (!pairs.is_array() || pairs.empty()) p.Bad("pairs", "expected a non-empty array of pairs");
    for (const auto& pair : pairs) {
      if (!pair.is_array() || pair.size() != 2) p.Bad("pairs", "each pair has two operands");
      std::array<Operand, 2> ops;
      for (size_t k = 0; k < 2; ++k) {
        if (pair[k].is_string()) {
          ops[k].column = pair[k].get<std::string>();
        } else if (pair[k].is_number()) {
          ops[k].constant = pair[k].get<double>();
          ops[k].is_constant = true;
        } else {
          p.Bad("pairs", "operands are column names or numbers");
        }
      }
      if (ops[0].is_constant && ops[1].is_constant) p.Bad("pairs", "a pair needs a column");
      pairs_.push_back(ops);
    }
    ops_ = p.Strings("ops").value_or(std::vector<std::string>{"+", "-", "*", "/"});
    for (const auto& o : ops_) {
      if (o != "+" && o != "-" && o != "*" && o != "/") p.Bad("ops", "unknown operation '" + o + "'");
    }
    p.Done();
  }
  std::string name() const override { return "op_arith_combine"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    for (const auto& pair : pairs_) {
      for (const auto& o : pair) {
        if (!o.is_constant) RequireKind(scope.column(o.column), ColumnKind::kNumeric, name());
      }
    }
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<Column> added;
    const size_t n = t.num_rows();
    auto operand = [&](const Operand& o, std::vector<double>& out) {
      if (o.is_constant) {
        out.assign(n, o.constant);
        return;
      }
      const Column& c = t.column(o.column);
      RequireKind(c, ColumnKind::kNumeric, name());
      out = c.values();
    };
    for (const auto& pair : pairs_) {
      std::vector<double> a, b;
      operand(pair[0], a);
      operand(pair[1], b);
      for (const auto& o : ops_) {
        std::vector<double> v(n);
        for (size_t i = 0; i < n; ++i) {
          double r = kNaN;
          if (!std::isnan(a[i]) && !std::isnan(b[i])) {
            if (o == "+") r = a[i] + b[i];
            else if (o == "-") r = a[i] - b[i];
            else if (o == "*") r = a[i] * b[i];
            else if (std::abs(b[i]) >= 1e-12) r = a[i] / b[i];
          }
          v[i] = std::isfinite(r) ? r : kNaN;
        }
        added.push_back(Column::Numeric(
            prefix_ + pair[0].Label() + "_" + OpName(o) + "_" + pair[1].Label(), std::move(v)));
      }
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    auto pairs = nlohmann::json::array();
    for (const auto& pair : pairs_) pairs.push_back({pair[0].Label(), pair[1].Label()});
    return {{"pairs", pairs}, {"ops", ops_}};
  }

 private:
  static const char* OpName(const std::string& o) {
    if (o == "+") return "add";
    if (o == "-") return "sub";
    if (o == "*") return "mul";
    return "div";
  }

  std::vector<std::array<Operand, 2>> pairs_;
  std::vector<std::string> ops_;
  std::string prefix_;
};

class GroupbyAgg : public OperatorImpl<GroupbyAgg> {
 public:
  explicit GroupbyAgg(const nlohmann::json& j) {
    Params p(name(), j);
    group_ = p.String("group", "");
    value_ = p.String("value", "");
    if (group_.empty()) p.Bad("group", "required");
    if (value_.empty()) p.Bad("value", "required");
    stats_ = p.Strings("stats").value_or(std::vector<std::string>{"mean"});
    for (const auto& s : stats_) {
      if (s != "mean" && s != "std" && s != "count" && s != "percentile_rank") {
        p.Bad("stats", "unknown statistic '" + s + "'");
      }
    }
    p.Done();
  }
  std::string name() const override { return "op_groupby_agg"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    const Column& g = scope.column(group_);
    const Column& v = scope.column(value_);
    RequireKind(g, ColumnKind::kCategorical, name());
    RequireKind(v, ColumnKind::kNumeric, name());
    groups_.clear();
    for (size_t i = 0; i < g.size(); ++i) {
      if (g.is_missing(i)) continue;
      auto& grp = groups_[Text(g, i)];
      if (!v.is_missing(i)) grp.sorted.push_back(v.value(i));
    }
    for (auto& [key, grp] : groups_) {
      // Moments in row order, then the sorted copy for ranks.
      const size_t n = grp.sorted.size();
      if (n > 0) {
        double sum = 0.0;
        for (double x : grp.sorted) sum += x;
        grp.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double x : grp.sorted) ss += (x - grp.mean) * (x - grp.mean);
        grp.std = std::sqrt(ss / static_cast<double>(n));
      }
      std::sort(grp.sorted.begin(), grp.sorted.end());
    }
  }

  Table Transform(const Table& t, Partition) const override {
    const Column& g = t.column(group_);
    const Column& v = t.column(value_);
    RequireKind(g, ColumnKind::kCategorical, name());
    RequireKind(v, ColumnKind::kNumeric, name());
    std::vector<const Group*> by_code(static_cast<size_t>(g.dictionary().size()), nullptr);
    for (int32_t code = 0; code < g.dictionary().size(); ++code) {
      auto it = groups_.find(g.dictionary().at(code));
      if (it != groups_.end()) by_code[static_cast<size_t>(code)] = &it->second;
    }
    std::vector<Column> added;
    for (const auto& stat : stats_) {
      std::vector<double> out(t.num_rows(), kNaN);
      for (size_t i = 0; i < t.num_rows(); ++i) {
        if (g.is_missing(i)) continue;
        const Group* grp = by_code[static_cast<size_t>(g.code(i))];
        if (grp == nullptr) continue;
        const size_t n = grp->sorted.size();
        if (stat == "count") {
          out[i] = static_cast<double>(n);
        } else if (n == 0) {
          continue;
        } else if (stat == "mean") {
          out[i] = grp->mean;
        } else if (stat == "std") {
          out[i] = grp->std;
        } else if (!v.is_missing(i)) {
          out[i] = PercentileRank(grp->sorted, v.value(i));
        }
      }
      added.push_back(
          Column::Numeric(prefix_ + value_ + "_by_" + group_ + "_" + stat, std::move(out)));
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [key, grp] : groups_) {
      groups[key] = {{"count", grp.sorted.size()},
                     {"mean", NumberOrNull(grp.mean)},
                     {"std", NumberOrNull(grp.std)}};
    }
    return {{"group", group_}, {"value", value_}, {"stats", stats_}, {"groups", groups}};
  }

  // Within-group rank scaled to [0, 1]: (midrank - 1) / (n - 1) for values
  // present in the group; values between group members interpolate as
  // (count_below - 0.5) / (n - 1). Singleton groups give 0.5.
  static double PercentileRank(const std::vector<double>& sorted, double x) {
    const size_t n = sorted.size();
    if (n == 1) return 0.5;
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
    const auto hi = std::upper_bound(lo, sorted.end(), x);
    const double below = static_cast<double>(lo - sorted.begin());
    const double equal = static_cast<double>(hi - lo);
    const double denom = static_cast<double>(n - 1);
    if (equal > 0) return (below + (equal - 1.0) / 2.0) / denom;
    return std::clamp((below - 0.5) / denom, 0.0, 1.0);
  }

 private:
  struct Group {
    std::vector<double> sorted;
    double mean = kNaN;
    double std = kNaN;
  };

  std::string group_;
  std::string value_;
  std::vector<std::string> stats_;
  std::string prefix_;
  std::map<std::string, Group> groups_;
};

class RowStats : public OperatorImpl<RowStats> {
 public:
  explicit RowStats(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    stat_ = p.String("stat", "");
    if (stat_ != "nan_count" && stat_ != "zero_count" && stat_ != "value_count" && stat_ != "sum") {
      p.Bad("stat", "expected nan_count, zero_count, value_count or sum");
    }
    if (stat_ == "value_count") {
      if (!p.Has("value")) p.Bad("value", "required for value_count");
      value_ = p.Number("value", 0.0);
    }
    p.Done();
  }
  std::string name() const override { return "op_row_stats"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    const auto kind = stat_ == "nan_count" ? std::nullopt : std::optional(ColumnKind::kNumeric);
    names_ = ResolveColumns(scope, cols_, kind, name());
    output_ = prefix_ + "row_" + stat_;
    if (stat_ == "value_count") output_ = prefix_ + "row_count_" + nlohmann::json(value_).dump();
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<double> out(t.num_rows(), 0.0);
    for (const auto& n : names_) {
      const Column& c = t.column(n);
      if (stat_ != "nan_count") RequireKind(c, ColumnKind::kNumeric, name());
      for (size_t i = 0; i < c.size(); ++i) {
        const bool missing = c.is_missing(i);
        if (stat_ == "nan_count") {
          out[i] += missing ? 1.0 : 0.0;
        } else if (missing) {
          continue;
        } else if (stat_ == "zero_count") {
          out[i] += c.value(i) == 0.0 ? 1.0 : 0.0;
        } else if (stat_ == "value_count") {
          out[i] += c.value(i) == value_ ? 1.0 : 0.0;
        } else {
          out[i] += c.value(i);
        }
      }
    }
    return Append(t, {Column::Numeric(output_, std::move(out))});
  }

  nlohmann::json State() const override {
    return {{"columns", names_}, {"stat", stat_}, {"output", output_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::string stat_;
  double value_ = 0.0;
  std::string prefix_;
  std::vector<std::string> names_;
  std::string output_;
};

class LogicalAnd : public OperatorImpl<LogicalAnd> {
 public:
  explicit LogicalAnd(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.RequiredStrings("columns");
    if (cols_.size() < 2) p.Bad("columns", "needs at least 2 columns");
    p.Done();
  }
  std::string name() const override { return "op_logical_and"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    (void)ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    for (const auto& n : cols_) {
      const Column& c = scope.column(n);
      for (size_t i = 0; i < c.size(); ++i) {
        if (!c.is_missing(i) && c.value(i) != 0.0 && c.value(i) != 1.0) {
          Fail(ErrorCode::kNonBinary, n + " holds " + std::to_string(c.value(i)));
        }
      }
    }
    output_ = prefix_ + "and";
    for (const auto& n : cols_) output_ += "_" + n;
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<double> out(t.num_rows(), 1.0);
    for (const auto& n : cols_) {
      const Column& c = t.column(n);
      RequireKind(c, ColumnKind::kNumeric, name());
      for (size_t i = 0; i < c.size(); ++i) {
        const double v = c.value(i);
        // Values outside {0, 1} seen after fitting have no defined product.
        if (std::isnan(v) || (v != 0.0 && v != 1.0)) {
          out[i] = kNaN;
        } else if (!std::isnan(out[i])) {
          out[i] *= v;
        }
      }
    }
    return Append(t, {Column::Numeric(output_, std::move(out))});
  }

  nlohmann::json State() const override { return {{"columns", cols_}, {"output", output_}}; }

 private:
  std::vector<std::string> cols_;
  std::string prefix_;
  std::string output_;
};

Eigen::MatrixXd DenseRows(const Table& t, const std::vector<std::string>& names,
                          const std::string& op) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.num_rows()),
                    static_cast<Eigen::Index>(names.size()));
  for (size_t j = 0; j < names.size(); ++j) {
    const Column& c = t.column(names[j]);
    RequireKind(c, ColumnKind::kNumeric, op);
    for (size_t i = 0; i < c.size(); ++i) {
      if (c.is_missing(i)) Fail(ErrorCode::kMissingValues, op + ": column '" + names[j] + "'");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.value(i);
    }
  }
  return x;
}

class PcaFeatures : public OperatorImpl<PcaFeatures> {
 public:
  explicit PcaFeatures(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    n_components_ = p.Int("n_components", 0);
    if (n_components_ < 1) p.Bad("n_components", "expected a positive integer");
    p.Done();
  }
  std::string name() const override { return "op_pca_features"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    const Eigen::MatrixXd x = DenseRows(scope, names_, name());
    const auto n = x.rows();
    const auto d = x.cols();
    if (n_components_ > std::min<Eigen::Index>(n - 1, d)) {
      Fail(ErrorCode::kTooManyComponents, std::to_string(n_components_) + " components from " +
                                              std::to_string(n) + " rows x " +
                                              std::to_string(d) + " columns");
    }
    mean_ = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - mean_.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd values = eig.eigenvalues();
    const Eigen::MatrixXd vectors = eig.eigenvectors();
    const double total = std::max(values.sum(), 0.0);
    components_.resize(n_components_, d);
    explained_.clear();
    ratio_.clear();
    for (int k = 0; k < n_components_; ++k) {
      const Eigen::Index src = d - 1 - k;  // eigenvalues are ascending
      Eigen::VectorXd v = vectors.col(src);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
      components_.row(k) = v.transpose();
      const double lambda = std::max(values(src), 0.0);
      explained_.push_back(lambda);
      ratio_.push_back(total > 0 ? lambda / total : 0.0);
    }
  }

  Table Transform(const Table& t, Partition) const override {
    const Eigen::MatrixXd x = DenseRows(t, names_, name());
    const Eigen::MatrixXd proj = (x.rowwise() - mean_.transpose()) * components_.transpose();
    std::vector<Column> added;
    for (int k = 0; k < n_components_; ++k) {
      std::vector<double> v(t.num_rows());
      for (size_t i = 0; i < v.size(); ++i) v[i] = proj(static_cast<Eigen::Index>(i), k);
      added.push_back(Column::Numeric(prefix_ + "pca_" + std::to_string(k), std::move(v)));
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    auto comps = nlohmann::json::array();
    for (Eigen::Index k = 0; k < components_.rows(); ++k) {
      std::vector<double> row(components_.cols());
      for (Eigen::Index j = 0; j < components_.cols(); ++j) row[static_cast<size_t>(j)] = components_(k, j);
      comps.push_back(row);
    }
    return {{"columns", names_},
            {"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
            {"components", comps},
            {"explained_variance", explained_},
            {"explained_variance_ratio", ratio_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  int n_components_ = 0;
  std::string prefix_;
  std::vector<std::string> names_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  std::vector<double> explained_;
  std::vector<double> ratio_;
};

class KMeansFeatures : public OperatorImpl<KMeansFeatures> {
 public:
  explicit KMeansFeatures(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    k_ = p.Int("k", 0);
    if (k_ < 1) p.Bad("k", "expected a positive integer");
    emit_ = p.Strings("emit").value_or(std::vector<std::string>{"cluster_id", "distances"});
    for (const auto& e : emit_) {
      if (e != "cluster_id" && e != "distances") p.Bad("emit", "unknown output '" + e + "'");
    }
    max_iter_ = p.Int("max_iter", 300);
    tol_ = p.Number("tol", 1e-6);
    p.Done();
  }
  std::string name() const override { return "op_kmeans_features"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kNumeric, name());
    const Eigen::MatrixXd x = DenseRows(scope, names_, name());
    const auto n = x.rows();
    {
      std::set<std::vector<double>> distinct;
      for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<size_t>(x.cols()));
        for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<size_t>(j)] = x(i, j);
        distinct.insert(std::move(row));
      }
      if (static_cast<int>(distinct.size()) < k_) {
        Fail(ErrorCode::kKTooLarge, "k=" + std::to_string(k_) + " with " +
                                        std::to_string(distinct.size()) + " distinct rows");
      }
    }

    Rng rng(ctx.seed);
    centroids_.resize(k_, x.cols());
    centroids_.row(0) = x.row(static_cast<Eigen::Index>(rng.UniformInt(static_cast<uint64_t>(n))));
    Eigen::VectorXd nearest = (x.rowwise() - centroids_.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k_; ++c) {
      Eigen::Index far = 0;
      nearest.maxCoeff(&far);
      centroids_.row(c) = x.row(far);
      nearest = nearest.cwiseMin((x.rowwise() - centroids_.row(c)).rowwise().squaredNorm());
    }

    inertia_.clear();
    std::vector<int> label(static_cast<size_t>(n));
    std::vector<double> d2(static_cast<size_t>(n));
    for (iterations_ = 0; iterations_ < max_iter_; ++iterations_) {
      std::vector<int> size(static_cast<size_t>(k_), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k_; ++c) {
          const double d = (x.row(i) - centroids_.row(c)).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        label[static_cast<size_t>(i)] = best;
        d2[static_cast<size_t>(i)] = best_d;
        ++size[static_cast<size_t>(best)];
      }
      // An empty cluster takes the point farthest from its own centroid.
      for (int c = 0; c < k_; ++c) {
        if (size[static_cast<size_t>(c)] > 0) continue;
        size_t far = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < label.size(); ++i) {
          if (size[static_cast<size_t>(label[i])] > 1 && d2[i] > far_d) {
            far_d = d2[i];
            far = i;
          }
        }
        --size[static_cast<size_t>(label[far])];
        label[far] = c;
        d2[far] = 0.0;
        size[static_cast<size_t>(c)] = 1;
        centroids_.row(c) = x.row(static_cast<Eigen::Index>(far));
      }
      double inertia = 0.0;
      for (double d : d2) inertia += d;
      inertia_.push_back(inertia);

      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k_, x.cols());
      for (Eigen::Index i = 0; i < n; ++i) sums.row(label[static_cast<size_t>(i)]) += x.row(i);
      for (int c = 0; c < k_; ++c) centroids_.row(c) = sums.row(c) / size[static_cast<size_t>(c)];

      const size_t m = inertia_.size();
      if (inertia == 0.0) break;
      if (m >= 2 && inertia_[m - 2] - inertia <= tol_ * inertia_[m - 2]) break;
    }
  }

  Table Transform(const Table& t, Partition) const override {
    const Eigen::MatrixXd x = DenseRows(t, names_, name());
    const size_t n = t.num_rows();
    std::vector<std::vector<double>> dist(static_cast<size_t>(k_), std::vector<double>(n));
    std::vector<int32_t> id(n);
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k_; ++c) {
        const double d = (x.row(static_cast<Eigen::Index>(i)) - centroids_.row(c)).norm();
        dist[static_cast<size_t>(c)][i] = d;
        if (d < best) {
          best = d;
          id[i] = c;
        }
      }
    }
    std::vector<Column> added;
    for (const auto& e : emit_) {
      if (e == "cluster_id") {
        std::vector<std::string> labels;
        for (int c = 0; c < k_; ++c) labels.push_back(std::to_string(c));
        auto dict = std::make_shared<const Dictionary>(Dictionary(labels));
        added.push_back(Column::Categorical(prefix_ + "km_cluster", dict, id));
      } else {
        for (int c = 0; c < k_; ++c) {
          added.push_back(Column::Numeric(prefix_ + "km_dist_" + std::to_string(c),
                                          dist[static_cast<size_t>(c)]));
        }
      }
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    auto cents = nlohmann::json::array();
    for (Eigen::Index c = 0; c < centroids_.rows(); ++c) {
      std::vector<double> row(static_cast<size_t>(centroids_.cols()));
      for (Eigen::Index j = 0; j < centroids_.cols(); ++j) row[static_cast<size_t>(j)] = centroids_(c, j);
      cents.push_back(row);
    }
    return {{"columns", names_},
            {"k", k_},
            {"centroids", cents},
            {"inertia", inertia_},
            {"iterations", iterations_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  int k_ = 0;
  std::vector<std::string> emit_;
  int max_iter_ = 300;
  double tol_ = 1e-6;
  std::string prefix_;
  std::vector<std::string> names_;
  Eigen::MatrixXd centroids_;
  std::vector<double> inertia_;
  int iterations_ = 0;
};

class OofModelFeature : public OperatorImpl<OofModelFeature> {
 public:
  explicit OofModelFeature(const nlohmann::json& j) {
    Params p(name(), j);
    inputs_ = p.RequiredStrings("input_cols");
    output_col_ = p.String("output_col", "");
    if (output_col_.empty()) p.Bad("output_col", "required");
    const nlohmann::json learner = p.Raw("learner");
    cfg_.kind = LearnerKind::kGbdt;
    cfg_.params = {{"n_estimators", 100}, {"patience", 0}};
    if (!learner.is_null()) {
      if (!learner.is_object()) p.Bad("learner", "expected an object");
      if (learner.contains("kind")) {
        cfg_.kind = ParseLearnerKind(learner.at("kind").get<std::string>());
        if (cfg_.kind == LearnerKind::kExternal) p.Bad("learner", "external learners are not allowed");
        if (cfg_.kind == LearnerKind::kLinear) cfg_.params = nlohmann::json::object();
      }
      if (learner.contains("params")) cfg_.params.update(learner.at("params"));
      for (const auto& [key, v] : learner.items()) {
        if (key != "kind" && key != "params") p.Bad("learner", "unknown key '" + key + "'");
      }
    }
    ValidateLearnerParams(cfg_);
    p.Done();
  }
  std::string name() const override { return "op_oof_model_feature"; }
  bool fold_aware() const override { return true; }
  bool uses_target() const override { return true; }
  bool label_independent() const override { return true; }
  std::vector<std::string> label_columns(const Table&) const override { return {output_col_}; }

  void Fit(const FitContext& ctx) override {
    if (ctx.folds == nullptr || ctx.folds->n_folds < 2) {
      Fail(ErrorCode::kMissingFolds, name() + " needs at least 2 folds");
    }
    if (ctx.folds->num_rows() != ctx.train->num_rows()) {
      Fail(ErrorCode::kMissingFolds, name() + ": fold assignment does not cover the train rows");
    }
    prefix_ = ctx.prefix;
    fold_of_row_ = ctx.folds->fold_of_row;
    const Table& train = *ctx.train;
    const Matrix x_train = Inputs(train);
    const Column& out_train = train.column(output_col_);
    RequireKind(out_train, ColumnKind::kNumeric, name());

    // Extra rows that every fold model may use (test rows under TrainPlusTest).
    Matrix x_extra;
    std::vector<double> y_extra;
    if (ctx.scope == FitScope::kTrainPlusTest && ctx.test != nullptr &&
        ctx.test->has_column(output_col_)) {
      const Column& out_test = ctx.test->column(output_col_);
      RequireKind(out_test, ColumnKind::kNumeric, name());
      const Matrix x_test = Inputs(*ctx.test);
      std::vector<size_t> keep;
      for (size_t i = 0; i < out_test.size(); ++i) {
        if (!out_test.is_missing(i)) {
          keep.push_back(i);
          y_extra.push_back(out_test.value(i));
        }
      }
      x_extra = x_test.TakeRows(keep);
    }

    TargetSpec spec;
    spec.task = Task::kRegression;
    models_.clear();
    for (int f = 0; f < ctx.folds->n_folds; ++f) {
      std::vector<size_t> rows;
      std::vector<double> y;
      for (size_t i = 0; i < fold_of_row_.size(); ++i) {
        if (fold_of_row_[i] == f || out_train.is_missing(i)) continue;
        rows.push_back(i);
        y.push_back(out_train.value(i));
      }
      Matrix x = x_train.TakeRows(rows);
      if (!y_extra.empty()) {
        Matrix both(x.rows() + x_extra.rows(), x.cols());
        std::copy(x.data().begin(), x.data().end(), both.data().begin());
        std::copy(x_extra.data().begin(), x_extra.data().end(),
                  both.data().begin() + static_cast<std::ptrdiff_t>(x.data().size()));
        x = std::move(both);
        y.insert(y.end(), y_extra.begin(), y_extra.end());
      }
      if (y.empty()) Fail(ErrorCode::kMissingFolds, name() + ": fold " + std::to_string(f) + " has no training rows");
      LearnerConfig cfg = cfg_;
      cfg.seed = MixSeed(ctx.seed, static_cast<uint64_t>(f));
      models_.push_back(FitLearner(x, y, ValidationData{}, spec, cfg));
    }
  }

  Table Transform(const Table& t, Partition part) const override {
    if (part == Partition::kTrain && t.num_rows() != fold_of_row_.size()) {
      Fail(ErrorCode::kShapeMismatch, name() + ": train rows differ from fit time");
    }
    const Matrix x = Inputs(t);
    std::vector<double> out(t.num_rows(), 0.0);
    if (part == Partition::kTrain) {
      std::vector<Matrix> preds;
      for (const auto& m : models_) preds.push_back(Predict(m, x));
      for (size_t i = 0; i < out.size(); ++i) {
        out[i] = preds[static_cast<size_t>(fold_of_row_[i])](i, 0);
      }
    } else {
      for (const auto& m : models_) {
        const Matrix p = Predict(m, x);
        for (size_t i = 0; i < out.size(); ++i) out[i] += p(i, 0);
      }
      for (double& v : out) v /= static_cast<double>(models_.size());
    }
    return Append(t, {Column::Numeric(prefix_ + "oof_" + output_col_, std::move(out))});
  }

  nlohmann::json State() const override {
    auto models = nlohmann::json::array();
    for (const auto& m : models_) models.push_back(m.ToJson());
    return {{"input_cols", inputs_},
            {"output_col", output_col_},
            {"learner", {{"kind", LearnerKindName(cfg_.kind)}, {"params", cfg_.params}}},
            {"models", models}};
  }

 private:
  Matrix Inputs(const Table& t) const {
    Matrix x(t.num_rows(), inputs_.size());
    for (size_t j = 0; j < inputs_.size(); ++j) {
      const Column& c = t.column(inputs_[j]);
      RequireKind(c, ColumnKind::kNumeric, name());
      for (size_t i = 0; i < c.size(); ++i) x(i, j) = c.value(i);
    }
    return x;
  }

  std::vector<std::string> inputs_;
  std::string output_col_;
  LearnerConfig cfg_;
  std::string prefix_;
  std::vector<int> fold_of_row_;
  std::vector<FittedLearner> models_;
};

template <typename Op>
void Add(Registry& r, const char* name) {
  r[name] = [](const nlohmann::json& p) { return std::make_unique<Op>(p); };
}

}  // namespace

void RegisterDerivedOps(Registry& r) {
  Add<ArithCombine>(r, "op_arith_combine");
  Add<GroupbyAgg>(r, "op_groupby_agg");
  Add<RowStats>(r, "op_row_stats");
  Add<LogicalAnd>(r, "op_logical_and");
  Add<PcaFeatures>(r, "op_pca_features");
  Add<KMeansFeatures>(r, "op_kmeans_features");
  Add<OofModelFeature>(r, "op_oof_model_feature");
}

}  // namespace tabfe::ops
