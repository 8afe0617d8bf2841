// Categorical encoders and occurrence features.

#include <charconv>
#include <cmath>
#include <unordered_map>

#include "ops_internal.h"
#include "tabfe/hash.h"

namespace tabfe::ops {
namespace {

// Distinct category texts of a column in first-appearance order.
std::vector<std::string> DistinctTexts(const Column& c) {
  std::vector<std::string> out;
  std::unordered_map<std::string, size_t> seen;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c.is_missing(i)) continue;
    std::string s = Text(c, i);
    if (seen.emplace(s, out.size()).second) out.push_back(std::move(s));
  }
  return out;
}

class FrequencyEncode : public OperatorImpl<FrequencyEncode> {
 public:
  explicit FrequencyEncode(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    normalized_ = p.Bool("normalized", false);
    p.Done();
  }
  std::string name() const override { return "op_frequency_encode"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    prefix_ = ctx.prefix;
    names_ = ResolveColumns(scope, cols_, ColumnKind::kCategorical, name());
    scope_rows_ = scope.num_rows();
    counts_.clear();
    for (const auto& n : names_) {
      const Column& c = scope.column(n);
      std::map<std::string, double> counts;
      for (size_t i = 0; i < c.size(); ++i) {
        if (!c.is_missing(i)) counts[Text(c, i)] += 1.0;
      }
      counts_.push_back(std::move(counts));
    }
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<Column> added;
    const double denom = normalized_ ? static_cast<double>(scope_rows_) : 1.0;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kCategorical, name());
      // Per-code lookup; unseen categories count 0.
      std::vector<double> by_code(static_cast<size_t>(c.dictionary().size()), 0.0);
      for (int32_t code = 0; code < c.dictionary().size(); ++code) {
        auto it = counts_[k].find(c.dictionary().at(code));
        if (it != counts_[k].end()) by_code[static_cast<size_t>(code)] = it->second / denom;
      }
      std::vector<double> v(c.size());
      for (size_t i = 0; i < c.size(); ++i) {
        v[i] = c.is_missing(i) ? kNaN : by_code[static_cast<size_t>(c.code(i))];
      }
      added.push_back(Column::Numeric(prefix_ + "freq_" + names_[k], std::move(v)));
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    return {{"columns", names_},
            {"normalized", normalized_},
            {"scope_rows", scope_rows_},
            {"counts", counts_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  bool normalized_ = false;
  std::string prefix_;
  std::vector<std::string> names_;
  size_t scope_rows_ = 0;
  std::vector<std::map<std::string, double>> counts_;
};

void RequireFolds(const FitContext& ctx, const std::string& op) {
  if (ctx.folds == nullptr || ctx.folds->n_folds < 2) {
    Fail(ErrorCode::kMissingFolds, op + " needs at least 2 folds");
  }
  if (ctx.folds->num_rows() != ctx.train->num_rows()) {
    Fail(ErrorCode::kMissingFolds, op + ": fold assignment does not cover the train rows");
  }
}

class TargetEncodeOof : public OperatorImpl<TargetEncodeOof> {
 public:
  explicit TargetEncodeOof(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    smoothing_ = p.Number("smoothing", 10.0);
    if (!(smoothing_ >= 0.0)) p.Bad("smoothing", "expected a non-negative number");
    p.Done();
  }
  std::string name() const override { return "op_target_encode_oof"; }
  bool fold_aware() const override { return true; }
  bool uses_target() const override { return true; }
  bool label_independent() const override { return true; }

  void Fit(const FitContext& ctx) override {
    RequireFolds(ctx, name());
    prefix_ = ctx.prefix;
    fold_of_row_ = ctx.folds->fold_of_row;
    n_folds_ = ctx.folds->n_folds;
    const Table& train = *ctx.train;
    names_ = ResolveColumns(train.WithoutTarget(), cols_, ColumnKind::kCategorical, name());
    const std::vector<double> y = ctx.TrainTarget();
    n_out_ = ctx.target->task == Task::kMulticlass ? ctx.target->n_classes : 1;
    const bool multiclass = ctx.target->task == Task::kMulticlass;
    auto response = [&](size_t row, int j) {
      return multiclass ? (static_cast<int>(y[row]) == j ? 1.0 : 0.0) : y[row];
    };

    encoders_.clear();
    for (const auto& n : names_) {
      const Column& c = train.column(n);
      ColumnEncoder enc;
      // fold == n_folds_ builds the all-train encoder used for test rows.
      for (int fold = 0; fold <= n_folds_; ++fold) {
        Stats totals(n_out_, 0.0);
        double count = 0.0;
        std::map<std::string, std::pair<Stats, double>> by_cat;
        for (size_t i = 0; i < c.size(); ++i) {
          if (fold_of_row_[i] == fold) continue;
          count += 1.0;
          for (int j = 0; j < n_out_; ++j) totals[static_cast<size_t>(j)] += response(i, j);
          if (c.is_missing(i)) continue;
          auto& entry = by_cat[Text(c, i)];
          if (entry.first.empty()) entry.first.assign(static_cast<size_t>(n_out_), 0.0);
          for (int j = 0; j < n_out_; ++j) entry.first[static_cast<size_t>(j)] += response(i, j);
          entry.second += 1.0;
        }
        FoldMap fm;
        fm.prior.assign(static_cast<size_t>(n_out_), 0.0);
        for (int j = 0; j < n_out_; ++j) {
          fm.prior[static_cast<size_t>(j)] = count > 0 ? totals[static_cast<size_t>(j)] / count : 0.0;
        }
        for (const auto& [text, sc] : by_cat) {
          Stats enc_v(static_cast<size_t>(n_out_));
          for (int j = 0; j < n_out_; ++j) {
            const auto jj = static_cast<size_t>(j);
            enc_v[jj] = (sc.first[jj] + smoothing_ * fm.prior[jj]) / (sc.second + smoothing_);
          }
          fm.encoded.emplace(text, std::move(enc_v));
        }
        enc.folds.push_back(std::move(fm));
      }
      encoders_.push_back(std::move(enc));
    }
  }

  Table Transform(const Table& t, Partition part) const override {
    if (part == Partition::kTrain && t.num_rows() != fold_of_row_.size()) {
      Fail(ErrorCode::kShapeMismatch, name() + ": train rows differ from fit time");
    }
    std::vector<Column> added;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kCategorical, name());
      std::vector<std::vector<double>> out(static_cast<size_t>(n_out_),
                                           std::vector<double>(c.size()));
      for (size_t i = 0; i < c.size(); ++i) {
        const int fold = part == Partition::kTrain ? fold_of_row_[i] : n_folds_;
        const FoldMap& fm = encoders_[k].folds[static_cast<size_t>(fold)];
        const Stats* v = &fm.prior;
        if (!c.is_missing(i)) {
          auto it = fm.encoded.find(Text(c, i));
          if (it != fm.encoded.end()) v = &it->second;
        }
        for (int j = 0; j < n_out_; ++j) {
          out[static_cast<size_t>(j)][i] = (*v)[static_cast<size_t>(j)];
        }
      }
      for (int j = 0; j < n_out_; ++j) {
        std::string col = prefix_ + "te_" + names_[k];
        if (n_out_ > 1) col += "_" + std::to_string(j);
        added.push_back(Column::Numeric(col, std::move(out[static_cast<size_t>(j)])));
      }
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    auto cols = nlohmann::json::array();
    for (size_t k = 0; k < names_.size(); ++k) {
      auto folds = nlohmann::json::array();
      for (const auto& fm : encoders_[k].folds) {
        folds.push_back({{"prior", fm.prior}, {"encoded", fm.encoded}});
      }
      cols.push_back({{"column", names_[k]}, {"folds", folds}});
    }
    return {{"smoothing", smoothing_}, {"n_folds", n_folds_}, {"encoders", cols}};
  }

 private:
  using Stats = std::vector<double>;
  struct FoldMap {
    Stats prior;
    std::map<std::string, Stats> encoded;
  };
  struct ColumnEncoder {
    std::vector<FoldMap> folds;  // n_folds out-of-fold maps, then the full map
  };

  std::optional<std::vector<std::string>> cols_;
  double smoothing_ = 10.0;
  std::string prefix_;
  std::vector<std::string> names_;
  std::vector<int> fold_of_row_;
  int n_folds_ = 0;
  int n_out_ = 1;
  std::vector<ColumnEncoder> encoders_;
};

class OneHot : public OperatorImpl<OneHot> {
 public:
  explicit OneHot(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    max_cardinality_ = p.Int("max_cardinality", 1000);
    drop_source_ = p.Bool("drop_source", true);
    p.Done();
  }
  std::string name() const override { return "op_one_hot"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    prefix_ = ctx.prefix;
    names_ = ResolveColumns(scope, cols_, ColumnKind::kCategorical, name());
    categories_.clear();
    for (const auto& n : names_) {
      auto cats = DistinctTexts(scope.column(n));
      if (static_cast<int>(cats.size()) > max_cardinality_) {
        Fail(ErrorCode::kCardinalityExceeded, n + " has " + std::to_string(cats.size()) +
                                                  " categories, limit " +
                                                  std::to_string(max_cardinality_));
      }
      categories_.push_back(std::move(cats));
    }
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<Column> added;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kCategorical, name());
      std::vector<int> slot(static_cast<size_t>(c.dictionary().size()), -1);
      for (size_t s = 0; s < categories_[k].size(); ++s) {
        if (auto code = c.dictionary().Find(categories_[k][s])) slot[static_cast<size_t>(*code)] = static_cast<int>(s);
      }
      std::vector<std::vector<double>> cols(categories_[k].size(), std::vector<double>(c.size(), 0.0));
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_missing(i)) continue;
        const int s = slot[static_cast<size_t>(c.code(i))];
        if (s >= 0) cols[static_cast<size_t>(s)][i] = 1.0;
      }
      for (size_t s = 0; s < cols.size(); ++s) {
        added.push_back(Column::Numeric(prefix_ + "oh_" + names_[k] + "_" + std::to_string(s),
                                        std::move(cols[s])));
      }
    }
    Table out = Append(t, std::move(added));
    return drop_source_ ? out.Drop(names_) : out;
  }

  nlohmann::json State() const override {
    return {{"columns", names_}, {"categories", categories_}, {"drop_source", drop_source_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  int max_cardinality_ = 1000;
  bool drop_source_ = true;
  std::string prefix_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> categories_;
};

class OrdinalEncode : public OperatorImpl<OrdinalEncode> {
 public:
  explicit OrdinalEncode(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_ordinal_encode"; }

  void Fit(const FitContext& ctx) override {
    const Table scope = ctx.ScopeFeatures();
    names_ = ResolveColumns(scope, cols_, ColumnKind::kCategorical, name());
    categories_.clear();
    for (const auto& n : names_) {
      auto cats = DistinctTexts(scope.column(n));
      if (cats.empty()) Fail(ErrorCode::kEmptyDictionary, n);
      categories_.push_back(std::move(cats));
    }
  }

  Table Transform(const Table& t, Partition) const override {
    Table out = t;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kCategorical, name());
      std::vector<double> by_code(static_cast<size_t>(c.dictionary().size()), -1.0);
      for (size_t s = 0; s < categories_[k].size(); ++s) {
        if (auto code = c.dictionary().Find(categories_[k][s])) {
          by_code[static_cast<size_t>(*code)] = static_cast<double>(s);
        }
      }
      std::vector<double> v(c.size());
      for (size_t i = 0; i < c.size(); ++i) {
        v[i] = c.is_missing(i) ? kNaN : by_code[static_cast<size_t>(c.code(i))];
      }
      out = out.Replace(Column::Numeric(names_[k], std::move(v)));
    }
    return out;
  }

  nlohmann::json State() const override {
    return {{"columns", names_}, {"categories", categories_}};
  }

 private:
  std::optional<std::vector<std::string>> cols_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> categories_;
};

class CatInteraction : public OperatorImpl<CatInteraction> {
 public:
  static constexpr char kSeparator = '\x1f';

  explicit CatInteraction(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns").value_or(std::vector<std::string>{});
    hashed_ = p.Bool("hashed", false);
    const double buckets = p.Number("n_buckets", 1 << 20);
    if (!(buckets >= 1.0) || buckets != std::floor(buckets)) {
      p.Bad("n_buckets", "expected a positive integer");
    }
    n_buckets_ = static_cast<uint64_t>(buckets);
    p.Done();
    if (cols_.size() < 2) {
      Fail(ErrorCode::kOrderTooSmall, "interaction needs at least 2 columns, got " +
                                          std::to_string(cols_.size()));
    }
  }
  std::string name() const override { return "op_cat_interaction"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    (void)ResolveColumns(ctx.ScopeFeatures(), cols_, ColumnKind::kCategorical, name());
    output_ = prefix_ + "inter";
    for (const auto& c : cols_) output_ += "_" + c;
  }

  Table Transform(const Table& t, Partition) const override {
    std::vector<const Column*> src;
    for (const auto& n : cols_) {
      src.push_back(&t.column(n));
      RequireKind(*src.back(), ColumnKind::kCategorical, name());
    }
    std::vector<std::optional<std::string>> texts(t.num_rows());
    for (size_t i = 0; i < t.num_rows(); ++i) {
      std::string joined;
      bool missing = false;
      for (size_t k = 0; k < src.size() && !missing; ++k) {
        if (src[k]->is_missing(i)) {
          missing = true;
          break;
        }
        if (k) joined += kSeparator;
        joined += src[k]->category(i);
      }
      if (missing) continue;
      texts[i] = hashed_ ? std::to_string(Fnv1a64(joined) % n_buckets_) : std::move(joined);
    }
    return Append(t, {Column::Categorical(output_, texts)});
  }

  nlohmann::json State() const override {
    return {{"columns", cols_}, {"hashed", hashed_}, {"n_buckets", n_buckets_}, {"output", output_}};
  }

 private:
  std::vector<std::string> cols_;
  bool hashed_ = false;
  uint64_t n_buckets_ = 1 << 20;
  std::string prefix_;
  std::string output_;
};

class NumToCat : public OperatorImpl<NumToCat> {
 public:
  explicit NumToCat(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    decimals_ = p.Int("decimals", 0);
    if (decimals_ < 0 || decimals_ > 12) p.Bad("decimals", "expected 0..12");
    p.Done();
  }
  std::string name() const override { return "op_num_to_cat"; }

  void Fit(const FitContext& ctx) override {
    prefix_ = ctx.prefix;
    names_ = ResolveColumns(ctx.ScopeFeatures(), cols_, ColumnKind::kNumeric, name());
  }

  Table Transform(const Table& t, Partition) const override {
    const double scale = std::pow(10.0, decimals_);
    std::vector<Column> added;
    for (const auto& n : names_) {
      const Column& c = t.column(n);
      RequireKind(c, ColumnKind::kNumeric, name());
      std::vector<std::optional<std::string>> texts(c.size());
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_missing(i)) continue;
        double r = std::round(c.value(i) * scale) / scale;
        if (r == 0.0) r = 0.0;  // folds -0 into 0
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), r, std::chars_format::fixed, decimals_);
        texts[i] = std::string(buf, res.ptr);
      }
      added.push_back(Column::Categorical(prefix_ + n + "_r" + std::to_string(decimals_), texts));
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override { return {{"columns", names_}, {"decimals", decimals_}}; }

 private:
  std::optional<std::vector<std::string>> cols_;
  int decimals_ = 0;
  std::string prefix_;
  std::vector<std::string> names_;
};

class ValueOccurrence : public OperatorImpl<ValueOccurrence> {
 public:
  explicit ValueOccurrence(const nlohmann::json& j) {
    Params p(name(), j);
    cols_ = p.Strings("columns");
    p.Done();
  }
  std::string name() const override { return "op_value_occurrence"; }
  bool uses_target() const override { return true; }
  bool label_independent() const override { return true; }

  void Fit(const FitContext& ctx) override {
    if (ctx.target->task != Task::kBinary) {
      Fail(ErrorCode::kWrongTask, "value occurrence needs a binary task");
    }
    prefix_ = ctx.prefix;
    with_test_ = ctx.scope == FitScope::kTrainPlusTest && ctx.test != nullptr;
    const Table& train = *ctx.train;
    names_ = ResolveColumns(train.WithoutTarget(), cols_, ColumnKind::kNumeric, name());
    const std::vector<double> y = ctx.TrainTarget();
    counts_.clear();
    train_categories_.clear();
    for (const auto& n : names_) {
      const Column& c = train.column(n);
      std::map<double, Counts> counts;
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_missing(i)) continue;
        auto& e = counts[c.value(i)];
        (y[i] == 1.0 ? e.pos : e.neg) += 1;
      }
      if (with_test_) {
        const Column& tc = ctx.test->column(n);
        RequireKind(tc, ColumnKind::kNumeric, name());
        for (size_t i = 0; i < tc.size(); ++i) {
          if (!tc.is_missing(i)) counts[tc.value(i)].test += 1;
        }
      }
      // Each train row is categorized from the other rows' labels: its own
      // contribution is removed before classifying.
      std::vector<int32_t> cats(c.size(), kMissingCode);
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_missing(i)) continue;
        Counts others = counts.at(c.value(i));
        (y[i] == 1.0 ? others.pos : others.neg) -= 1;
        cats[i] = Classify(others);
      }
      counts_.push_back(std::move(counts));
      train_categories_.push_back(std::move(cats));
    }
  }

  Table Transform(const Table& t, Partition part) const override {
    if (part == Partition::kTrain && !train_categories_.empty() &&
        t.num_rows() != train_categories_[0].size()) {
      Fail(ErrorCode::kShapeMismatch, name() + ": train rows differ from fit time");
    }
    auto dict = std::make_shared<Dictionary>(Dictionary(CategoryNames()));
    std::vector<Column> added;
    for (size_t k = 0; k < names_.size(); ++k) {
      const Column& c = t.column(names_[k]);
      RequireKind(c, ColumnKind::kNumeric, name());
      std::vector<int32_t> codes(c.size(), kMissingCode);
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_missing(i)) continue;
        if (part == Partition::kTrain) {
          codes[i] = train_categories_[k][i];
          continue;
        }
        Counts others;
        auto it = counts_[k].find(c.value(i));
        if (it != counts_[k].end()) others = it->second;
        if (with_test_ && others.test > 0) others.test -= 1;  // the row itself
        codes[i] = Classify(others);
      }
      added.push_back(Column::Categorical(prefix_ + "occ_" + names_[k], dict, std::move(codes)));
    }
    return Append(t, std::move(added));
  }

  nlohmann::json State() const override {
    auto cols = nlohmann::json::array();
    for (size_t k = 0; k < names_.size(); ++k) {
      auto values = nlohmann::json::array();
      for (const auto& [v, e] : counts_[k]) values.push_back({v, e.pos, e.neg, e.test});
      cols.push_back({{"column", names_[k]}, {"value_pos_neg_test", values}});
    }
    return {{"with_test", with_test_}, {"categories", CategoryNames()}, {"columns", cols}};
  }

 private:
  struct Counts {
    int64_t pos = 0;
    int64_t neg = 0;
    int64_t test = 0;
  };

  std::vector<std::string> CategoryNames() const {
    if (with_test_) {
      return {"unique_in_train_test", "unique_in_train", "repeats_only_with_pos",
              "repeats_only_with_neg", "repeats_mixed"};
    }
    return {"unique_in_scope", "repeats_only_with_pos", "repeats_only_with_neg", "repeats_mixed"};
  }

  // Code into CategoryNames(). A value seen again only in test rows gets the
  // extra TrainPlusTest category.
  int32_t Classify(const Counts& others) const {
    const int32_t base = with_test_ ? 1 : 0;
    if (others.pos > 0 && others.neg > 0) return base + 3;
    if (others.pos > 0) return base + 1;
    if (others.neg > 0) return base + 2;
    return with_test_ && others.test > 0 ? 1 : 0;
  }

  std::optional<std::vector<std::string>> cols_;
  std::string prefix_;
  bool with_test_ = false;
  std::vector<std::string> names_;
  std::vector<std::map<double, Counts>> counts_;
  std::vector<std::vector<int32_t>> train_categories_;
};

template <typename Op>
void Add(Registry& r, const char* name) {
  r[name] = [](const nlohmann::json& p) { return std::make_unique<Op>(p); };
}

}  // namespace

void RegisterEncodingOps(Registry& r) {
  Add<FrequencyEncode>(r, "op_frequency_encode");
  Add<TargetEncodeOof>(r, "op_target_encode_oof");
  Add<OneHot>(r, "op_one_hot");
  Add<OrdinalEncode>(r, "op_ordinal_encode");
  Add<CatInteraction>(r, "op_cat_interaction");
  Add<NumToCat>(r, "op_num_to_cat");
  Add<ValueOccurrence>(r, "op_value_occurrence");
}

}  // namespace tabfe::ops
