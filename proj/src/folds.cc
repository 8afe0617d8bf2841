#include "tabfe/folds.h"

#include <algorithm>
#include <map>
#include <numeric>

#include "tabfe/errors.h"
#include "tabfe/rng.h"

namespace tabfe {

FoldStrategy ParseFoldStrategy(std::string_view name) {
  if (name == "plain") return FoldStrategy::kPlain;
  if (name == "stratified") return FoldStrategy::kStratifiedTarget;
  if (name == "group") return FoldStrategy::kGroupColumn;
  Fail(ErrorCode::kSchemaViolation, "unknown fold strategy '" + std::string(name) + "'");
}

const char* FoldStrategyName(FoldStrategy s) {
  switch (s) {
    case FoldStrategy::kPlain:
      return "plain";
    case FoldStrategy::kStratifiedTarget:
      return "stratified";
    case FoldStrategy::kGroupColumn:
      return "group";
  }
  return "?";
}

std::vector<size_t> FoldAssignment::RowsInFold(int fold) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < fold_of_row.size(); ++i) {
    if (fold_of_row[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<size_t> FoldAssignment::RowsOutsideFold(int fold) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < fold_of_row.size(); ++i) {
    if (fold_of_row[i] != fold) rows.push_back(i);
  }
  return rows;
}

nlohmann::json FoldAssignment::ToJson() const {
  return {{"n_folds", n_folds},
          {"strategy", FoldStrategyName(strategy)},
          {"group_column", group_column},
          {"seed", seed},
          {"fold_of_row", fold_of_row}};
}

FoldAssignment MakeFolds(const Table& train, FoldStrategy strategy, int n_folds,
                         uint64_t seed, const TargetSpec& target,
                         std::string_view group_column) {
  const size_t n = train.num_rows();
  if (n_folds < 2) Fail(ErrorCode::kTooFewRows, "n_folds must be at least 2");
  if (n < static_cast<size_t>(n_folds)) {
    Fail(ErrorCode::kTooFewRows, std::to_string(n) + " rows for " +
                                     std::to_string(n_folds) + " folds");
  }
  FoldAssignment fa;
  fa.n_folds = n_folds;
  fa.strategy = strategy;
  fa.seed = seed;
  fa.fold_of_row.assign(n, 0);
  Rng rng(seed);

  switch (strategy) {
    case FoldStrategy::kPlain: {
      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      rng.Shuffle(order);
      for (size_t p = 0; p < n; ++p) fa.fold_of_row[order[p]] = static_cast<int>(p % n_folds);
      break;
    }
    case FoldStrategy::kStratifiedTarget: {
      if (!target.is_classification()) {
        Fail(ErrorCode::kWrongTaskForStrategy, "stratified folds need a classification target");
      }
      const auto y = TargetValues(train);
      std::map<double, std::vector<size_t>> by_class;
      for (size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);
      size_t p = 0;
      for (auto& [label, rows] : by_class) {
        rng.Shuffle(rows);
        for (auto r : rows) fa.fold_of_row[r] = static_cast<int>(p++ % n_folds);
      }
      break;
    }
    case FoldStrategy::kGroupColumn: {
      fa.group_column = std::string(group_column);
      const Column& g = train.column(group_column);
      // Group key -> rows, in first-appearance order.
      std::vector<std::vector<size_t>> groups;
      std::map<std::string, size_t> index;
      for (size_t i = 0; i < n; ++i) {
        std::string key;
        if (g.is_missing(i)) {
          key = "\x1f<missing>";
        } else if (g.is_numeric()) {
          key = std::to_string(g.value(i));
        } else {
          key = std::string(g.category(i));
        }
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
      }
      if (groups.size() < static_cast<size_t>(n_folds)) {
        Fail(ErrorCode::kTooFewGroups, std::to_string(groups.size()) + " groups for " +
                                           std::to_string(n_folds) + " folds");
      }
      std::vector<size_t> order(groups.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return groups[a].size() > groups[b].size();
      });
      std::vector<size_t> fold_size(n_folds, 0);
      for (auto gi : order) {
        const auto f = static_cast<int>(
            std::min_element(fold_size.begin(), fold_size.end()) - fold_size.begin());
        fold_size[f] += groups[gi].size();
        for (auto r : groups[gi]) fa.fold_of_row[r] = f;
      }
      break;
    }
  }
  return fa;
}

}  // namespace tabfe
