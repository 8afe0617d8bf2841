#ifndef TABFE_FOLDS_H_
#define TABFE_FOLDS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabfe/table.h"
#include "tabfe/target.h"

namespace tabfe {

enum class FoldStrategy { kPlain, kStratifiedTarget, kGroupColumn };

FoldStrategy ParseFoldStrategy(std::string_view name);
const char* FoldStrategyName(FoldStrategy s);

// Fold id per train row. Every row belongs to exactly one fold.
struct FoldAssignment {
  std::vector<int> fold_of_row;
  int n_folds = 0;
  FoldStrategy strategy = FoldStrategy::kPlain;
  std::string group_column;
  uint64_t seed = 0;

  size_t num_rows() const { return fold_of_row.size(); }
  std::vector<size_t> RowsInFold(int fold) const;
  std::vector<size_t> RowsOutsideFold(int fold) const;
  nlohmann::json ToJson() const;
};

// Plain: shuffled round-robin, fold sizes differ by at most one.
// StratifiedTarget: per-class shuffled round-robin continuing across classes,
//   so both per-class and total fold sizes differ by at most one.
// GroupColumn: largest groups first onto the currently smallest fold; a group
//   never spans two folds.
// Errors: TooFewRows, TooFewGroups, WrongTaskForStrategy, UnknownColumn.
FoldAssignment MakeFolds(const Table& train, FoldStrategy strategy, int n_folds,
                         uint64_t seed, const TargetSpec& target,
                         std::string_view group_column = {});

}  // namespace tabfe

#endif  // TABFE_FOLDS_H_
