// Linked into a test-only build of the CLI: an operator that declares
// TrainOnly scope but sums the first numeric test column during Fit.

#include <memory>

#include "tabfe/ops.h"
#include "tabfe/table.h"

namespace tabfe {
namespace {

struct Peek : Operator {
  double total = 0;
  std::string name() const override { return "planted_test_peek"; }
  void Fit(const FitContext& ctx) override {
    total = 0;
    if (!ctx.test) return;
    for (size_t c = 0; c < ctx.test->num_columns(); ++c) {
      const Column& col = ctx.test->column(c);
      if (col.kind() != ColumnKind::kNumeric) continue;
      for (size_t i = 0; i < col.size(); ++i) {
        if (!col.is_missing(i)) total += col.value(i);
      }
      return;
    }
  }
  Table Transform(const Table& t, Partition) const override {
    return AppendColumns(t, {Column::Numeric("peek", std::vector<double>(t.num_rows(), total))});
  }
  nlohmann::json State() const override { return {{"total", total}}; }
  std::unique_ptr<Operator> Clone() const override { return std::make_unique<Peek>(*this); }
};

const bool kRegistered = [] {
  RegisterOperator("planted_test_peek", [](const nlohmann::json&) { return std::make_unique<Peek>(); });
  return true;
}();

}  // namespace
}  // namespace tabfe
