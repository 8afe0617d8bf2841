#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tabfe/io.h"
#include "tabfe/learners.h"
#include "tabfe/metrics.h"
#include "tabfe/rng.h"
#include "test_util.h"

namespace tabfe {
namespace {

using nlohmann::json;
using testing::Num;

TargetSpec Task_(Task t, int k = 0) {
  TargetSpec s;
  s.task = t;
  s.n_classes = k;
  return s;
}

LearnerConfig Cfg(LearnerKind kind, json params) {
  LearnerConfig c;
  c.kind = kind;
  c.params = std::move(params);
  return c;
}

Matrix Col(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  for (size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

// --- linear ---

TEST(Linear, ExactFit) {
  std::vector<double> x{-2, -1, 0, 0.5, 3, 7}, y;
  for (double v : x) y.push_back(3 * v);
  const auto m = FitLinear(Col(x), y, Task_(Task::kRegression), Cfg(LearnerKind::kLinear, {{"lambda", 1e-12}}));
  EXPECT_NEAR(m.weights(0, 0), 3.0, 1e-6);
  EXPECT_NEAR(m.bias[0], 0.0, 1e-6);
}

TEST(Linear, LargeLambdaShrinks) {
  std::vector<double> x{-2, -1, 0, 0.5, 3, 7}, y;
  for (double v : x) y.push_back(3 * v + 1);
  const auto m = FitLinear(Col(x), y, Task_(Task::kRegression), Cfg(LearnerKind::kLinear, {{"lambda", 1e12}}));
  EXPECT_NEAR(m.weights(0, 0), 0.0, 1e-9);
}

// Four separable points: finite weights, ranking perfect.
TEST(Linear, SeparableLogistic) {
  const std::vector<double> x{-2, -1, 1, 2}, y{0, 0, 1, 1};
  const auto m = FitLinear(Col(x), y, Task_(Task::kBinary), Cfg(LearnerKind::kLinear, {{"lambda", 1.0}}));
  EXPECT_TRUE(std::isfinite(m.weights(0, 0)));
  EXPECT_TRUE(std::isfinite(m.bias[0]));
  const Matrix p = Predict(m, Col(x));
  EXPECT_EQ(Auc(y, p.column(0)), 1.0);
}

TEST(Linear, LogisticStationarity) {
  // At the optimum the penalized gradient vanishes; check it on raw data.
  Rng rng(3);
  std::vector<double> x(200), y(200);
  for (size_t i = 0; i < 200; ++i) {
    x[i] = rng.Normal();
    y[i] = rng.Uniform01() < 1 / (1 + std::exp(-2 * x[i])) ? 1 : 0;
  }
  const auto m = FitLinear(Col(x), y, Task_(Task::kBinary), Cfg(LearnerKind::kLinear, {{"lambda", 1e-9}}));
  const Matrix p = Predict(m, Col(x));
  double g0 = 0, g1 = 0;
  for (size_t i = 0; i < 200; ++i) {
    g0 += p(i, 0) - y[i];
    g1 += (p(i, 0) - y[i]) * x[i];
  }
  EXPECT_NEAR(g0, 0.0, 1e-6);
  EXPECT_NEAR(g1, 0.0, 1e-6);
}

TEST(Linear, ZeroWeightsHalfProbability) {
  const std::vector<double> x{0, 0, 0, 0}, y{0, 1, 0, 1};
  const auto m = FitLinear(Col(x), y, Task_(Task::kBinary), Cfg(LearnerKind::kLinear, json::object()));
  const Matrix p = Predict(m, Col({0, 5}));
  EXPECT_NEAR(p(0, 0), 0.5, 1e-12);
}

TEST(Linear, SoftmaxRowsSumToOne) {
  Rng rng(4);
  Matrix x(90, 2);
  std::vector<double> y(90);
  for (size_t i = 0; i < 90; ++i) {
    y[i] = static_cast<double>(i % 3);
    x(i, 0) = y[i] + rng.Normal();
    x(i, 1) = rng.Normal();
  }
  const auto m = FitLinear(x, y, Task_(Task::kMulticlass, 3), Cfg(LearnerKind::kLinear, json::object()));
  const Matrix p = Predict(m, x);
  ASSERT_EQ(p.cols(), 3u);
  for (size_t i = 0; i < 90; ++i) EXPECT_NEAR(p(i, 0) + p(i, 1) + p(i, 2), 1.0, 1e-12);
}

TEST(Linear, NonFiniteInput) {
  Matrix x = Col({1, std::numeric_limits<double>::infinity()});
  EXPECT_TABFE_ERROR(FitLinear(x, std::vector<double>{1, 2}, Task_(Task::kRegression), Cfg(LearnerKind::kLinear, json::object())),
                     ErrorCode::kNonFiniteInput);
}

TEST(Linear, MissingImputedWithWarning) {
  const auto m = FitLinear(Col({1, testing::kNaN, 3}), std::vector<double>{1, 2, 3}, Task_(Task::kRegression),
                           Cfg(LearnerKind::kLinear, json::object()));
  EXPECT_FALSE(m.warnings.empty());
}

TEST(Predict, FeatureCountMismatch) {
  const auto m = FitLinear(Col({1, 2, 3}), std::vector<double>{1, 2, 3}, Task_(Task::kRegression),
                           Cfg(LearnerKind::kLinear, json::object()));
  EXPECT_TABFE_ERROR(Predict(m, Matrix(2, 2)), ErrorCode::kFeatureCountMismatch);
}

TEST(LearnerParams, Validation) {
  EXPECT_TABFE_ERROR(ValidateLearnerParams(Cfg(LearnerKind::kLinear, {{"max_depth", 3}})), ErrorCode::kInvalidConfig);
  EXPECT_NO_THROW(ValidateLearnerParams(Cfg(LearnerKind::kGbdt, {{"max_depth", 3}, {"reg_alpha", 0.1}})));
  const auto& names = LearnerParameterNames(LearnerKind::kGbdt);
  for (const char* n : {"n_estimators", "patience", "learning_rate", "max_depth", "colsample_bytree", "subsample",
                        "min_child_weight", "reg_alpha", "reg_lambda"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
}

// --- gbdt ---

Matrix XorX() {
  Matrix x(4, 2);
  const double v[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (size_t i = 0; i < 4; ++i) {
    x(i, 0) = v[i][0];
    x(i, 1) = v[i][1];
  }
  return x;
}

TEST(Gbdt, XorTruthTable) {
  const std::vector<double> y{0, 1, 1, 0};
  const auto m = FitGbdt(XorX(), y, {}, Task_(Task::kBinary),
                         Cfg(LearnerKind::kGbdt, {{"max_depth", 2}, {"n_estimators", 50}, {"patience", 0},
                                                  {"min_child_weight", 0}, {"learning_rate", 0.5}}));
  const Matrix p = Predict(m, XorX());
  for (size_t i = 0; i < 4; ++i) EXPECT_EQ(p(i, 0) > 0.5 ? 1.0 : 0.0, y[i]);
  for (const auto& round : m.rounds) EXPECT_LE(round[0].depth(), 2);
}

TEST(Gbdt, LossTraceNonIncreasing) {
  Rng rng(5);
  Matrix x(300, 3);
  std::vector<double> y(300);
  for (size_t i = 0; i < 300; ++i) {
    for (size_t j = 0; j < 3; ++j) x(i, j) = rng.Normal();
    y[i] = rng.Uniform01() < 1 / (1 + std::exp(-(x(i, 0) - x(i, 1) * x(i, 2)))) ? 1 : 0;
  }
  const auto m = FitGbdt(x, y, {}, Task_(Task::kBinary),
                         Cfg(LearnerKind::kGbdt, {{"n_estimators", 60}, {"patience", 0}, {"subsample", 1.0},
                                                  {"colsample_bytree", 1.0}, {"max_depth", 3}}));
  ASSERT_EQ(m.train_loss.size(), 60u);
  EXPECT_EQ(m.iterations, 60);
  for (size_t i = 1; i < m.train_loss.size(); ++i) EXPECT_LE(m.train_loss[i], m.train_loss[i - 1]);
}

TEST(Gbdt, ZeroLearningRateIsBaseScore) {
  const std::vector<double> y{0, 1, 1, 1};
  const auto m = FitGbdt(XorX(), y, {}, Task_(Task::kBinary),
                         Cfg(LearnerKind::kGbdt, {{"learning_rate", 0.0}, {"n_estimators", 20}, {"patience", 0}}));
  const Matrix p = Predict(m, XorX());
  for (size_t i = 0; i < 4; ++i) EXPECT_EQ(p(i, 0), 0.75);
  const std::vector<double> yr{1, 2, 3, 10};
  const auto r = FitGbdt(XorX(), yr, {}, Task_(Task::kRegression),
                         Cfg(LearnerKind::kGbdt, {{"learning_rate", 0.0}, {"n_estimators", 20}, {"patience", 0}}));
  EXPECT_EQ(Predict(r, XorX())(2, 0), 4.0);
}

// One split on a binary feature, squared error, one round with rate 1:
// leaf = -G / (H + lambda) with g = base - y, h = 1.
TEST(Gbdt, LeafValueOracleAndLambdaMonotone) {
  const std::vector<double> xv{0, 0, 0, 1, 1, 1, 1}, y{1, 2, 4, 8, 9, 10, 13};
  double base = 0;
  for (double v : y) base += v;
  base /= 7;
  double prev_abs = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.5, 1.0, 3.0, 10.0, 100.0}) {
    const auto m = FitGbdt(Col(xv), y, {}, Task_(Task::kRegression),
                           Cfg(LearnerKind::kGbdt, {{"n_estimators", 1}, {"patience", 0}, {"learning_rate", 1.0},
                                                    {"max_depth", 1}, {"reg_lambda", lambda}, {"min_child_weight", 0}}));
    const Matrix p = Predict(m, Col({0, 1}));
    for (int side = 0; side < 2; ++side) {
      double g = 0, h = 0;
      for (size_t i = 0; i < 7; ++i) {
        if (xv[i] != side) continue;
        g += base - y[i];
        h += 1;
      }
      const double leaf = -g / (h + lambda);
      EXPECT_NEAR(p(static_cast<size_t>(side), 0), base + leaf, 1e-12);
      if (side == 1) {
        EXPECT_LE(std::abs(leaf), prev_abs);
        prev_abs = std::abs(leaf);
      }
    }
  }
}

TEST(Gbdt, EarlyStoppingBestIteration) {
  Rng rng(6);
  Matrix x(400, 2), xv(200, 2);
  std::vector<double> y(400), yv(200);
  for (size_t i = 0; i < 600; ++i) {
    Matrix& mx = i < 400 ? x : xv;
    const size_t r = i < 400 ? i : i - 400;
    mx(r, 0) = rng.Normal();
    mx(r, 1) = rng.Normal();
    (i < 400 ? y[r] : yv[r]) = rng.Uniform01() < 1 / (1 + std::exp(-mx(r, 0))) ? 1 : 0;
  }
  LearnerConfig cfg = Cfg(LearnerKind::kGbdt, {{"n_estimators", 500}, {"patience", 15}, {"learning_rate", 0.3}});
  cfg.valid_metric = "auc";
  const auto m = FitGbdt(x, y, {&xv, yv}, Task_(Task::kBinary), cfg);
  ASSERT_GE(m.best_iteration, 0);
  EXPECT_LT(m.iterations, 500);
  EXPECT_EQ(m.valid_metric.size(), static_cast<size_t>(m.iterations));
  for (size_t i = static_cast<size_t>(m.best_iteration); i < m.valid_metric.size(); ++i) {
    EXPECT_GE(m.valid_metric[static_cast<size_t>(m.best_iteration)], m.valid_metric[i]);
  }
  EXPECT_EQ(m.rounds.size(), static_cast<size_t>(m.best_iteration + 1));
  EXPECT_LE(m.rounds.size(), 500u);
}

TEST(Gbdt, EmptyValidation) {
  EXPECT_TABFE_ERROR(FitGbdt(XorX(), std::vector<double>{0, 1, 1, 0}, {}, Task_(Task::kBinary),
                             Cfg(LearnerKind::kGbdt, {{"patience", 10}})),
                     ErrorCode::kEmptyValidation);
}

TEST(Gbdt, NonFiniteInput) {
  Matrix x = XorX();
  x(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_TABFE_ERROR(FitGbdt(x, std::vector<double>{0, 1, 1, 0}, {}, Task_(Task::kBinary),
                             Cfg(LearnerKind::kGbdt, {{"patience", 0}})),
                     ErrorCode::kNonFiniteInput);
}

// Missing values go to whichever side lowers the loss.
TEST(Gbdt, MissingRouting) {
  const std::vector<double> xv{0, 0, 1, 1, testing::kNaN, testing::kNaN}, y{0, 0, 10, 10, 10, 10};
  const auto m = FitGbdt(Col(xv), y, {}, Task_(Task::kRegression),
                         Cfg(LearnerKind::kGbdt, {{"n_estimators", 30}, {"patience", 0}, {"max_depth", 1},
                                                  {"min_child_weight", 0}, {"reg_lambda", 0}}));
  const Matrix p = Predict(m, Col({testing::kNaN, 0}));
  EXPECT_GT(p(0, 0), 9.0);
  EXPECT_LT(p(1, 0), 1.0);
}

TEST(Gbdt, MulticlassAndDeterminism) {
  Rng rng(7);
  Matrix x(150, 2);
  std::vector<double> y(150);
  for (size_t i = 0; i < 150; ++i) {
    y[i] = static_cast<double>(i % 3);
    x(i, 0) = y[i] + rng.Normal() * 0.5;
    x(i, 1) = rng.Normal();
  }
  LearnerConfig cfg = Cfg(LearnerKind::kGbdt, {{"n_estimators", 20}, {"patience", 0}, {"subsample", 0.7},
                                               {"colsample_bytree", 0.5}});
  cfg.seed = 9;
  const auto a = FitGbdt(x, y, {}, Task_(Task::kMulticlass, 3), cfg);
  const auto b = FitGbdt(x, y, {}, Task_(Task::kMulticlass, 3), cfg);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  const Matrix p = Predict(a, x);
  for (size_t i = 0; i < 150; ++i) EXPECT_NEAR(p(i, 0) + p(i, 1) + p(i, 2), 1.0, 1e-12);
}

TEST(Gbdt, TreeCountBounded) {
  const auto m = FitGbdt(XorX(), std::vector<double>{0, 1, 1, 0}, {}, Task_(Task::kBinary),
                         Cfg(LearnerKind::kGbdt, {{"n_estimators", 7}, {"patience", 0}}));
  EXPECT_LE(m.rounds.size(), 7u);
  EXPECT_EQ(m.train_loss.size(), static_cast<size_t>(m.iterations));
}

// --- external ---

class External : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    Table tr = testing::WithTarget({Num("x", {1, 2, 3, 4})}, Num("y", {0, 1, 0, 1}));
    Table va = testing::WithTarget({Num("x", {5, 6})}, Num("y", {0, 1}));
    Table te({Num("x", {7, 8, 9})});
    WriteFoldBundle(dir_, tr, va, te, {{"target", "y"}, {"task", "binary"}, {"metric", "auc"}});
  }
  std::string Script(const std::string& body) {
    const auto p = dir_ / "learner.sh";
    std::ofstream(p) << "#!/bin/sh\n" << body;
    std::filesystem::permissions(p, std::filesystem::perms::owner_all);
    return p.string();
  }
  std::filesystem::path dir_;
};

TEST_F(External, BundleWritten) {
  for (const char* f : {"train.csv", "valid.csv", "test.csv", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / f)) << f;
  }
  EXPECT_EQ(json::parse(ReadFile(dir_ / "manifest.json"))["task"], "binary");
}

TEST_F(External, ConstantStubGivesHalfAuc) {
  const auto cmd = Script("printf 'pred\\n0.5\\n0.5\\n' > \"$1/valid_pred.csv\"\n"
                          "printf 'pred\\n0.5\\n0.5\\n0.5\\n' > \"$1/test_pred.csv\"\n");
  const auto out = RunExternal(cmd, dir_, 2, 3, Task_(Task::kBinary));
  EXPECT_EQ(Auc(std::vector<double>{0, 1}, out.valid.column(0)), 0.5);
  EXPECT_EQ(out.test.rows(), 3u);
}

TEST_F(External, NonZeroExit) {
  const auto cmd = Script("echo boom >&2\nexit 1\n");
  try {
    RunExternal(cmd, dir_, 2, 3, Task_(Task::kBinary));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExternalFailed);
    EXPECT_NE(std::string(e.what()).find("exit code 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST_F(External, NanPrediction) {
  const auto cmd = Script("printf 'pred\\nnan\\n0.5\\n' > \"$1/valid_pred.csv\"\n"
                          "printf 'pred\\n0.5\\n0.5\\n0.5\\n' > \"$1/test_pred.csv\"\n");
  EXPECT_TABFE_ERROR(RunExternal(cmd, dir_, 2, 3, Task_(Task::kBinary)), ErrorCode::kMalformedPrediction);
}

TEST_F(External, ProbabilityOutOfRange) {
  const auto cmd = Script("printf 'pred\\n1.5\\n0.5\\n' > \"$1/valid_pred.csv\"\n"
                          "printf 'pred\\n0.5\\n0.5\\n0.5\\n' > \"$1/test_pred.csv\"\n");
  EXPECT_TABFE_ERROR(RunExternal(cmd, dir_, 2, 3, Task_(Task::kBinary)), ErrorCode::kMalformedPrediction);
}

TEST_F(External, MissingFile) {
  const auto cmd = Script("printf 'pred\\n0.5\\n0.5\\n' > \"$1/valid_pred.csv\"\n");
  EXPECT_TABFE_ERROR(RunExternal(cmd, dir_, 2, 3, Task_(Task::kBinary)), ErrorCode::kMalformedPrediction);
}

}  // namespace
}  // namespace tabfe
