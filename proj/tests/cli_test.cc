#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "smoke_docs.h"
#include "tabfe/io.h"
#include "test_util.h"

namespace tabfe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }

  Result Run(const std::string& args, const char* binary = TABFE_CLI) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("TABFE_RUN_ROOT='") + (dir_ / "runs").string() + "' '" + binary + "' " +
                            args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = ReadFile(out);
    r.err = ReadFile(err);
    return r;
  }
  static std::string Q(const fs::path& p) { return "'" + p.string() + "'"; }

  fs::path dir_;
};

TEST_F(Cli, ValidateStandardizedPreset) {
  const auto r = Run("validate " + Q(fs::path(TABFE_PRESETS) / "pipelines/standardized.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pipeline"), std::string::npos);
}

TEST_F(Cli, ValidateEveryPresetAndSmoke) {
  for (const auto& e : fs::directory_iterator(fs::path(TABFE_PRESETS) / "pipelines")) {
    EXPECT_EQ(Run("validate " + Q(e.path())).code, 0) << e.path();
  }
  for (const char* s : {"gbdt.json", "linear.json"}) {
    EXPECT_EQ(Run("validate " + Q(fs::path(TABFE_PRESETS) / "spaces" / s)).code, 0) << s;
  }
  EXPECT_EQ(Run("validate " + Q(testing::SmokeConfig())).code, 0);
  EXPECT_EQ(Run("validate " + Q(testing::SmokeDir() / "schema.json")).code, 0);
}

TEST_F(Cli, ValidateTrainPlusTestInExpertFe) {
  json doc = {{"kind", "expert_fe"},
              {"steps", json::array({{{"op", "op_drop_constant"}, {"scope", "train_only"}, {"params", json::object()}},
                                     {{"op", "op_frequency_encode"}, {"scope", "train_plus_test"},
                                      {"params", {{"columns", {"cat"}}}}}})}};
  testing::WriteJson(dir_ / "bad.json", doc);
  const auto r = Run("validate " + Q(dir_ / "bad.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("steps[1]"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("IllegalScopeForKind"), std::string::npos) << r.err;
}

TEST_F(Cli, ValidateErrors) {
  EXPECT_EQ(Run("validate " + Q(dir_ / "missing.json")).code, 3);
  std::ofstream(dir_ / "garbage.json") << "{not json";
  EXPECT_EQ(Run("validate " + Q(dir_ / "garbage.json")).code, 2);
  testing::WriteJson(dir_ / "space.json", {{"parameters", {{{"name", "a"}, {"search", "Uniform[2, 1]"}}}}});
  EXPECT_EQ(Run("validate " + Q(dir_ / "space.json")).code, 2);
  EXPECT_EQ(Run("").code, 2);
  EXPECT_EQ(Run("frobnicate x").code, 2);
}

TEST_F(Cli, RunSmoke) {
  const auto r = Run("run " + Q(testing::SmokeConfig()) + " --run-dir " + Q(dir_ / "run"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "metrics.json"));
  // <dataset>\t<pipeline>\t<learner>\t<regime>\t<metric>=<value>\t<percentile>
  EXPECT_EQ(r.out.rfind("smoke\tstandardized\tlinear\tdefault\tauc=", 0), 0u) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\t'), 5);

  const auto again = Run("run " + Q(testing::SmokeConfig()) + " --run-dir " + Q(dir_ / "run"));
  EXPECT_EQ(again.code, 4);
  EXPECT_NE(again.err.find("RunDirNotEmpty"), std::string::npos) << again.err;
  EXPECT_EQ(Run("run " + Q(testing::SmokeConfig()) + " --run-dir " + Q(dir_ / "run") + " --force").code, 0);
}

TEST_F(Cli, RunDefaultRootAndSeedOverride) {
  ASSERT_EQ(Run("run " + Q(testing::SmokeConfig()) + " --seed 7").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "runs" / "smoke__standardized__linear__default__s7" / "metrics.json"));
  EXPECT_EQ(Run("run " + Q(testing::SmokeConfig()) + " --seed -3").code, 2);
}

TEST_F(Cli, RunJobsByteIdentical) {
  const std::string cfg = Q(testing::SmokeConfig());
  ASSERT_EQ(Run("run " + cfg + " --jobs 1 --run-dir " + Q(dir_ / "a")).code, 0);
  ASSERT_EQ(Run("run " + cfg + " --jobs 8 --run-dir " + Q(dir_ / "b")).code, 0);
  for (const char* f : {"metrics.json", "predictions.csv", "oof_predictions.csv"}) {
    EXPECT_EQ(ReadFile(dir_ / "a" / f), ReadFile(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, RunErrors) {
  EXPECT_EQ(Run("run " + Q(dir_ / "nope.json")).code, 3);
  const auto no_folds = testing::SmokeVariant(dir_, "nf.json", {{"n_folds", nullptr}});
  const auto r = Run("run " + Q(no_folds) + " --run-dir " + Q(dir_ / "r"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("n_folds"), std::string::npos);
  const auto missing_train = testing::SmokeVariant(dir_, "mt.json", {{"train", (dir_ / "gone.csv").string()}});
  const auto m = Run("run " + Q(missing_train) + " --run-dir " + Q(dir_ / "m"));
  EXPECT_EQ(m.code, 3) << m.err;
}

TEST_F(Cli, AuditStandardized) {
  const auto r = Run("audit " + Q(testing::SmokeConfig()));
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = Run("audit --json " + Q(testing::SmokeConfig()));
  ASSERT_EQ(j.code, 0);
  EXPECT_TRUE(json::parse(j.out)["passed"].get<bool>());
}

TEST_F(Cli, AuditPlantedLeak) {
  json pipe = {{"kind", "expert_fe"},
               {"steps", json::array({{{"op", "planted_test_peek"}, {"scope", "train_only"}, {"params", json::object()}}})}};
  const auto cfg = testing::SmokeVariant(dir_, "leak.json", {{"pipeline", pipe}});
  const auto r = Run("audit " + Q(cfg), TABFE_CLI_PLANTED);
  EXPECT_EQ(r.code, 5) << r.out << r.err;
  EXPECT_NE(r.out.find("planted_test_peek"), std::string::npos);
  // the shipped binary does not know the operator
  EXPECT_EQ(Run("audit " + Q(cfg)).code, 2);
}

TEST_F(Cli, AuditOofStepWithoutFolds) {
  json pipe = {{"kind", "expert_fe"},
               {"steps", json::array({{{"op", "op_target_encode_oof"}, {"scope", "train_only"},
                                       {"params", {{"columns", {"cat"}}}}}})}};
  const auto cfg = testing::SmokeVariant(dir_, "oof.json", {{"pipeline", pipe}, {"n_folds", nullptr}});
  const auto r = Run("audit " + Q(cfg));
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("fold assignment"), std::string::npos) << r.err;
  const auto with = testing::SmokeVariant(dir_, "oof5.json", {{"pipeline", pipe}, {"n_folds", 5}});
  EXPECT_EQ(Run("audit " + Q(with)).code, 0);
}

TEST_F(Cli, MatrixResumeAndReport) {
  const auto doc = testing::SmokeMatrix(dir_, {"default"});
  const auto r = Run("matrix " + Q(doc) + " --run-dir " + Q(dir_ / "m"));
  ASSERT_EQ(r.code, 0) << r.err;
  size_t cells = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "m" / "cells")) cells += fs::exists(e.path() / "metrics.json");
  EXPECT_EQ(cells, 4u);
  EXPECT_TRUE(fs::exists(dir_ / "m" / "report.md"));
  EXPECT_NE(r.err.find("4 ran, 0 skipped"), std::string::npos) << r.err;

  const auto again = Run("matrix " + Q(doc) + " --run-dir " + Q(dir_ / "m"));
  EXPECT_EQ(again.code, 0);
  EXPECT_NE(again.err.find("0 ran, 4 skipped"), std::string::npos) << again.err;

  const auto rep = Run("report " + Q(dir_ / "m"));
  EXPECT_EQ(rep.code, 0);
  EXPECT_EQ(rep.out, ReadFile(dir_ / "m" / "report.md"));
}

TEST_F(Cli, MatrixEmptyGrid) {
  const auto doc = testing::SmokeMatrix(dir_, json::array());
  EXPECT_EQ(Run("matrix " + Q(doc) + " --run-dir " + Q(dir_ / "m")).code, 2);
  EXPECT_FALSE(fs::exists(dir_ / "m"));
}

TEST_F(Cli, ReportAndInferSchema) {
  ASSERT_EQ(Run("run " + Q(testing::SmokeConfig()) + " --run-dir " + Q(dir_ / "run")).code, 0);
  const auto rep = Run("report " + Q(dir_ / "run"));
  EXPECT_EQ(rep.code, 0);
  EXPECT_FALSE(rep.out.empty());
  EXPECT_EQ(Run("report " + Q(dir_ / "empty")).code, 3);
  const auto inf = Run("infer-schema " + Q(testing::SmokeDir() / "train.csv"));
  ASSERT_EQ(inf.code, 0);
  EXPECT_EQ(json::parse(inf.out)["kinds"]["cat"], "categorical");
}

}  // namespace
}  // namespace tabfe
