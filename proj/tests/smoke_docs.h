#ifndef TABFE_TESTS_SMOKE_DOCS_H_
#define TABFE_TESTS_SMOKE_DOCS_H_

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace tabfe::testing {

inline std::filesystem::path SmokeDir() { return std::filesystem::path(TABFE_TEST_DATA) / "smoke"; }
inline std::filesystem::path SmokeConfig() { return SmokeDir() / "smoke.json"; }

inline void WriteJson(const std::filesystem::path& p, const nlohmann::json& doc) {
  std::ofstream(p) << doc.dump(2) << "\n";
}

// Smoke experiment document with `edits` merged in, written to dir/name.
inline std::filesystem::path SmokeVariant(const std::filesystem::path& dir, const std::string& name,
                                          const nlohmann::json& edits) {
  std::ifstream in(SmokeConfig());
  nlohmann::json doc = nlohmann::json::parse(in);
  for (const char* k : {"train", "test", "schema", "pipeline", "space"}) {
    doc[k] = (SmokeDir() / doc[k].get<std::string>()).lexically_normal().string();
  }
  doc["leaderboard"]["path"] = (SmokeDir() / "leaderboard.csv").string();
  doc.merge_patch(edits);
  WriteJson(dir / name, doc);
  return dir / name;
}

// Frequency-encoding pipelines over the smoke `cat` column.
inline nlohmann::json SmokeExpertFe(bool tta) {
  return {{"kind", tta ? "expert_fe_tta" : "expert_fe"},
          {"steps", nlohmann::json::array({{{"op", "op_frequency_encode"},
                                            {"scope", tta ? "train_plus_test" : "train_only"},
                                            {"params", {{"columns", {"cat"}}}}}})}};
}

// datasets x {standardized, expert_fe} x {linear, gbdt} x regimes.
inline std::filesystem::path SmokeMatrix(const std::filesystem::path& dir, const nlohmann::json& regimes) {
  WriteJson(dir / "fe.json", SmokeExpertFe(false));
  WriteJson(dir / "gbdt.json",
            {{"parameters", nlohmann::json::array({{{"name", "max_depth"}, {"search", "UniformInt[1, 4]"},
                                                    {"default", 3}}})},
             {"fixed", {{"n_estimators", 30}, {"patience", 5}}}});
  nlohmann::json ds = {{"name", "smoke"},
                       {"train", (SmokeDir() / "train.csv").string()},
                       {"test", (SmokeDir() / "test.csv").string()},
                       {"schema", (SmokeDir() / "schema.json").string()},
                       {"leaderboard", {{"path", (SmokeDir() / "leaderboard.csv").string()},
                                        {"direction", "higher_better"}}},
                       {"pipelines", {{"standardized", std::string(TABFE_PRESETS) + "/pipelines/standardized.json"},
                                      {"expert_fe", (dir / "fe.json").string()}}}};
  nlohmann::json doc = {
      {"datasets", nlohmann::json::array({ds})},
      {"pipelines", {"standardized", "expert_fe"}},
      {"learners", nlohmann::json::array(
                       {{{"name", "linear"}, {"kind", "linear"},
                         {"space", std::string(TABFE_PRESETS) + "/spaces/linear.json"}},
                        {{"name", "gbdt"}, {"kind", "gbdt"}, {"space", (dir / "gbdt.json").string()}}})},
      {"regimes", regimes},
      {"n_folds", 3},
      {"fold_strategy", "stratified"},
      {"seed", 1}};
  WriteJson(dir / "matrix.json", doc);
  return dir / "matrix.json";
}

}  // namespace tabfe::testing

#endif  // TABFE_TESTS_SMOKE_DOCS_H_
