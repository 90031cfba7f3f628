#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "experiment.hpp"

namespace sdekit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const json kP1 = json::parse(R"({
  "x0": 0,
  "drift": {"breakpoints": [0],
            "pieces": [{"form": "constant", "params": [1]}, {"form": "constant", "params": [-1]}],
            "breakpoint_values": [-1]},
  "diffusion": {"form": "constant", "params": [1]}})");

const json kGbm = json::parse(R"({
  "x0": 1,
  "drift": {"pieces": [{"form": "affine", "params": [0, 0.05]}]},
  "diffusion": {"form": "affine", "params": [0, 0.2]}})");

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sdekit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& doc, const std::string& name = "config.json") {
    const auto path = dir_ / name;
    std::ofstream(path) << doc.dump(2);
    return path;
  }

  int invoke(StudyKind study, RunOptions options) {
    out_.str("");
    err_.str("");
    if (!options.out_dir) options.out_dir = dir_ / "out";
    return run(study, options, out_, err_);
  }

  int invoke(StudyKind study, const json& doc) {
    RunOptions options;
    options.config_path = write_config(doc);
    return invoke(study, options);
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, ValidateAdmissibleProblem) {
  EXPECT_EQ(invoke(StudyKind::validate, json{{"problem", kP1}}), kSuccess);
  EXPECT_NE(out_.str().find("admissible"), std::string::npos);
  const auto report = json::parse(slurp(dir_ / "out" / "validation.json"));
  EXPECT_TRUE(report.at("admissible").get<bool>());
}

TEST_F(CliTest, ValidateRejectsDegenerateDiffusionAtBreakpoint) {
  auto problem = kP1;
  problem["diffusion"] = {{"form", "affine"}, {"params", {0, 1}}};
  EXPECT_EQ(invoke(StudyKind::validate, json{{"problem", problem}}), kInadmissible);
  EXPECT_NE(out_.str().find("A2 violated"), std::string::npos) << out_.str();
}

TEST_F(CliTest, InadmissibleProblemStopsConvergence) {
  auto problem = kP1;
  problem["diffusion"] = {{"form", "constant"}, {"params", {0}}};
  EXPECT_EQ(invoke(StudyKind::convergence, json{{"problem", problem}, {"n_list", {4, 8, 16}},
                                                {"n_fine", 64}, {"M", 4}}),
            kInadmissible);
}

TEST_F(CliTest, ConfigErrors) {
  EXPECT_EQ(invoke(StudyKind::validate, json{{"problem", kP1}, {"colour", "blue"}}), kConfigError);
  EXPECT_NE(err_.str().find("colour"), std::string::npos);

  EXPECT_EQ(invoke(StudyKind::convergence,
                   json{{"problem", kP1}, {"n_list", {16, 24}}, {"n_fine", 64}, {"M", 10}}),
            kConfigError);

  EXPECT_EQ(invoke(StudyKind::convergence, json{{"problem", kP1}, {"study", "occupation"}}),
            kConfigError);

  EXPECT_EQ(invoke(StudyKind::validate, json{{"seed", 1}}), kConfigError);

  EXPECT_EQ(invoke(StudyKind::convergence, json{{"problem", kP1}, {"scheme", "milstein"}}),
            kConfigError);

  EXPECT_EQ(invoke(StudyKind::convergence,
                   json{{"problem", kP1}, {"reference", "closed_form_gbm"}, {"n_list", {4, 8, 16}},
                        {"n_fine", 64}, {"M", 4}}),
            kConfigError);

  RunOptions missing;
  missing.config_path = dir_ / "does_not_exist.json";
  EXPECT_EQ(invoke(StudyKind::validate, missing), kConfigError);

  RunOptions garbage;
  garbage.config_path = dir_ / "garbage.json";
  std::ofstream(garbage.config_path) << "{ not json";
  EXPECT_EQ(invoke(StudyKind::validate, garbage), kConfigError);
}

TEST_F(CliTest, GbmConvergenceSlope) {
  const json doc{{"problem", kGbm},        {"reference", "closed_form_gbm"},
                 {"n_list", {16, 32, 64, 128, 256}}, {"n_fine", 1024},
                 {"M", 1000},              {"p", 2},
                 {"seed", 7},              {"threads", 4}};
  ASSERT_EQ(invoke(StudyKind::convergence, doc), kSuccess) << err_.str();
  const auto summary = json::parse(slurp(dir_ / "out" / "convergence_summary.json"));
  const double slope = summary.at("fits").at(0).at("fit").at("slope").get<double>();
  EXPECT_GE(slope, -0.65);
  EXPECT_LE(slope, -0.40);
  EXPECT_NE(out_.str().find("slope="), std::string::npos);
  EXPECT_EQ(first_line(dir_ / "out" / "convergence_final_time.csv"),
            "n,error,std_error,M,p,q,scheme,reference");
}

TEST_F(CliTest, RerunsAreByteIdenticalAcrossThreadCounts) {
  const json doc{{"problem", kP1},
                 {"n_list", {8, 16, 32}},
                 {"n_fine", 256},
                 {"M", 50},
                 {"p", {1, 2}},
                 {"errors", {"final_time", "sup_norm", "path_lq"}},
                 {"seed", 11}};
  RunOptions a;
  a.config_path = write_config(doc);
  a.threads = 1;
  a.out_dir = dir_ / "a";
  RunOptions b = a;
  b.threads = 8;
  b.out_dir = dir_ / "b";
  ASSERT_EQ(invoke(StudyKind::convergence, a), kSuccess) << err_.str();
  ASSERT_EQ(invoke(StudyKind::convergence, b), kSuccess) << err_.str();
  for (const char* name : {"convergence_final_time.csv", "convergence_sup_norm.csv",
                           "convergence_path_lq.csv", "convergence_summary.json"}) {
    const auto left = slurp(dir_ / "a" / name);
    EXPECT_FALSE(left.empty()) << name;
    EXPECT_EQ(left, slurp(dir_ / "b" / name)) << name;
  }
}

TEST_F(CliTest, SeedFlagChangesResults) {
  const json doc{{"problem", kP1}, {"n_list", {8, 16, 32}}, {"n_fine", 256}, {"M", 20}, {"seed", 1}};
  RunOptions a;
  a.config_path = write_config(doc);
  a.out_dir = dir_ / "a";
  RunOptions b = a;
  b.seed = 2;
  b.out_dir = dir_ / "b";
  ASSERT_EQ(invoke(StudyKind::convergence, a), kSuccess);
  ASSERT_EQ(invoke(StudyKind::convergence, b), kSuccess);
  EXPECT_NE(slurp(dir_ / "a" / "convergence_final_time.csv"),
            slurp(dir_ / "b" / "convergence_final_time.csv"));
}

TEST_F(CliTest, TransformCheckOutputs) {
  ASSERT_EQ(invoke(StudyKind::transform_check,
                   json{{"problem", kP1}, {"grid", {{"lo", -0.5}, {"hi", 0.5}, {"points", 11}}}}),
            kSuccess)
      << err_.str();
  const auto csv = dir_ / "out" / "transform_check.csv";
  EXPECT_EQ(first_line(csv), "x,G,G_prime,G_second,G_inverse_of_G");
  std::ifstream in(csv);
  std::size_t lines = 0;
  for (std::string s; std::getline(in, s);) ++lines;
  EXPECT_EQ(lines, 12u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "transform.json"));
}

TEST_F(CliTest, SimulateOutputs) {
  ASSERT_EQ(invoke(StudyKind::simulate,
                   json{{"problem", kP1}, {"n_fine", 256}, {"simulate", {{"n", 16}, {"z_column", true}}}}),
            kSuccess)
      << err_.str();
  const auto csv = dir_ / "out" / "simulate.csv";
  EXPECT_EQ(first_line(csv), "t,x_em,z_em,x_transformed_em");
  std::ifstream in(csv);
  std::size_t lines = 0;
  for (std::string s; std::getline(in, s);) ++lines;
  EXPECT_EQ(lines, 258u);
}

TEST_F(CliTest, OccupationOutputs) {
  ASSERT_EQ(invoke(StudyKind::occupation,
                   json{{"problem", kP1}, {"n_list", {4, 8, 16, 32}}, {"n_fine", 256}, {"M", 40}}),
            kSuccess)
      << err_.str();
  EXPECT_EQ(first_line(dir_ / "out" / "occupation.csv"), "n,xi,mean_meas,pmean_meas,std_error,M");
  const auto summary = json::parse(slurp(dir_ / "out" / "occupation_summary.json"));
  EXPECT_FALSE(summary.at("fits").empty());
  EXPECT_EQ(summary.at("fits").at(0).at("fine_resolution_sensitivity").size(), 4u);
}

TEST_F(CliTest, OverridesApplyDottedKeys) {
  json doc{{"problem", kP1}, {"n_list", {8, 16, 32}}, {"n_fine", 256}, {"M", 10}};
  RunOptions options;
  options.config_path = write_config(doc);
  options.overrides = {"M=12", "problem.x0=0.25"};
  ASSERT_EQ(invoke(StudyKind::convergence, options), kSuccess) << err_.str();
  const auto summary = json::parse(slurp(dir_ / "out" / "convergence_summary.json"));
  EXPECT_EQ(summary.at("M").get<int>(), 12);

  options.overrides = {"n_fine=100"};
  EXPECT_EQ(invoke(StudyKind::convergence, options), kConfigError);
}

TEST(ApplyOverride, ParsesJsonOrFallsBackToString) {
  json doc = json::object();
  apply_override(doc, "a.b=3");
  apply_override(doc, "scheme=transformed_em");
  apply_override(doc, "p=[1,2]");
  EXPECT_EQ(doc["a"]["b"], 3);
  EXPECT_EQ(doc["scheme"], "transformed_em");
  EXPECT_EQ(doc["p"], json({1, 2}));
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(ParseStudy, Names) {
  EXPECT_EQ(parse_study("transform-check"), StudyKind::transform_check);
  EXPECT_EQ(to_string(StudyKind::occupation), "occupation");
  EXPECT_FALSE(parse_study("bogus"));
}

}  // namespace
}  // namespace sdekit::cli
