// Copyright 2026 The RBP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the rbp binary end to end on a small configuration.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "rbp/io.hpp"

namespace rbp {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("rbp_cli_" + std::string(::testing::UnitTest::GetInstance()
                                          ->current_test_info()
                                          ->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = (root_ / "small.json").string();
    write_json_file(config_, small_config());
  }
  void TearDown() override { fs::remove_all(root_); }

  static Json small_config() {
    return Json::parse(R"({
      "data": {"n_policies": 4, "n_per_policy": 60},
      "training": {"hidden": [16], "max_epochs": 15, "patience": 5},
      "conformal": {"recalibration_n": 300},
      "search": {"count": 15},
      "evaluation": {"n_test": 100, "n_coverage_test": 300, "n_bound": 300,
                     "n_seeds": 2},
      "shift": {"n_records": 300, "steps": 3, "directions": 1, "n_eval": 200,
                "n_cal_sim": 200}
    })");
  }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const fs::path err = root_ / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + RBP_CLI_PATH +
                            " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = fs::exists(err) ? read_text_file(err.string()) : "";
    return r;
  }

  std::string dir(const std::string& name) const {
    return (root_ / name).string();
  }

  std::string flags(const std::string& out, int seed = 11) const {
    return "--config " + config_ + " --seed " + std::to_string(seed) +
           " --out " + out;
  }

  static std::string error_kind(const RunResult& r) {
    return Json::parse(r.err).at("error").at("kind").get<std::string>();
  }

  fs::path root_;
  std::string config_;
};

TEST_F(CliTest, StagedPipelineWritesEveryArtifact) {
  const std::string out = dir("run");
  for (const char* verb :
       {"generate", "train", "calibrate", "optimize", "evaluate"}) {
    const RunResult r = run(std::string(verb) + " " + flags(out));
    ASSERT_EQ(r.code, 0) << verb << ": " << r.err;
  }
  for (const char* f :
       {"dataset.csv", "policies.json", "receiver.json", "predictor.json",
        "training_history.csv", "calibration.json", "candidates.json",
        "optimize.json", "evaluation.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  const Json ev = read_json_file(out + "/evaluation.json");
  EXPECT_EQ(ev.at("seed").get<std::uint64_t>(), 11u);
  const Json opt = read_json_file(out + "/optimize.json");
  const Json cands = read_json_file(out + "/candidates.json");
  EXPECT_LT(opt.at("chosen_index").get<std::size_t>(),
            cands.at("candidates").size());
}

TEST_F(CliTest, SameSeedGivesIdenticalBytes) {
  for (const char* d : {"a", "b"}) {
    for (const char* verb : {"generate", "train", "calibrate"}) {
      ASSERT_EQ(run(std::string(verb) + " " + flags(dir(d))).code, 0);
    }
  }
  for (const char* f : {"dataset.csv", "predictor.json", "calibration.json"}) {
    EXPECT_EQ(read_text_file(dir("a") + "/" + f),
              read_text_file(dir("b") + "/" + f))
        << f;
  }
  ASSERT_EQ(run("generate " + flags(dir("c"), 12)).code, 0);
  EXPECT_NE(read_text_file(dir("a") + "/dataset.csv"),
            read_text_file(dir("c") + "/dataset.csv"));
}

TEST_F(CliTest, InvalidConfigIsAConfigError) {
  const std::string bad = dir("bad.json");
  write_json_file(bad, Json::parse(R"({"data": {"n_per_policy": 0}})"));
  const RunResult r = run("generate --config " + bad + " --out " + dir("x"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "config");
  EXPECT_EQ(Json::parse(r.err).at("error").at("verb"), "generate");
}

TEST_F(CliTest, ArtifactsFromAnotherSeedAreRefused) {
  const std::string out = dir("mix");
  ASSERT_EQ(run("generate " + flags(out, 1)).code, 0);
  const RunResult r = run("train " + flags(out, 2));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "fingerprint_mismatch");
}

TEST_F(CliTest, MissingUpstreamArtifactIsAnIoError) {
  const RunResult r = run("calibrate " + flags(dir("empty")));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "io");
}

TEST_F(CliTest, EnvironmentVariableSetsOutputDirectory) {
  const std::string env_dir = dir("from_env");
  const std::string args = "generate --config " + config_ + " --seed 3";
  ASSERT_EQ(run(args, "RBP_OUT_DIR=" + env_dir).code, 0);
  EXPECT_TRUE(fs::exists(env_dir + "/dataset.csv"));
  // --out wins over the variable.
  const std::string flag_dir = dir("from_flag");
  ASSERT_EQ(run(args + " --out " + flag_dir, "RBP_OUT_DIR=" + dir("unused"))
                .code,
            0);
  EXPECT_TRUE(fs::exists(flag_dir + "/dataset.csv"));
  EXPECT_FALSE(fs::exists(dir("unused")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("frobnicate").code, 64);
  EXPECT_EQ(run("").code, 64);
  EXPECT_EQ(run("generate --seeds 0 --out " + dir("u")).code, 64);
  const RunResult r =
      run("reproduce --experiment nope " + flags(dir("u")));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "invalid_argument");
}

TEST_F(CliTest, ReproduceAndShiftStudyWriteTables) {
  const std::string out = dir("rep");
  RunResult r = run("reproduce --seeds 1 " + flags(out));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f :
       {"utilities_per_seed.csv", "utilities_summary.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  const Json s = read_json_file(out + "/summary.json");
  EXPECT_EQ(s.at("seed").get<std::uint64_t>(), 11u);

  r = run("shift-study " + flags(out));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_text_file(out + "/shift_study.csv");
  EXPECT_NE(csv.find("candidate_id"), std::string::npos);
  EXPECT_NE(csv.find("dir0-step2"), std::string::npos);

  r = run("reproduce --experiment coverage-shift " + flags(dir("rep2")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(dir("rep2") + "/shift_study.csv"), csv);
}

}  // namespace
}  // namespace rbp
