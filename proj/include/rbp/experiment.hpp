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

// Run configuration and the seeded pipeline stages shared by the CLI and
// the acceptance suite.
//
// Seeds: every stage draws from derive_seed(master, "<stage>", replicate).
// The receiver is drawn once from derive_seed(master, "receiver", 0) and is
// shared by all replicates.

#ifndef RBP_EXPERIMENT_HPP_
#define RBP_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbp/conformal.hpp"
#include "rbp/domain.hpp"
#include "rbp/io.hpp"
#include "rbp/neural.hpp"
#include "rbp/receiver.hpp"
#include "rbp/robustopt.hpp"

namespace rbp {

struct ReceiverSettings {
  BeliefKind kind = BeliefKind::kMisspecifiedPrior;
  double deviation = 0.25;
  double temper_exponent = 1.0;
  double noise_temperature = 1.0;
  std::optional<std::vector<Categorical>> table;  // tabular only
};

struct DataSettings {
  // The baseline policy plus n_policies - 1 random-stochastic policies.
  int n_policies = 200;
  int n_per_policy = 25;
  double calibration_fraction = 0.3;
  SignalingPolicy baseline;
};

struct TrainSettings {
  std::vector<int> hidden = {128, 64};
  double dropout = 0.3;
  TrainConfig config;
};

struct ConformalSettings {
  ScoreKind kind;
  double alpha = 0.1;
  int recalibration_n = 2000;
};

struct SearchSettings {
  PolicySearchConfig search;  // seed is replaced per replicate
  int worst_case_resolution = 10;
};

struct EvalSettings {
  int n_test = 500;             // Monte Carlo utility per method
  int n_coverage_test = 5000;   // fresh records per coverage figure
  int n_bound = 5000;           // simulated interactions for the bound
  int n_seeds = 20;
};

struct ShiftSettings {
  int n_records = 5000;  // single-policy dataset size
  double max_tv = 0.05;
  int steps = 11;        // TV targets 0, max_tv / (steps - 1), ..., max_tv
  int directions = 3;
  int n_eval = 5000;     // fresh records per coverage estimate
  int n_cal_sim = 10000;
};

struct RunConfig {
  Scenario scenario;
  ReceiverSettings receiver;
  DataSettings data;
  TrainSettings training;
  ConformalSettings conformal;
  SearchSettings search;
  EvalSettings evaluation;
  ShiftSettings shift;
  std::uint64_t seed = 20240501;
  std::string out_dir;  // not part of the fingerprint

  void validate() const;
  Json to_json() const;  // canonical form, without out_dir
  std::string fingerprint() const;
  ArtifactMeta meta() const { return {seed, fingerprint()}; }
};

// Compiled-in default: the three-state demand-response scenario and the
// replication hyperparameters. configs/replication.json holds the same.
RunConfig default_config();

// Fields absent from `j` keep their defaults. A "scenario_file" entry is
// resolved relative to `base_dir`.
RunConfig config_from_json(const Json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

BeliefFunction make_receiver(const RunConfig& cfg);

// Baseline policy (id "baseline") followed by random-stochastic policies
// "d1", "d2", ...
std::vector<SignalingPolicy> data_policies(const RunConfig& cfg,
                                           std::uint64_t replicate);

Dataset generate_stage(const RunConfig& cfg, const BeliefFunction& receiver,
                       std::uint64_t replicate);

struct Split {
  Dataset train;
  std::vector<InteractionRecord> calibration;
};

Split split_stage(const RunConfig& cfg, const Dataset& data,
                  std::uint64_t replicate);

Predictor train_stage(const RunConfig& cfg, const Dataset& train,
                      std::uint64_t replicate,
                      TrainHistory* history = nullptr);

ConformalCalibration calibrate_stage(
    const RunConfig& cfg, const Predictor& p,
    const std::vector<InteractionRecord>& calibration,
    const PolicyRegistry& registry);

std::vector<SignalingPolicy> candidate_stage(const RunConfig& cfg,
                                             std::uint64_t replicate);

struct SeedOutcome {
  std::uint64_t replicate = 0;
  // Indexed by Method: oracle, conformal-robust, worst-case, naive.
  std::array<MethodResult, 4> methods;
  double threshold = 0.0;
  CoverageReport baseline_coverage;   // fresh records under the baseline
  CoverageReport selected_coverage;   // CR's policy, original threshold
  CoverageReport recalibrated_coverage;
  double recalibrated_threshold = 0.0;
  BoundReport bound;
  int best_epoch = 0;
};

// Everything downstream of a trained predictor and calibration.
SeedOutcome evaluate_stage(const RunConfig& cfg,
                           const BeliefFunction& receiver,
                           const std::vector<SignalingPolicy>& candidates,
                           const Predictor& p,
                           const ConformalCalibration& cal,
                           std::uint64_t replicate);

// Full pipeline for one replicate.
SeedOutcome run_replicate(const RunConfig& cfg, const BeliefFunction& receiver,
                          std::uint64_t replicate);

struct MethodSummary {
  Method method;
  double mean = 0.0;
  double std = 0.0;  // sample std; zero with one seed
  double test_mean = 0.0;
  double test_std = 0.0;
};

struct UtilitiesSummary {
  std::vector<SeedOutcome> seeds;
  std::array<MethodSummary, 4> methods;
  bool means_ordered = false;  // oracle > cr > wc > naive
  // Seeds where each adjacent pair holds: oracle>cr, cr>wc, wc>naive.
  std::array<int, 3> pair_wins = {0, 0, 0};
};

UtilitiesSummary reproduce_utilities(const RunConfig& cfg, int n_seeds);

struct ShiftRow {
  std::string candidate_id;
  double target_tv = 0.0;
  ShiftMeasures measures;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_set_size = 0.0;
};

struct ShiftStudy {
  std::uint64_t replicate = 0;
  double baseline_threshold = 0.0;
  std::vector<ShiftRow> rows;
};

// Single-policy regime: data from the baseline alone, candidates on straight
// lines from the baseline toward random policies at the target TV values.
ShiftStudy shift_study(const RunConfig& cfg, std::uint64_t replicate = 0);

// Plain-text tables. Numbers are printed with fixed precision so identical
// runs give identical bytes.
std::string utilities_per_seed_csv(const UtilitiesSummary& s,
                                   const ArtifactMeta& meta);
std::string utilities_summary_csv(const UtilitiesSummary& s,
                                  const ArtifactMeta& meta);
Json utilities_summary_json(const UtilitiesSummary& s,
                            const ArtifactMeta& meta);
std::string shift_study_csv(const std::vector<ShiftStudy>& studies,
                            const ArtifactMeta& meta);
Json seed_outcome_json(const SeedOutcome& o);

}  // namespace rbp

#endif  // RBP_EXPERIMENT_HPP_
