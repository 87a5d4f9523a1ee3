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

#include "rbp/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "rbp/error.hpp"

namespace rbp {

namespace {

// Row x puts 0.6 on signal x mod n_signals and spreads the rest evenly.
SignalingPolicy default_baseline(int n_states, int n_signals) {
  Mat m(n_states, n_signals);
  if (n_signals == 1) {
    m.setOnes();
  } else {
    m.setConstant(0.4 / (n_signals - 1));
    for (int x = 0; x < n_states; ++x) m(x, x % n_signals) = 0.6;
  }
  return SignalingPolicy(m, "baseline");
}

// Rejects keys outside `known`, so typos in a config fail loudly.
void check_keys(const Json& j, const std::set<std::string>& known,
                const std::string& section) {
  require(j.is_object(), ErrorKind::kConfig,
          "config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(known.count(it.key()) > 0, ErrorKind::kConfig,
            "unknown key '" + it.key() + "' in config section '" + section +
                "'");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out,
              const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, "config " + section + "." + key + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void RunConfig::validate() const {
  const Scenario& sc = scenario;
  require(sc.n_states > 0 && sc.n_obs > 0 && sc.n_signals > 0 &&
              sc.n_actions > 0,
          ErrorKind::kConfig, "scenario is empty");
  require(receiver.deviation >= 0.0 && receiver.deviation <= 1.0,
          ErrorKind::kConfig, "receiver.deviation must lie in [0, 1]");
  require(receiver.temper_exponent > 0.0, ErrorKind::kConfig,
          "receiver.temper_exponent must be positive");
  require(receiver.noise_temperature >= 0.0, ErrorKind::kConfig,
          "receiver.noise_temperature must be non-negative");
  require(receiver.kind != BeliefKind::kTabular || receiver.table.has_value(),
          ErrorKind::kConfig, "tabular receiver needs receiver.table");
  require(data.n_policies >= 1, ErrorKind::kConfig,
          "data.n_policies must be >= 1");
  require(data.n_per_policy >= 1, ErrorKind::kConfig,
          "data.n_per_policy must be >= 1");
  require(data.calibration_fraction > 0.0 && data.calibration_fraction < 1.0,
          ErrorKind::kConfig, "data.calibration_fraction must lie in (0, 1)");
  require(data.baseline.n_states() == sc.n_states &&
              data.baseline.n_signals() == sc.n_signals,
          ErrorKind::kConfig, "data.baseline_policy has the wrong shape");
  for (int h : training.hidden) {
    require(h > 0, ErrorKind::kConfig, "training.hidden widths must be > 0");
  }
  require(training.dropout >= 0.0 && training.dropout < 1.0,
          ErrorKind::kConfig, "training.dropout must lie in [0, 1)");
  training.config.validate();
  require(conformal.alpha > 0.0 && conformal.alpha < 1.0, ErrorKind::kConfig,
          "conformal.alpha must lie in (0, 1)");
  require(conformal.kind.nll_epsilon > 0.0, ErrorKind::kConfig,
          "conformal.nll_epsilon must be positive");
  require(conformal.recalibration_n >= 1, ErrorKind::kConfig,
          "conformal.recalibration_n must be >= 1");
  search.search.validate();
  require(search.worst_case_resolution >= 1, ErrorKind::kConfig,
          "search.worst_case_resolution must be >= 1");
  require(evaluation.n_test >= 1 && evaluation.n_coverage_test >= 1 &&
              evaluation.n_bound >= 2 && evaluation.n_seeds >= 1,
          ErrorKind::kConfig, "evaluation counts must be positive");
  require(shift.n_records >= 2 && shift.steps >= 2 && shift.directions >= 1 &&
              shift.n_eval >= 1 && shift.n_cal_sim >= 1,
          ErrorKind::kConfig, "shift counts out of range");
  require(shift.max_tv >= 0.0 && shift.max_tv <= 1.0, ErrorKind::kConfig,
          "shift.max_tv must lie in [0, 1]");
}

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["scenario"] = scenario_to_json(scenario);
  Json r;
  r["kind"] = belief_kind_name(receiver.kind);
  r["deviation"] = receiver.deviation;
  r["temper_exponent"] = receiver.temper_exponent;
  r["noise_temperature"] = receiver.noise_temperature;
  if (receiver.table) {
    Json t = Json::array();
    for (const auto& c : *receiver.table) t.push_back(vector_to_json(c.probs()));
    r["table"] = t;
  }
  j["receiver"] = r;
  Json d;
  d["n_policies"] = data.n_policies;
  d["n_per_policy"] = data.n_per_policy;
  d["calibration_fraction"] = data.calibration_fraction;
  d["baseline_policy"] = matrix_to_json(data.baseline.probs());
  j["data"] = d;
  const TrainConfig& tc = training.config;
  Json t;
  t["hidden"] = training.hidden;
  t["dropout"] = training.dropout;
  t["l2_coeff"] = tc.l2_coeff;
  t["learning_rate"] = tc.learning_rate;
  t["batch_size"] = tc.batch_size;
  t["max_epochs"] = tc.max_epochs;
  t["patience"] = tc.patience;
  t["lr_decay_factor"] = tc.lr_decay_factor;
  t["lr_patience"] = tc.lr_patience;
  t["val_fraction"] = tc.val_fraction;
  t["improvement_threshold"] = tc.improvement_threshold;
  j["training"] = t;
  Json c;
  c["score"] = score_variant_name(conformal.kind.variant);
  c["nll_epsilon"] = conformal.kind.nll_epsilon;
  c["alpha"] = conformal.alpha;
  c["recalibration_n"] = conformal.recalibration_n;
  j["conformal"] = c;
  Json s;
  s["family"] = candidate_family_name(search.search.family);
  s["count"] = search.search.resolution_or_count;
  s["max_tv_from_baseline"] = search.search.max_tv_from_baseline
                                  ? Json(*search.search.max_tv_from_baseline)
                                  : Json();
  s["worst_case_resolution"] = search.worst_case_resolution;
  j["search"] = s;
  Json e;
  e["n_test"] = evaluation.n_test;
  e["n_coverage_test"] = evaluation.n_coverage_test;
  e["n_bound"] = evaluation.n_bound;
  e["n_seeds"] = evaluation.n_seeds;
  j["evaluation"] = e;
  Json sh;
  sh["n_records"] = shift.n_records;
  sh["max_tv"] = shift.max_tv;
  sh["steps"] = shift.steps;
  sh["directions"] = shift.directions;
  sh["n_eval"] = shift.n_eval;
  sh["n_cal_sim"] = shift.n_cal_sim;
  j["shift"] = sh;
  return j;
}

std::string RunConfig::fingerprint() const { return fingerprint_of(to_json()); }

RunConfig default_config() {
  RunConfig cfg;
  cfg.scenario = reference_scenario();
  Mat base(3, 3);
  base << 0.6, 0.2, 0.2,
          0.2, 0.6, 0.2,
          0.2, 0.2, 0.6;
  cfg.data.baseline = SignalingPolicy(base, "baseline");
  cfg.conformal.kind.variant = ScoreVariant::kNll;
  cfg.search.search.family = CandidateFamily::kRandomSparse;
  cfg.search.search.resolution_or_count = 200;
  return cfg;
}

RunConfig config_from_json(const Json& j, const std::string& base_dir) {
  check_keys(j,
             {"seed", "scenario", "scenario_file", "receiver", "data",
              "training", "conformal", "search", "evaluation", "shift",
              "out_dir"},
             "root");
  RunConfig cfg = default_config();
  read_opt(j, "seed", cfg.seed, "root");
  read_opt(j, "out_dir", cfg.out_dir, "root");
  require(!(j.contains("scenario") && j.contains("scenario_file")),
          ErrorKind::kConfig, "give either scenario or scenario_file");
  bool new_scenario = false;
  if (j.contains("scenario")) {
    cfg.scenario = scenario_from_json(j["scenario"]);
    new_scenario = true;
  } else if (j.contains("scenario_file")) {
    std::filesystem::path p = j["scenario_file"].get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    require(std::filesystem::exists(p), ErrorKind::kConfig,
            "scenario file '" + p.string() + "' does not exist");
    cfg.scenario = scenario_from_json(read_json_file(p.string()));
    new_scenario = true;
  }
  if (new_scenario && (cfg.data.baseline.n_states() != cfg.scenario.n_states ||
                       cfg.data.baseline.n_signals() != cfg.scenario.n_signals)) {
    cfg.data.baseline =
        default_baseline(cfg.scenario.n_states, cfg.scenario.n_signals);
  }

  if (j.contains("receiver")) {
    const Json& r = j["receiver"];
    check_keys(r, {"kind", "deviation", "temper_exponent", "noise_temperature",
                   "table"},
               "receiver");
    std::string kind = belief_kind_name(cfg.receiver.kind);
    read_opt(r, "kind", kind, "receiver");
    cfg.receiver.kind = parse_belief_kind(kind);
    read_opt(r, "deviation", cfg.receiver.deviation, "receiver");
    read_opt(r, "temper_exponent", cfg.receiver.temper_exponent, "receiver");
    read_opt(r, "noise_temperature", cfg.receiver.noise_temperature,
             "receiver");
    if (r.contains("table")) {
      std::vector<Categorical> rows;
      for (const auto& row : r["table"]) {
        rows.emplace_back(vector_from_json(row, "receiver.table"));
      }
      cfg.receiver.table = std::move(rows);
    }
  }
  if (j.contains("data")) {
    const Json& d = j["data"];
    check_keys(d, {"n_policies", "n_per_policy", "calibration_fraction",
                   "baseline_policy"},
               "data");
    read_opt(d, "n_policies", cfg.data.n_policies, "data");
    read_opt(d, "n_per_policy", cfg.data.n_per_policy, "data");
    read_opt(d, "calibration_fraction", cfg.data.calibration_fraction, "data");
    if (d.contains("baseline_policy")) {
      cfg.data.baseline = SignalingPolicy(
          matrix_from_json(d["baseline_policy"], "data.baseline_policy"),
          "baseline");
    }
  }
  if (j.contains("training")) {
    const Json& t = j["training"];
    check_keys(t, {"hidden", "dropout", "l2_coeff", "learning_rate",
                   "batch_size", "max_epochs", "patience", "lr_decay_factor",
                   "lr_patience", "val_fraction", "improvement_threshold"},
               "training");
    TrainConfig& tc = cfg.training.config;
    read_opt(t, "hidden", cfg.training.hidden, "training");
    read_opt(t, "dropout", cfg.training.dropout, "training");
    read_opt(t, "l2_coeff", tc.l2_coeff, "training");
    read_opt(t, "learning_rate", tc.learning_rate, "training");
    read_opt(t, "batch_size", tc.batch_size, "training");
    read_opt(t, "max_epochs", tc.max_epochs, "training");
    read_opt(t, "patience", tc.patience, "training");
    read_opt(t, "lr_decay_factor", tc.lr_decay_factor, "training");
    read_opt(t, "lr_patience", tc.lr_patience, "training");
    read_opt(t, "val_fraction", tc.val_fraction, "training");
    read_opt(t, "improvement_threshold", tc.improvement_threshold, "training");
  }
  if (j.contains("conformal")) {
    const Json& c = j["conformal"];
    check_keys(c, {"score", "nll_epsilon", "alpha", "recalibration_n"},
               "conformal");
    std::string score = score_variant_name(cfg.conformal.kind.variant);
    read_opt(c, "score", score, "conformal");
    cfg.conformal.kind.variant = parse_score_variant(score);
    read_opt(c, "nll_epsilon", cfg.conformal.kind.nll_epsilon, "conformal");
    read_opt(c, "alpha", cfg.conformal.alpha, "conformal");
    read_opt(c, "recalibration_n", cfg.conformal.recalibration_n, "conformal");
  }
  if (j.contains("search")) {
    const Json& s = j["search"];
    check_keys(s, {"family", "count", "max_tv_from_baseline",
                   "worst_case_resolution"},
               "search");
    std::string family = candidate_family_name(cfg.search.search.family);
    read_opt(s, "family", family, "search");
    cfg.search.search.family = parse_candidate_family(family);
    read_opt(s, "count", cfg.search.search.resolution_or_count, "search");
    if (s.contains("max_tv_from_baseline")) {
      if (s["max_tv_from_baseline"].is_null()) {
        cfg.search.search.max_tv_from_baseline.reset();
      } else {
        double v = 0.0;
        read_opt(s, "max_tv_from_baseline", v, "search");
        cfg.search.search.max_tv_from_baseline = v;
      }
    }
    read_opt(s, "worst_case_resolution", cfg.search.worst_case_resolution,
             "search");
  }
  if (j.contains("evaluation")) {
    const Json& e = j["evaluation"];
    check_keys(e, {"n_test", "n_coverage_test", "n_bound", "n_seeds"},
               "evaluation");
    read_opt(e, "n_test", cfg.evaluation.n_test, "evaluation");
    read_opt(e, "n_coverage_test", cfg.evaluation.n_coverage_test,
             "evaluation");
    read_opt(e, "n_bound", cfg.evaluation.n_bound, "evaluation");
    read_opt(e, "n_seeds", cfg.evaluation.n_seeds, "evaluation");
  }
  if (j.contains("shift")) {
    const Json& s = j["shift"];
    check_keys(s, {"n_records", "max_tv", "steps", "directions", "n_eval",
                   "n_cal_sim"},
               "shift");
    read_opt(s, "n_records", cfg.shift.n_records, "shift");
    read_opt(s, "max_tv", cfg.shift.max_tv, "shift");
    read_opt(s, "steps", cfg.shift.steps, "shift");
    read_opt(s, "directions", cfg.shift.directions, "shift");
    read_opt(s, "n_eval", cfg.shift.n_eval, "shift");
    read_opt(s, "n_cal_sim", cfg.shift.n_cal_sim, "shift");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  require(std::filesystem::exists(path), ErrorKind::kConfig,
          "config file '" + path + "' does not exist");
  const std::string dir =
      std::filesystem::path(path).parent_path().string();
  return config_from_json(read_json_file(path), dir.empty() ? "." : dir);
}

BeliefFunction make_receiver(const RunConfig& cfg) {
  const ReceiverSettings& r = cfg.receiver;
  if (r.kind == BeliefKind::kTabular) {
    return make_tabular_belief(cfg.scenario, *r.table, r.noise_temperature);
  }
  return make_belief_function(r.kind, cfg.scenario, r.deviation,
                              derive_seed(cfg.seed, "receiver", 0),
                              r.temper_exponent, r.noise_temperature);
}

std::vector<SignalingPolicy> data_policies(const RunConfig& cfg,
                                           std::uint64_t replicate) {
  std::vector<SignalingPolicy> out;
  SignalingPolicy base = cfg.data.baseline;
  base.set_id("baseline");
  out.push_back(std::move(base));
  Rng rng = make_rng(cfg.seed, "data-policies", replicate);
  for (int k = 1; k < cfg.data.n_policies; ++k) {
    Mat m(cfg.scenario.n_states, cfg.scenario.n_signals);
    for (int x = 0; x < cfg.scenario.n_states; ++x) {
      m.row(x) = uniform_simplex(cfg.scenario.n_signals, rng).transpose();
    }
    out.emplace_back(std::move(m), "d" + std::to_string(k));
  }
  return out;
}

Dataset generate_stage(const RunConfig& cfg, const BeliefFunction& receiver,
                       std::uint64_t replicate) {
  Rng rng = make_rng(cfg.seed, "data", replicate);
  Dataset d = generate_dataset(cfg.scenario, data_policies(cfg, replicate),
                               cfg.data.n_per_policy, receiver, rng);
  d.scenario_ref = cfg.fingerprint();
  return d;
}

Split split_stage(const RunConfig& cfg, const Dataset& data,
                  std::uint64_t replicate) {
  const int n = static_cast<int>(data.records.size());
  const int n_cal =
      static_cast<int>(std::lround(cfg.data.calibration_fraction * n));
  require(n_cal >= 1 && n - n_cal >= 2, ErrorKind::kInvalidArgument,
          "dataset too small for the train/calibration split");
  Rng rng = make_rng(cfg.seed, "split", replicate);
  const std::vector<int> order = permutation(n, rng);
  Split out;
  out.train.policies = data.policies;
  out.train.scenario_ref = data.scenario_ref;
  for (int i = 0; i < n; ++i) {
    const auto& r = data.records[order[i]];
    if (i < n_cal) {
      out.calibration.push_back(r);
    } else {
      out.train.records.push_back(r);
    }
  }
  return out;
}

Predictor train_stage(const RunConfig& cfg, const Dataset& train,
                      std::uint64_t replicate, TrainHistory* history) {
  TrainConfig tc = cfg.training.config;
  tc.seed = derive_seed(cfg.seed, "train", replicate);
  Rng rng(tc.seed);
  return rbp::train(train, cfg.scenario, cfg.training.hidden,
                    cfg.training.dropout, tc, rng, history);
}

ConformalCalibration calibrate_stage(
    const RunConfig& cfg, const Predictor& p,
    const std::vector<InteractionRecord>& calibration,
    const PolicyRegistry& registry) {
  const PolicyResolver resolve =
      [&registry](const std::string& id) -> const SignalingPolicy& {
    return registry.at(id);
  };
  return calibrate(cfg.conformal.kind,
                   record_scores(p, cfg.scenario, cfg.conformal.kind,
                                 calibration, resolve),
                   cfg.conformal.alpha);
}

std::vector<SignalingPolicy> candidate_stage(const RunConfig& cfg,
                                             std::uint64_t replicate) {
  PolicySearchConfig sc = cfg.search.search;
  sc.seed = derive_seed(cfg.seed, "candidates", replicate);
  return generate_candidates(cfg.scenario, sc, cfg.data.baseline);
}

SeedOutcome evaluate_stage(const RunConfig& cfg,
                           const BeliefFunction& receiver,
                           const std::vector<SignalingPolicy>& candidates,
                           const Predictor& p,
                           const ConformalCalibration& cal,
                           std::uint64_t replicate) {
  const Scenario& sc = cfg.scenario;
  SeedOutcome out;
  out.replicate = replicate;
  out.threshold = cal.threshold;
  Rng unused(0);
  out.methods[0] = run_baseline(Method::kOracle, sc, candidates, receiver,
                                unused, cfg.search.worst_case_resolution);
  out.methods[1] = run_conformal_robust(sc, candidates, p, cal, receiver);
  out.methods[2] = run_baseline(Method::kWorstCase, sc, candidates, receiver,
                                unused, cfg.search.worst_case_resolution);
  out.methods[3] = run_baseline(Method::kNaive, sc, candidates, receiver,
                                unused, cfg.search.worst_case_resolution);
  // Common random numbers across methods.
  for (auto& m : out.methods) {
    Rng rng = make_rng(cfg.seed, "test", replicate);
    m.test_utility =
        simulate_utility(sc, m.chosen_policy, receiver, cfg.evaluation.n_test,
                         rng)
            .mean;
  }

  const SignalingPolicy& chosen = out.methods[1].chosen_policy;
  Rng cov_rng = make_rng(cfg.seed, "coverage", replicate);
  const auto sel_records = simulate_records(
      sc, chosen, receiver, cfg.evaluation.n_coverage_test, cov_rng);
  out.selected_coverage = evaluate_coverage(p, sc, cal, sel_records,
                                            single_policy_resolver(chosen));
  out.methods[1].coverage = out.selected_coverage.rate;

  Rng base_rng = make_rng(cfg.seed, "baseline-coverage", replicate);
  const auto base_records =
      simulate_records(sc, cfg.data.baseline, receiver,
                       cfg.evaluation.n_coverage_test, base_rng);
  out.baseline_coverage = evaluate_coverage(
      p, sc, cal, base_records, single_policy_resolver(cfg.data.baseline));

  Rng recal_rng = make_rng(cfg.seed, "recalibration", replicate);
  const ConformalCalibration recal = recalibrate_for_policy(
      p, sc, chosen, receiver, cfg.conformal.recalibration_n, cal.alpha,
      cal.kind, recal_rng);
  out.recalibrated_threshold = recal.threshold;
  out.recalibrated_coverage = evaluate_coverage(
      p, sc, recal, sel_records, single_policy_resolver(chosen));

  Rng bound_rng = make_rng(cfg.seed, "bound", replicate);
  out.bound = verify_utility_bound(sc, chosen, p, cal, receiver,
                                   cfg.evaluation.n_bound, bound_rng);
  return out;
}

SeedOutcome run_replicate(const RunConfig& cfg, const BeliefFunction& receiver,
                          std::uint64_t replicate) {
  const Dataset data = generate_stage(cfg, receiver, replicate);
  const Split split = split_stage(cfg, data, replicate);
  TrainHistory hist;
  const Predictor p = train_stage(cfg, split.train, replicate, &hist);
  const ConformalCalibration cal =
      calibrate_stage(cfg, p, split.calibration, data.policies);
  SeedOutcome out = evaluate_stage(cfg, receiver, candidate_stage(cfg, replicate),
                                   p, cal, replicate);
  out.best_epoch = hist.best_epoch;
  return out;
}

UtilitiesSummary reproduce_utilities(const RunConfig& cfg, int n_seeds) {
  require(n_seeds >= 1, ErrorKind::kInvalidArgument, "seeds must be >= 1");
  cfg.validate();
  const BeliefFunction receiver = make_receiver(cfg);
  UtilitiesSummary s;
  for (int r = 0; r < n_seeds; ++r) {
    s.seeds.push_back(run_replicate(cfg, receiver, r));
  }
  for (int m = 0; m < 4; ++m) {
    std::vector<double> exact, test;
    for (const auto& o : s.seeds) {
      exact.push_back(o.methods[m].true_expected_utility);
      test.push_back(*o.methods[m].test_utility);
    }
    s.methods[m] = {static_cast<Method>(m), mean_of(exact), sample_std(exact),
                    mean_of(test), sample_std(test)};
  }
  s.means_ordered = s.methods[0].mean > s.methods[1].mean &&
                    s.methods[1].mean > s.methods[2].mean &&
                    s.methods[2].mean > s.methods[3].mean;
  for (const auto& o : s.seeds) {
    for (int k = 0; k < 3; ++k) {
      if (o.methods[k].true_expected_utility >
          o.methods[k + 1].true_expected_utility) {
        ++s.pair_wins[k];
      }
    }
  }
  return s;
}

ShiftStudy shift_study(const RunConfig& cfg_in, std::uint64_t replicate) {
  RunConfig cfg = cfg_in;
  cfg.data.n_policies = 1;
  cfg.data.n_per_policy = cfg.shift.n_records;
  cfg.validate();
  const Scenario& sc = cfg.scenario;
  const BeliefFunction receiver = make_receiver(cfg);
  const Dataset data = generate_stage(cfg, receiver, replicate);
  const Split split = split_stage(cfg, data, replicate);
  const Predictor p = train_stage(cfg, split.train, replicate);
  const ConformalCalibration cal =
      calibrate_stage(cfg, p, split.calibration, data.policies);
  const SignalingPolicy& base = cfg.data.baseline;

  Rng dir_rng = make_rng(cfg.seed, "shift-directions", replicate);
  std::vector<SignalingPolicy> dirs;
  for (int i = 0; i < cfg.shift.directions; ++i) {
    Mat m(sc.n_states, sc.n_signals);
    for (int x = 0; x < sc.n_states; ++x) {
      m.row(x) = uniform_simplex(sc.n_signals, dir_rng).transpose();
    }
    dirs.emplace_back(std::move(m));
  }

  ShiftStudy study;
  study.replicate = replicate;
  study.baseline_threshold = cal.threshold;
  int k = 0;
  for (int step = 0; step < cfg.shift.steps; ++step) {
    const double target = cfg.shift.max_tv * step / (cfg.shift.steps - 1);
    for (int i = 0; i < cfg.shift.directions; ++i) {
      if (step == 0 && i > 0) break;  // every direction starts at the baseline
      const double full = delta_tv(sc, dirs[i], base);
      const double w = full > 0.0 ? std::min(1.0, target / full) : 0.0;
      const std::string id =
          step == 0 ? "baseline"
                    : "dir" + std::to_string(i) + "-step" + std::to_string(step);
      const SignalingPolicy pi(
          Mat((1.0 - w) * base.probs() + w * dirs[i].probs()), id);
      Rng cal_rng = make_rng(cfg.seed, "shift-cal", k);
      Rng cov_rng = make_rng(cfg.seed, "shift-coverage", k);
      ++k;
      ShiftRow row;
      row.candidate_id = id;
      row.target_tv = target;
      row.measures = make_shift_measures(
          cal.alpha, delta_tv(sc, pi, base), delta_mech_model(sc, p, pi, base),
          delta_cal_sim(sc, p, cal.kind, pi, base, receiver,
                        cfg.shift.n_cal_sim, cal_rng));
      const auto recs =
          simulate_records(sc, pi, receiver, cfg.shift.n_eval, cov_rng);
      const CoverageReport cov =
          evaluate_coverage(p, sc, cal, recs, single_policy_resolver(pi));
      row.coverage = cov.rate;
      row.coverage_se = std::sqrt(cov.rate * (1.0 - cov.rate) / cov.n);
      row.mean_set_size = cov.mean_set_size;
      study.rows.push_back(row);
    }
  }
  return study;
}

Json seed_outcome_json(const SeedOutcome& o) {
  Json j;
  j["replicate"] = o.replicate;
  j["threshold"] = o.threshold;
  j["best_epoch"] = o.best_epoch;
  Json ms = Json::array();
  for (const auto& m : o.methods) {
    Json mj;
    mj["method"] = method_name(m.method);
    mj["chosen_index"] = m.chosen_index;
    mj["chosen_policy"] = policy_to_json(m.chosen_policy);
    mj["robust_value"] = m.robust_value;
    mj["true_expected_utility"] = m.true_expected_utility;
    mj["test_utility"] = m.test_utility ? Json(*m.test_utility) : Json();
    mj["coverage"] = m.coverage ? Json(*m.coverage) : Json();
    ms.push_back(std::move(mj));
  }
  j["methods"] = ms;
  auto cov = [](const CoverageReport& c) {
    Json cj;
    cj["rate"] = c.rate;
    cj["count"] = c.count;
    cj["n"] = c.n;
    cj["mean_set_size"] = c.mean_set_size;
    return cj;
  };
  j["baseline_coverage"] = cov(o.baseline_coverage);
  j["selected_coverage"] = cov(o.selected_coverage);
  j["recalibrated_coverage"] = cov(o.recalibrated_coverage);
  j["recalibrated_threshold"] = o.recalibrated_threshold;
  Json b;
  b["lhs"] = o.bound.lhs;
  b["lhs_std_error"] = o.bound.lhs_std_error;
  b["robust_value"] = o.bound.robust_value;
  b["penalty"] = o.bound.penalty;
  b["rhs"] = o.bound.rhs;
  b["slack"] = o.bound.slack;
  b["holds"] = o.bound.holds;
  j["utility_bound"] = b;
  return j;
}

namespace {

std::string meta_line(const char* table, const ArtifactMeta& meta) {
  std::ostringstream out;
  out << "# " << table << " seed=" << meta.seed
      << " fingerprint=" << meta.fingerprint << "\n";
  return out.str();
}

}  // namespace

std::string utilities_per_seed_csv(const UtilitiesSummary& s,
                                   const ArtifactMeta& meta) {
  std::ostringstream out;
  out << meta_line("rbp-utilities-per-seed", meta);
  out << "replicate,method,candidate,true_expected_utility,test_utility,"
         "robust_value\n";
  for (const auto& o : s.seeds) {
    for (const auto& m : o.methods) {
      out << o.replicate << ',' << method_name(m.method) << ','
          << m.chosen_index << ',' << fmt(m.true_expected_utility) << ','
          << fmt(*m.test_utility) << ',' << fmt(m.robust_value) << '\n';
    }
  }
  out << "replicate,threshold,baseline_coverage,selected_coverage,"
         "recalibrated_coverage,bound_lhs,bound_rhs,bound_holds\n";
  for (const auto& o : s.seeds) {
    out << o.replicate << ',' << fmt(o.threshold) << ','
        << fmt(o.baseline_coverage.rate) << ','
        << fmt(o.selected_coverage.rate) << ','
        << fmt(o.recalibrated_coverage.rate) << ',' << fmt(o.bound.lhs) << ','
        << fmt(o.bound.rhs) << ',' << (o.bound.holds ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string utilities_summary_csv(const UtilitiesSummary& s,
                                  const ArtifactMeta& meta) {
  std::ostringstream out;
  out << meta_line("rbp-utilities-summary", meta);
  const bool one = s.seeds.size() < 2;
  out << (one ? "method,seeds,mean,test_mean\n"
              : "method,seeds,mean,std,test_mean,test_std\n");
  for (const auto& m : s.methods) {
    out << method_name(m.method) << ',' << s.seeds.size() << ','
        << fmt(m.mean);
    if (!one) out << ',' << fmt(m.std);
    out << ',' << fmt(m.test_mean);
    if (!one) out << ',' << fmt(m.test_std);
    out << '\n';
  }
  out << "# ordered=" << (s.means_ordered ? 1 : 0)
      << " pair_wins=" << s.pair_wins[0] << '/' << s.pair_wins[1] << '/'
      << s.pair_wins[2] << '\n';
  return out.str();
}

Json utilities_summary_json(const UtilitiesSummary& s,
                            const ArtifactMeta& meta) {
  Json j;
  j["format"] = "rbp-utilities-summary";
  j["version"] = 1;
  j["seed"] = meta.seed;
  j["fingerprint"] = meta.fingerprint;
  j["n_seeds"] = s.seeds.size();
  Json ms = Json::array();
  for (const auto& m : s.methods) {
    Json mj;
    mj["method"] = method_name(m.method);
    mj["mean"] = m.mean;
    if (s.seeds.size() > 1) mj["std"] = m.std;
    mj["test_mean"] = m.test_mean;
    if (s.seeds.size() > 1) mj["test_std"] = m.test_std;
    ms.push_back(std::move(mj));
  }
  j["methods"] = ms;
  j["means_ordered"] = s.means_ordered;
  j["pair_wins"] = {{"oracle>conformal-robust", s.pair_wins[0]},
                    {"conformal-robust>worst-case", s.pair_wins[1]},
                    {"worst-case>naive", s.pair_wins[2]}};
  Json seeds = Json::array();
  for (const auto& o : s.seeds) seeds.push_back(seed_outcome_json(o));
  j["seeds"] = seeds;
  return j;
}

std::string shift_study_csv(const std::vector<ShiftStudy>& studies,
                            const ArtifactMeta& meta) {
  std::ostringstream out;
  out << meta_line("rbp-shift-study", meta);
  out << "replicate,candidate_id,target_tv,delta_tv,delta_mech,delta_cal,"
         "bound,coverage,coverage_se,mean_set_size\n";
  for (const auto& s : studies) {
    for (const auto& r : s.rows) {
      out << s.replicate << ',' << r.candidate_id << ',' << fmt(r.target_tv)
          << ',' << fmt(r.measures.delta_tv) << ','
          << fmt(r.measures.delta_mech) << ',' << fmt(r.measures.delta_cal)
          << ',' << fmt(r.measures.coverage_lower_bound) << ','
          << fmt(r.coverage) << ',' << fmt(r.coverage_se) << ','
          << fmt(r.mean_set_size) << '\n';
    }
  }
  return out.str();
}

}  // namespace rbp
