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

// rbp: experiment driver.
//
//   rbp generate|train|calibrate|optimize|evaluate|shift-study|reproduce
//       [--config PATH] [--seed INT] [--out DIR] [--experiment NAME]
//       [--seeds INT]
//
// Output directory: --out, else $RBP_OUT_DIR, else the config's out_dir,
// else ./rbp_out. Failures exit nonzero and print one JSON error record on
// stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rbp/error.hpp"
#include "rbp/experiment.hpp"
#include "rbp/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitError = 2;
constexpr int kExitUsage = 64;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string experiment = "utilities";
  std::optional<int> seeds;
};

struct Context {
  rbp::RunConfig cfg;
  rbp::ArtifactMeta meta;
  fs::path dir;

  fs::path at(const char* name) const { return dir / name; }
};

Context make_context(const Options& opt) {
  Context ctx;
  ctx.cfg = opt.config.empty() ? rbp::default_config()
                               : rbp::load_config(opt.config);
  if (opt.seed) ctx.cfg.seed = *opt.seed;
  ctx.cfg.validate();
  std::string out = opt.out;
  if (out.empty()) {
    const char* env = std::getenv("RBP_OUT_DIR");
    if (env != nullptr && *env != '\0') out = env;
  }
  if (out.empty()) out = ctx.cfg.out_dir;
  if (out.empty()) out = "rbp_out";
  ctx.dir = out;
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  rbp::require(!ec && fs::is_directory(ctx.dir), rbp::ErrorKind::kIo,
               "cannot create output directory '" + out + "'");
  ctx.meta = ctx.cfg.meta();
  return ctx;
}

// Refuses artifacts written under another config or seed.
void check_meta(const rbp::ArtifactMeta& found, const Context& ctx,
                const fs::path& path) {
  rbp::require(found.fingerprint == ctx.meta.fingerprint &&
                   found.seed == ctx.meta.seed,
               rbp::ErrorKind::kFingerprintMismatch,
               "artifact '" + path.string() + "' was written with seed " +
                   std::to_string(found.seed) + " fingerprint " +
                   found.fingerprint + ", current run has seed " +
                   std::to_string(ctx.meta.seed) + " fingerprint " +
                   ctx.meta.fingerprint);
}

rbp::Json load_artifact(const Context& ctx, const char* name) {
  const fs::path p = ctx.at(name);
  rbp::require(fs::exists(p), rbp::ErrorKind::kIo,
               "missing upstream artifact '" + p.string() + "'");
  rbp::Json j = rbp::read_json_file(p.string());
  check_meta(rbp::meta_from_json(j), ctx, p);
  return j;
}

rbp::Dataset load_dataset(const Context& ctx) {
  const fs::path p = ctx.at("dataset.csv");
  rbp::require(fs::exists(p), rbp::ErrorKind::kIo,
               "missing upstream artifact '" + p.string() + "'");
  rbp::ArtifactMeta meta;
  rbp::Dataset d;
  d.records = rbp::records_from_csv(rbp::read_text_file(p.string()), &meta);
  check_meta(meta, ctx, p);
  d.policies = rbp::registry_from_json(load_artifact(ctx, "policies.json"));
  d.scenario_ref = ctx.meta.fingerprint;
  d.validate(ctx.cfg.scenario);
  return d;
}

rbp::Json stamped(const char* format, const Context& ctx) {
  rbp::Json j;
  j["format"] = format;
  j["version"] = 1;
  j["seed"] = ctx.meta.seed;
  j["fingerprint"] = ctx.meta.fingerprint;
  return j;
}

void report(const std::string& verb, const Context& ctx) {
  std::cout << verb << ": wrote " << ctx.dir.string() << " (seed "
            << ctx.meta.seed << ", fingerprint " << ctx.meta.fingerprint
            << ")\n";
}

void cmd_generate(const Context& ctx) {
  const rbp::BeliefFunction receiver = rbp::make_receiver(ctx.cfg);
  const rbp::Dataset d = rbp::generate_stage(ctx.cfg, receiver, 0);
  rbp::write_text_file(ctx.at("dataset.csv").string(),
                       rbp::dataset_to_csv(d, ctx.meta));
  rbp::write_json_file(ctx.at("policies.json").string(),
                       rbp::registry_to_json(d.policies, ctx.meta));
  rbp::Json r = stamped("rbp-receiver", ctx);
  r["belief"] = rbp::belief_to_json(receiver);
  rbp::write_json_file(ctx.at("receiver.json").string(), r);
  report("generate", ctx);
}

void cmd_train(const Context& ctx) {
  const rbp::Dataset d = load_dataset(ctx);
  const rbp::Split split = rbp::split_stage(ctx.cfg, d, 0);
  rbp::TrainHistory hist;
  const rbp::Predictor p = rbp::train_stage(ctx.cfg, split.train, 0, &hist);
  rbp::Json j = rbp::predictor_to_json(p, ctx.meta);
  j["best_epoch"] = hist.best_epoch;
  j["best_val_loss"] = hist.best_val_loss;
  rbp::write_json_file(ctx.at("predictor.json").string(), j);
  std::string csv = "# rbp-training-history seed=" +
                    std::to_string(ctx.meta.seed) +
                    " fingerprint=" + ctx.meta.fingerprint +
                    "\nepoch,train_loss,val_loss,learning_rate\n";
  for (const auto& e : hist.epochs) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.8g\n", e.epoch,
                  e.train_loss, e.val_loss, e.learning_rate);
    csv += buf;
  }
  rbp::write_text_file(ctx.at("training_history.csv").string(), csv);
  report("train", ctx);
}

void cmd_calibrate(const Context& ctx) {
  const rbp::Dataset d = load_dataset(ctx);
  const rbp::Predictor p =
      rbp::predictor_from_json(load_artifact(ctx, "predictor.json"));
  const rbp::Split split = rbp::split_stage(ctx.cfg, d, 0);
  const rbp::ConformalCalibration cal =
      rbp::calibrate_stage(ctx.cfg, p, split.calibration, d.policies);
  rbp::write_json_file(ctx.at("calibration.json").string(),
                       rbp::calibration_to_json(cal, ctx.meta));
  report("calibrate", ctx);
}

void cmd_optimize(const Context& ctx) {
  const rbp::Predictor p =
      rbp::predictor_from_json(load_artifact(ctx, "predictor.json"));
  const rbp::ConformalCalibration cal =
      rbp::calibration_from_json(load_artifact(ctx, "calibration.json"));
  const auto candidates = rbp::candidate_stage(ctx.cfg, 0);
  const rbp::OptimizeResult best =
      rbp::optimize_policy(ctx.cfg.scenario, candidates, p, cal);
  rbp::Json c = stamped("rbp-candidates", ctx);
  rbp::Json list = rbp::Json::array();
  for (const auto& k : candidates) list.push_back(rbp::policy_to_json(k));
  c["candidates"] = list;
  rbp::write_json_file(ctx.at("candidates.json").string(), c);
  rbp::Json o = stamped("rbp-optimize", ctx);
  o["chosen_index"] = best.index;
  o["chosen_policy"] = rbp::policy_to_json(best.policy);
  o["robust_value"] = best.value;
  rbp::write_json_file(ctx.at("optimize.json").string(), o);
  report("optimize", ctx);
}

void cmd_evaluate(const Context& ctx) {
  const rbp::Predictor p =
      rbp::predictor_from_json(load_artifact(ctx, "predictor.json"));
  const rbp::ConformalCalibration cal =
      rbp::calibration_from_json(load_artifact(ctx, "calibration.json"));
  const rbp::Json opt = load_artifact(ctx, "optimize.json");
  const rbp::Json cand = load_artifact(ctx, "candidates.json");
  std::vector<rbp::SignalingPolicy> candidates;
  for (const auto& k : cand.at("candidates")) {
    candidates.push_back(rbp::policy_from_json(k));
  }
  const rbp::BeliefFunction receiver = rbp::make_receiver(ctx.cfg);
  const rbp::SeedOutcome out =
      rbp::evaluate_stage(ctx.cfg, receiver, candidates, p, cal, 0);
  rbp::require(out.methods[1].chosen_index == opt.at("chosen_index").get<int>(),
               rbp::ErrorKind::kFingerprintMismatch,
               "optimize.json disagrees with the recomputed robust choice");
  rbp::Json j = stamped("rbp-evaluation", ctx);
  j["outcome"] = rbp::seed_outcome_json(out);
  rbp::write_json_file(ctx.at("evaluation.json").string(), j);
  const auto& cr = out.methods[1];
  std::printf("conformal-robust: candidate %d, true utility %.4f, coverage "
              "%.4f, bound lhs %.4f >= rhs %.4f: %s\n",
              cr.chosen_index, cr.true_expected_utility, *cr.coverage,
              out.bound.lhs, out.bound.rhs, out.bound.holds ? "yes" : "no");
  report("evaluate", ctx);
}

void run_shift(const Context& ctx, int seeds) {
  std::vector<rbp::ShiftStudy> studies;
  for (int r = 0; r < seeds; ++r) studies.push_back(rbp::shift_study(ctx.cfg, r));
  rbp::write_text_file(ctx.at("shift_study.csv").string(),
                       rbp::shift_study_csv(studies, ctx.meta));
}

void cmd_shift_study(const Context& ctx, const Options& opt) {
  run_shift(ctx, opt.seeds.value_or(1));
  report("shift-study", ctx);
}

void cmd_reproduce(const Context& ctx, const Options& opt) {
  if (opt.experiment == "utilities") {
    const int seeds = opt.seeds.value_or(ctx.cfg.evaluation.n_seeds);
    const rbp::UtilitiesSummary s = rbp::reproduce_utilities(ctx.cfg, seeds);
    rbp::write_text_file(ctx.at("utilities_per_seed.csv").string(),
                         rbp::utilities_per_seed_csv(s, ctx.meta));
    const std::string table = rbp::utilities_summary_csv(s, ctx.meta);
    rbp::write_text_file(ctx.at("utilities_summary.csv").string(), table);
    rbp::write_json_file(ctx.at("summary.json").string(),
                         rbp::utilities_summary_json(s, ctx.meta));
    std::cout << table;
  } else if (opt.experiment == "coverage-shift") {
    run_shift(ctx, opt.seeds.value_or(1));
    std::cout << rbp::read_text_file(ctx.at("shift_study.csv").string());
  } else {
    rbp::fail(rbp::ErrorKind::kInvalidArgument,
              "unknown experiment '" + opt.experiment +
                  "' (expected utilities or coverage-shift)");
  }
  report("reproduce", ctx);
}

void print_error(const std::string& verb, const std::string& kind,
                 const std::string& message) {
  rbp::Json j;
  j["error"] = {{"verb", verb}, {"kind", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust persuasion experiment driver"};
  app.require_subcommand(1);
  Options opt;
  const char* verbs[] = {"generate", "train",       "calibrate", "optimize",
                         "evaluate", "shift-study", "reproduce"};
  for (const char* verb : verbs) {
    CLI::App* sub = app.add_subcommand(verb, std::string("run the ") + verb +
                                                 " stage");
    sub->add_option("--config", opt.config, "JSON run config");
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--experiment", opt.experiment,
                    "utilities or coverage-shift (reproduce)");
    sub->add_option("--seeds", opt.seeds, "number of replicates")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("", "usage", e.what());
    return kExitUsage;
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    const Context ctx = make_context(opt);
    if (verb == "generate") cmd_generate(ctx);
    else if (verb == "train") cmd_train(ctx);
    else if (verb == "calibrate") cmd_calibrate(ctx);
    else if (verb == "optimize") cmd_optimize(ctx);
    else if (verb == "evaluate") cmd_evaluate(ctx);
    else if (verb == "shift-study") cmd_shift_study(ctx, opt);
    else cmd_reproduce(ctx, opt);
  } catch (const rbp::Error& e) {
    print_error(verb, rbp::error_kind_name(e.kind()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    print_error(verb, "internal", e.what());
    return kExitError;
  }
  return 0;
}
