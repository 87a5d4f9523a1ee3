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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Usage: acceptance [criterion numbers...]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>
#include <string>
#include <vector>

#include "rbp/conformal.hpp"
#include "rbp/domain.hpp"
#include "rbp/error.hpp"
#include "rbp/experiment.hpp"
#include "rbp/io.hpp"
#include "rbp/neural.hpp"
#include "rbp/receiver.hpp"
#include "rbp/rng.hpp"
#include "rbp/robustopt.hpp"

namespace fs = std::filesystem;

namespace rbp {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double std_error_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1)) / std::sqrt(double(v.size()));
}

SignalingPolicy random_policy(const Scenario& sc, Rng& rng) {
  Mat m(sc.n_states, sc.n_signals);
  for (int x = 0; x < sc.n_states; ++x) {
    m.row(x) = uniform_simplex(sc.n_signals, rng).transpose();
  }
  return SignalingPolicy(m);
}

// The 20-seed replication feeds criteria 2, 3 and 5; run it once.
const UtilitiesSummary& replication() {
  static const UtilitiesSummary s = [] {
    const RunConfig cfg = load_config(std::string(RBP_CONFIG_DIR) +
                                      "/replication.json");
    return reproduce_utilities(cfg, 20);
  }();
  return s;
}

// Mean coverage over 100 calibration/test draws of sizes 500 and 5000 under
// a single policy, and how many trials reach 0.87.
std::pair<double, long> coverage_trials(const RunConfig& cfg,
                                        const SignalingPolicy& pi) {
  const BeliefFunction receiver = make_receiver(cfg);
  const Dataset data = generate_stage(cfg, receiver, 0);
  const Predictor p = train_stage(cfg, data, 0);
  Rng rng = make_rng(cfg.seed, "acceptance-coverage", 0);
  std::vector<double> cov;
  for (int t = 0; t < 100; ++t) {
    const auto cal_recs = simulate_records(cfg.scenario, pi, receiver, 500, rng);
    const auto test_recs =
        simulate_records(cfg.scenario, pi, receiver, 5000, rng);
    const auto resolve = single_policy_resolver(pi);
    const auto cal = calibrate(
        cfg.conformal.kind,
        record_scores(p, cfg.scenario, cfg.conformal.kind, cal_recs, resolve),
        0.1);
    cov.push_back(evaluate_coverage(p, cfg.scenario, cal, test_recs, resolve).rate);
  }
  return {mean_of(cov), std::count_if(cov.begin(), cov.end(),
                                      [](double c) { return c >= 0.87; })};
}

// Seeded scenario with 4 states, 12 observations, 6 signals and 4 actions.
// Its scores take a few hundred values with small masses, so the threshold
// never sits on a heavy tie.
Scenario rich_scenario() {
  Rng rng = make_rng(1, "acceptance-scenario", 0);
  Mat lik(4, 12);
  Mat rr(4, 4);
  Mat rs(4, 4);
  for (int x = 0; x < 4; ++x) {
    lik.row(x) = uniform_simplex(12, rng).transpose();
    for (int u = 0; u < 4; ++u) {
      rr(x, u) = 20 * uniform01(rng) - 10;
      rs(x, u) = 20 * uniform01(rng) - 10;
    }
  }
  return make_scenario(Categorical(uniform_simplex(4, rng)), lik, rr, rs, 6);
}

// 1. Split-conformal coverage on exchangeable single-policy data.
Verdict criterion1() {
  RunConfig cfg = default_config();
  cfg.scenario = rich_scenario();
  Rng rng = make_rng(1, "acceptance-scenario", 1);
  Mat pol(4, 6);
  for (int x = 0; x < 4; ++x) pol.row(x) = uniform_simplex(6, rng).transpose();
  cfg.data.baseline = SignalingPolicy(pol, "baseline");
  cfg.data.n_policies = 1;
  cfg.data.n_per_policy = 2000;
  const auto [m, above] = coverage_trials(cfg, cfg.data.baseline);

  // Same protocol on the three-state scenario, reported for reference.
  RunConfig t1 = default_config();
  t1.data.n_policies = 1;
  t1.data.n_per_policy = 2000;
  const double m_t1 = coverage_trials(t1, t1.data.baseline).first;

  return {m >= 0.88 && m <= 0.93 && above >= 95,
          "mean coverage " + fmt("%.4f", m) + " (band [0.88, 0.93]), " +
              std::to_string(above) +
              "/100 trials >= 0.87 (need 95); three-state scenario with tied "
              "scores: " + fmt("%.4f", m_t1)};
}

// 2. Utility ordering over 20 seeds.
Verdict criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const UtilitiesSummary& s = replication();
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  const double gap = s.methods[1].mean - s.methods[3].mean;
  const bool pairs = std::all_of(s.pair_wins.begin(), s.pair_wins.end(),
                                 [](int w) { return w >= 16; });
  std::ostringstream d;
  d << "means O/CR/WC/N " << fmt("%.2f", s.methods[0].mean) << '/'
    << fmt("%.2f", s.methods[1].mean) << '/' << fmt("%.2f", s.methods[2].mean)
    << '/' << fmt("%.2f", s.methods[3].mean) << ", ordered "
    << (s.means_ordered ? "yes" : "no") << ", pair wins " << s.pair_wins[0]
    << '/' << s.pair_wins[1] << '/' << s.pair_wins[2]
    << " of 20 (need 16 each), CR-N gap " << fmt("%.2f", gap)
    << " (need 2), " << fmt("%.0f", secs) << "s";
  return {s.means_ordered && pairs && gap >= 2.0 && secs < 900.0, d.str()};
}

// 3. Baseline coverage band and recalibration.
Verdict criterion3() {
  const UtilitiesSummary& s = replication();
  std::vector<double> base;
  int good = 0;
  for (const auto& o : s.seeds) {
    base.push_back(o.baseline_coverage.rate);
    good += o.recalibrated_coverage.rate >= o.selected_coverage.rate &&
            o.recalibrated_coverage.rate >= 0.90;
  }
  const double m = mean_of(base);
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  return {m >= 0.85 && m <= 0.95 && good >= 15,
          "baseline coverage mean " + fmt("%.4f", m) + " (range " +
              fmt("%.4f", *lo) + ".." + fmt("%.4f", *hi) +
              ", band [0.85, 0.95]); recalibration non-decreasing and >= 0.90 "
              "in " + std::to_string(good) + "/20 seeds (need 15)"};
}

// 4. Coverage under small policy shifts against the lower bound.
Verdict criterion4() {
  const RunConfig cfg = load_config(std::string(RBP_CONFIG_DIR) +
                                    "/replication.json");
  const ShiftStudy study = shift_study(cfg, 0);
  int points = 0;
  int above_bound = 0;
  int above_085 = 0;
  double min_cov = 1.0;
  for (const auto& r : study.rows) {
    if (r.measures.delta_tv > 0.05 + 1e-12) continue;
    ++points;
    above_bound +=
        r.coverage >= r.measures.coverage_lower_bound - 3 * r.coverage_se;
    above_085 += r.coverage >= 0.85;
    min_cov = std::min(min_cov, r.coverage);
  }
  return {points > 0 && above_bound == points && above_085 == points,
          std::to_string(points) + " grid points with TV <= 0.05; coverage >= "
              "bound - 3SE at " + std::to_string(above_bound) +
              ", >= 0.85 at " + std::to_string(above_085) +
              ", min coverage " + fmt("%.4f", min_cov)};
}

// 5. Robust utility lower bound.
Verdict criterion5() {
  const UtilitiesSummary& s = replication();
  int holds = 0;
  bool penalty_exact = true;
  double min_slack = 1e300;
  for (const auto& o : s.seeds) {
    holds += o.bound.holds;
    penalty_exact = penalty_exact && o.bound.penalty == 81.0;
    min_slack = std::min(min_slack, o.bound.slack);
  }
  const Scenario sc = reference_scenario();
  const bool arith = 0.1 * (sc.sender_max() - sc.sender_min()) == 81.0;
  return {holds == 20 && penalty_exact && arith,
          "bound holds in " + std::to_string(holds) + "/20 seeds, min slack " +
              fmt("%.2f", min_slack) + ", penalty " +
              (penalty_exact && arith ? "81 exactly" : "not 81")};
}

// 6. Exact quantities against brute-force enumeration.
Verdict criterion6() {
  const Scenario sc = reference_scenario();
  Rng rng = make_rng(1, "acceptance-oracle", 0);
  const Predictor p = init_predictor({encoding_size(sc), 16, 3}, 0.0, rng);
  const ScoreKind kind{ScoreVariant::kNll};
  const auto cal = calibrate(kind, {0.6, 0.9, 1.1, 1.3, 2.0}, 0.3);
  const SignalingPolicy ref = random_policy(sc, rng);
  double err_obj = 0.0;
  double err_tv = 0.0;
  double err_mech = 0.0;
  for (int t = 0; t < 50; ++t) {
    const SignalingPolicy pi = random_policy(sc, rng);
    double obj = 0.0;
    double tv = 0.0;
    double mech = 0.0;
    for (int y = 0; y < 3; ++y) {
      for (int s = 0; s < 3; ++s) {
        const Vec a = predict_proba(p, sc, y, s, pi);
        const Vec b = predict_proba(p, sc, y, s, ref);
        std::vector<int> set;
        for (int u = 0; u < 3; ++u) {
          if (-std::log(a[u] + 1e-9) <= cal.threshold) set.push_back(u);
        }
        if (set.empty()) set.push_back(int(std::max_element(a.data(), a.data() + 3) - a.data()));
        double pa = 0.0;
        double pb = 0.0;
        for (int x = 0; x < 3; ++x) {
          const double w = sc.prior[x] * sc.obs_likelihood(x, y);
          pa += w * pi(x, s);
          pb += w * ref(x, s);
          double worst = 1e300;
          for (int u : set) worst = std::min(worst, sc.sender_reward(x, u));
          if (w * pi(x, s) > 0) obj += w * pi(x, s) * worst;
        }
        tv += std::abs(pa - pb) / 2;
        double d = 0.0;
        for (int u = 0; u < 3; ++u) d += std::abs(a[u] - b[u]) / 2;
        mech = std::max(mech, d);
      }
    }
    err_obj = std::max(err_obj, std::abs(obj - robust_objective(sc, pi, p, cal)));
    err_tv = std::max(err_tv, std::abs(tv - delta_tv(sc, pi, ref)));
    err_mech = std::max(err_mech, std::abs(mech - delta_mech_model(sc, p, pi, ref)));
  }
  return {err_obj <= 1e-12 && err_tv <= 1e-12 && err_mech <= 1e-12,
          "max abs error over 50 policies: objective " + fmt("%.2e", err_obj) +
              ", delta_tv " + fmt("%.2e", err_tv) + ", delta_mech " +
              fmt("%.2e", err_mech)};
}

// 7. Analytic gradients against central differences.
Verdict criterion7() {
  Rng rng = make_rng(1, "acceptance-gradient", 0);
  double worst = 0.0;
  for (int batch = 0; batch < 10; ++batch) {
    const Predictor p = init_predictor({15, 8, 3}, 0.0, rng);
    const int n = 16;
    Mat x(15, n);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = 2 * uniform01(rng) - 1;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(uniform_index(3, rng));
    const double l2 = 1e-3;
    const Gradient g = grad(p, x, labels, l2);
    const double h = 1e-6;
    auto check = [&](double analytic, const Predictor& plus,
                     const Predictor& minus) {
      const double fd =
          (loss(plus, x, labels, l2) - loss(minus, x, labels, l2)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic) / denom);
    };
    for (int l = 0; l < p.n_layers(); ++l) {
      for (int i = 0; i < p.weights[l].size(); ++i) {
        Predictor a = p;
        Predictor b = p;
        a.weights[l].data()[i] += h;
        b.weights[l].data()[i] -= h;
        check(g.d_weights[l].data()[i], a, b);
      }
      for (int i = 0; i < p.biases[l].size(); ++i) {
        Predictor a = p;
        Predictor b = p;
        a.biases[l][i] += h;
        b.biases[l][i] -= h;
        check(g.d_biases[l][i], a, b);
      }
    }
  }
  return {worst < 1e-4, "max relative error " + fmt("%.2e", worst) +
                            " over 10 batches (need < 1e-4)"};
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(RBP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. Property suites and byte determinism.
Verdict criterion8() {
  std::vector<std::string> failed;
  const Scenario sc = reference_scenario();
  Rng rng = make_rng(1, "acceptance-properties", 0);

  // Sets: alpha-monotone, never empty; indicator sizes are 1 or |U|.
  const Predictor p = init_predictor({encoding_size(sc), 16, 3}, 0.0, rng);
  bool mono = true;
  bool nonempty = true;
  bool dichotomy = true;
  for (const auto& kind : {ScoreKind{ScoreVariant::kNll},
                           ScoreKind{ScoreVariant::kOneMinusProb},
                           ScoreKind{ScoreVariant::kAps}}) {
    std::vector<double> scores;
    for (int i = 0; i < 200; ++i) scores.push_back(3 * uniform01(rng));
    for (int t = 0; t < 50; ++t) {
      const SignalingPolicy pi = random_policy(sc, rng);
      for (int y = 0; y < 3; ++y) {
        for (int s = 0; s < 3; ++s) {
          std::vector<int> prev = {0, 1, 2};
          for (double a : {0.01, 0.05, 0.1, 0.3, 0.6, 0.9}) {
            const auto set =
                prediction_set(p, sc, calibrate(kind, scores, a), y, s, pi);
            nonempty = nonempty && !set.empty();
            mono = mono && std::includes(prev.begin(), prev.end(), set.begin(),
                                         set.end());
            prev = set;
          }
        }
      }
    }
  }
  const ScoreKind ind{ScoreVariant::kIndicator};
  for (double q : {0.0, 0.5, 1.0}) {
    const auto cal = calibrate(ind, {q}, 0.1);
    for (int y = 0; y < 3; ++y) {
      for (int s = 0; s < 3; ++s) {
        const auto n = prediction_set(p, sc, cal, y, s, SignalingPolicy::uniform(3, 3)).size();
        dichotomy = dichotomy && (n == 1 || n == 3);
      }
    }
  }
  if (!mono) failed.push_back("alpha-monotonicity");
  if (!nonempty) failed.push_back("non-emptiness");
  if (!dichotomy) failed.push_back("indicator dichotomy");

  // Simplex invariants and affine invariance of the best response.
  bool simplex = true;
  bool affine = true;
  for (int t = 0; t < 500; ++t) {
    const SignalingPolicy pi = random_policy(sc, rng);
    const Categorical b(uniform_simplex(3, rng));
    for (int s = 0; s < 3; ++s) {
      for (const Vec& v : {posterior_from_signal(sc, pi, s).probs(),
                           receiver_posterior(pi, b, s).probs()}) {
        simplex = simplex && std::abs(v.sum() - 1.0) <= 1e-9 &&
                  v.minCoeff() >= 0.0;
      }
    }
    const JointYS j = joint_ys(sc, pi);
    simplex = simplex && std::abs(j.probs.sum() - 1.0) <= 1e-9;
    const double a = 0.01 + 10 * uniform01(rng);
    const double c = 200 * (uniform01(rng) - 0.5);
    const Mat shifted = (a * sc.receiver_reward.array() + c).matrix();
    affine = affine && best_response(b, sc.receiver_reward) ==
                           best_response(b, shifted);
  }
  if (!simplex) failed.push_back("simplex invariants");
  if (!affine) failed.push_back("affine invariance");

  // Full staged pipeline twice under the replication config.
  const fs::path root = fs::temp_directory_path() / "rbp_acceptance_det";
  fs::remove_all(root);
  const std::string cfg = std::string(RBP_CONFIG_DIR) + "/replication.json";
  bool ran = true;
  for (const char* d : {"a", "b"}) {
    for (const char* verb :
         {"generate", "train", "calibrate", "optimize", "evaluate"}) {
      ran = ran && run_cli(std::string(verb) + " --config " + cfg +
                           " --out " + (root / d).string()) == 0;
    }
  }
  bool same = ran;
  int files = 0;
  if (ran) {
    for (const auto& e : fs::directory_iterator(root / "a")) {
      const fs::path other = root / "b" / e.path().filename();
      same = same && fs::exists(other) &&
             read_text_file(e.path().string()) ==
                 read_text_file(other.string());
      ++files;
    }
  }
  fs::remove_all(root);
  if (!same) failed.push_back("pipeline byte determinism");

  std::string detail = "sets, simplex, affine and determinism (" +
                       std::to_string(files) + " artifacts identical)";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f + ";";
  }
  return {failed.empty(), detail};
}

// 9. Held-out cross-entropy against training-set size.
Verdict criterion9() {
  RunConfig cfg = load_config(std::string(RBP_CONFIG_DIR) + "/replication.json");
  cfg.data.n_policies = 20;
  const BeliefFunction receiver = make_receiver(cfg);
  const std::vector<int> sizes = {500, 2000, 8000};
  std::vector<std::vector<double>> ce(sizes.size());
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto pols = data_policies(cfg, r);
    Rng held_rng = make_rng(cfg.seed, "acceptance-heldout", r);
    const Dataset held =
        generate_dataset(cfg.scenario, pols, 1000, receiver, held_rng);
    const EncodedData enc =
        encode_records(cfg.scenario, held.records, held.policies);
    for (size_t k = 0; k < sizes.size(); ++k) {
      RunConfig c = cfg;
      c.data.n_per_policy = sizes[k] / cfg.data.n_policies;
      const Dataset train = generate_stage(c, receiver, r);
      ce[k].push_back(cross_entropy(train_stage(c, train, r), enc));
    }
  }
  bool ok = true;
  std::ostringstream d;
  d << "mean held-out CE";
  for (size_t k = 0; k < sizes.size(); ++k) {
    d << " N=" << sizes[k] << ": " << fmt("%.4f", mean_of(ce[k])) << " (se "
      << fmt("%.4f", std_error_of(ce[k])) << ")";
    if (k > 0) {
      ok = ok && mean_of(ce[k]) <= mean_of(ce[k - 1]) + std_error_of(ce[k]);
    }
  }
  return {ok, d.str()};
}

}  // namespace
}  // namespace rbp

int main(int argc, char** argv) {
  const std::vector<std::function<rbp::Verdict()>> criteria = {
      rbp::criterion1, rbp::criterion2, rbp::criterion3,
      rbp::criterion4, rbp::criterion5, rbp::criterion6,
      rbp::criterion7, rbp::criterion8, rbp::criterion9};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    rbp::Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %d: %s - %s\n", id, v.pass ? "PASS" : "FAIL",
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
