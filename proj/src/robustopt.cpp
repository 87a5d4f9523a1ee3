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

#include "rbp/robustopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbp/error.hpp"

namespace rbp {

double robust_value(const Scenario& scenario, const SignalingPolicy& policy,
                    const ActionSetFn& sets) {
  check_policy(scenario, policy);
  const JointYS joint = joint_ys(scenario, policy);
  double value = 0.0;
  for (int y = 0; y < scenario.n_obs; ++y) {
    for (int s = 0; s < scenario.n_signals; ++s) {
      if (joint.probs(y, s) <= 0.0) continue;
      const std::vector<int> set = sets(y, s);
      require(!set.empty(), ErrorKind::kInvalidArgument,
              "robust_value: empty action set");
      for (int x = 0; x < scenario.n_states; ++x) {
        const double w = scenario.prior[x] * scenario.obs_likelihood(x, y) *
                         policy(x, s);
        if (w <= 0.0) continue;
        double worst = std::numeric_limits<double>::infinity();
        for (int u : set) worst = std::min(worst, scenario.sender_reward(x, u));
        value += w * worst;
      }
    }
  }
  return value;
}

double robust_objective(const Scenario& scenario,
                        const SignalingPolicy& policy, const Predictor& p,
                        const ConformalCalibration& cal) {
  return robust_value(scenario, policy, [&](int y, int s) {
    return prediction_set(p, scenario, cal, y, s, policy);
  });
}

const char* candidate_family_name(CandidateFamily f) {
  switch (f) {
    case CandidateFamily::kGrid: return "grid";
    case CandidateFamily::kRandomStochastic: return "random-stochastic";
    case CandidateFamily::kRandomSparse: return "random-sparse";
    case CandidateFamily::kBaselinePerturbation: return "baseline-perturbation";
  }
  return "unknown";
}

CandidateFamily parse_candidate_family(const std::string& name) {
  if (name == "grid") return CandidateFamily::kGrid;
  if (name == "random-stochastic") return CandidateFamily::kRandomStochastic;
  if (name == "random-sparse") return CandidateFamily::kRandomSparse;
  if (name == "baseline-perturbation") {
    return CandidateFamily::kBaselinePerturbation;
  }
  fail(ErrorKind::kConfig, "unknown candidate family '" + name + "'");
}

void PolicySearchConfig::validate() const {
  require(resolution_or_count >= 1, ErrorKind::kConfig,
          "candidate count or resolution must be >= 1");
  if (max_tv_from_baseline) {
    require(*max_tv_from_baseline >= 0.0 && *max_tv_from_baseline <= 1.0,
            ErrorKind::kConfig, "max_tv_from_baseline must lie in [0, 1]");
  }
}

std::vector<Vec> simplex_lattice(int dim, int resolution) {
  require(dim >= 1 && resolution >= 1, ErrorKind::kInvalidArgument,
          "simplex_lattice: dim and resolution must be positive");
  std::vector<Vec> out;
  std::vector<int> c(dim, 0);
  // Enumerate compositions of `resolution` into `dim` parts, last part
  // implied.
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == dim - 1) {
      c[i] = left;
      Vec v(dim);
      for (int k = 0; k < dim; ++k) v[k] = static_cast<double>(c[k]) / resolution;
      out.push_back(std::move(v));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      c[i] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, resolution);
  return out;
}

namespace {

SignalingPolicy random_policy(const Scenario& scenario, Rng& rng) {
  Mat m(scenario.n_states, scenario.n_signals);
  for (int x = 0; x < scenario.n_states; ++x) {
    m.row(x) = uniform_simplex(scenario.n_signals, rng).transpose();
  }
  return SignalingPolicy(std::move(m));
}

SignalingPolicy random_sparse_policy(const Scenario& scenario, Rng& rng) {
  const int ns = scenario.n_signals;
  require(ns < 31, ErrorKind::kInvalidArgument,
          "random-sparse supports at most 30 signals");
  Mat m = Mat::Zero(scenario.n_states, ns);
  for (int x = 0; x < scenario.n_states; ++x) {
    const int mask = 1 + uniform_index((1 << ns) - 1, rng);
    std::vector<int> support;
    for (int s = 0; s < ns; ++s) {
      if (mask & (1 << s)) support.push_back(s);
    }
    const Vec w = uniform_simplex(static_cast<int>(support.size()), rng);
    for (size_t k = 0; k < support.size(); ++k) m(x, support[k]) = w[k];
  }
  return SignalingPolicy(std::move(m));
}

}  // namespace

std::vector<SignalingPolicy> generate_candidates(
    const Scenario& scenario, const PolicySearchConfig& config,
    const std::optional<SignalingPolicy>& baseline) {
  config.validate();
  if (baseline) check_policy(scenario, *baseline);
  std::vector<SignalingPolicy> raw;
  Rng rng(config.seed);
  switch (config.family) {
    case CandidateFamily::kGrid: {
      const auto rows =
          simplex_lattice(scenario.n_signals, config.resolution_or_count);
      const int nr = static_cast<int>(rows.size());
      long total = 1;
      for (int x = 0; x < scenario.n_states; ++x) {
        total *= nr;
        require(total <= 5'000'000, ErrorKind::kInvalidArgument,
                "grid family too large for this resolution");
      }
      std::vector<int> pick(scenario.n_states, 0);
      for (long k = 0; k < total; ++k) {
        long rem = k;
        for (int x = scenario.n_states - 1; x >= 0; --x) {
          pick[x] = static_cast<int>(rem % nr);
          rem /= nr;
        }
        Mat m(scenario.n_states, scenario.n_signals);
        for (int x = 0; x < scenario.n_states; ++x) {
          m.row(x) = rows[pick[x]].transpose();
        }
        raw.emplace_back(std::move(m));
      }
      break;
    }
    case CandidateFamily::kRandomStochastic:
      for (int k = 0; k < config.resolution_or_count; ++k) {
        raw.push_back(random_policy(scenario, rng));
      }
      break;
    case CandidateFamily::kRandomSparse:
      for (int k = 0; k < config.resolution_or_count; ++k) {
        raw.push_back(random_sparse_policy(scenario, rng));
      }
      break;
    case CandidateFamily::kBaselinePerturbation: {
      require(baseline.has_value(), ErrorKind::kInvalidArgument,
              "baseline-perturbation needs a baseline policy");
      raw.emplace_back(baseline->probs());
      const double radius = config.max_tv_from_baseline.value_or(1.0);
      if (radius == 0.0) break;
      for (int k = 1; k < config.resolution_or_count; ++k) {
        const SignalingPolicy dir = random_policy(scenario, rng);
        const double target = radius * uniform01(rng);
        const double full = delta_tv(scenario, dir, *baseline);
        const double w = full > 0.0 ? std::min(1.0, target / full) : 0.0;
        raw.emplace_back(Mat((1.0 - w) * baseline->probs() + w * dir.probs()));
      }
      break;
    }
  }
  std::vector<SignalingPolicy> out;
  for (auto& c : raw) {
    if (config.max_tv_from_baseline && baseline &&
        delta_tv(scenario, c, *baseline) > *config.max_tv_from_baseline + 1e-12) {
      continue;
    }
    c.set_id("c" + std::to_string(out.size()));
    out.push_back(std::move(c));
  }
  require(!out.empty(), ErrorKind::kInfeasible,
          "no candidate satisfies the TV filter");
  return out;
}

OptimizeResult optimize_policy(const Scenario& scenario,
                               const std::vector<SignalingPolicy>& candidates,
                               const Predictor& p,
                               const ConformalCalibration& cal) {
  require(!candidates.empty(), ErrorKind::kEmptyInput,
          "optimize_policy: empty candidate list");
  OptimizeResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(candidates.size()); ++k) {
    const double v = robust_objective(scenario, candidates[k], p, cal);
    if (v > best.value) {
      best.value = v;
      best.index = k;
    }
  }
  best.policy = candidates[best.index];
  return best;
}

double delta_tv(const Scenario& scenario, const SignalingPolicy& pi,
                const SignalingPolicy& pi_hat) {
  const Mat diff = joint_ys(scenario, pi).probs - joint_ys(scenario, pi_hat).probs;
  return 0.5 * diff.cwiseAbs().sum();
}

double delta_mech_model(const Scenario& scenario, const Predictor& p,
                        const SignalingPolicy& pi,
                        const SignalingPolicy& pi_hat) {
  double worst = 0.0;
  for (int y = 0; y < scenario.n_obs; ++y) {
    for (int s = 0; s < scenario.n_signals; ++s) {
      worst = std::max(worst,
                       tv_distance(predict_proba(p, scenario, y, s, pi),
                                   predict_proba(p, scenario, y, s, pi_hat)));
    }
  }
  return worst;
}

namespace {

double mean_score(const Scenario& scenario, const Predictor& p,
                  const ScoreKind& kind, const SignalingPolicy& policy,
                  const BeliefFunction& belief_fn, int n, Rng& rng) {
  const auto recs = simulate_records(scenario, policy, belief_fn, n, rng);
  // Cache the predicted law per (y, s); the policy is fixed.
  std::vector<std::optional<Vec>> cache(scenario.n_obs * scenario.n_signals);
  double acc = 0.0;
  for (const auto& r : recs) {
    auto& slot = cache[r.obs * scenario.n_signals + r.signal];
    if (!slot) slot = predict_proba(p, scenario, r.obs, r.signal, policy);
    acc += score_from_probs(kind, *slot, r.action);
  }
  return acc / n;
}

}  // namespace

double delta_cal_sim(const Scenario& scenario, const Predictor& p,
                     const ScoreKind& kind, const SignalingPolicy& pi,
                     const SignalingPolicy& pi_hat,
                     const BeliefFunction& belief_fn, int n, Rng& rng) {
  require(n >= 1, ErrorKind::kInvalidArgument, "delta_cal_sim: n < 1");
  const std::uint64_t seed = rng();
  Rng a(seed), b(seed);
  return std::abs(mean_score(scenario, p, kind, pi, belief_fn, n, a) -
                  mean_score(scenario, p, kind, pi_hat, belief_fn, n, b));
}

double coverage_lower_bound(double alpha, const ShiftMeasures& m) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::kInvalidArgument,
          "alpha must lie in (0, 1)");
  return 1.0 - alpha - 2.0 * m.delta_tv - m.delta_mech - m.delta_cal;
}

ShiftMeasures make_shift_measures(double alpha, double d_tv, double d_mech,
                                  double d_cal) {
  ShiftMeasures m{d_tv, d_mech, d_cal, 0.0};
  m.coverage_lower_bound = coverage_lower_bound(alpha, m);
  return m;
}

double true_expected_utility(const Scenario& scenario,
                             const SignalingPolicy& policy,
                             const BeliefFunction& belief_fn) {
  check_policy(scenario, policy);
  double value = 0.0;
  for (int y = 0; y < scenario.n_obs; ++y) {
    for (int s = 0; s < scenario.n_signals; ++s) {
      Vec w(scenario.n_states);
      for (int x = 0; x < scenario.n_states; ++x) {
        w[x] = scenario.prior[x] * scenario.obs_likelihood(x, y) * policy(x, s);
      }
      if (w.sum() <= 0.0) continue;
      const Vec act = action_distribution(scenario, policy, belief_fn, y, s);
      value += w.dot(scenario.sender_reward * act);
    }
  }
  return value;
}

MonteCarloEstimate simulate_utility(const Scenario& scenario,
                                    const SignalingPolicy& policy,
                                    const BeliefFunction& belief_fn, int n,
                                    Rng& rng) {
  const auto recs = simulate_records(scenario, policy, belief_fn, n, rng);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& r : recs) {
    const double v = scenario.sender_reward(r.state, r.action);
    sum += v;
    sum_sq += v * v;
  }
  MonteCarloEstimate est;
  est.n = n;
  est.mean = sum / n;
  const double var =
      n > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

BoundReport verify_utility_bound(const Scenario& scenario,
                                 const SignalingPolicy& policy,
                                 const Predictor& p,
                                 const ConformalCalibration& cal,
                                 const BeliefFunction& belief_fn, int n,
                                 Rng& rng) {
  require(n >= 1, ErrorKind::kInvalidArgument, "verify_utility_bound: n < 1");
  BoundReport rep;
  const MonteCarloEstimate est =
      simulate_utility(scenario, policy, belief_fn, n, rng);
  rep.lhs = est.mean;
  rep.lhs_std_error = est.std_error;
  rep.robust_value = robust_objective(scenario, policy, p, cal);
  rep.penalty = cal.alpha * (scenario.sender_max() - scenario.sender_min());
  rep.rhs = rep.robust_value - rep.penalty;
  rep.slack = rep.lhs - rep.rhs;
  rep.holds = rep.lhs >= rep.rhs - 3.0 * rep.lhs_std_error;
  return rep;
}

std::vector<int> rationalizable_actions(const Scenario& scenario,
                                        const SignalingPolicy& policy,
                                        int signal,
                                        const std::vector<Vec>& beliefs) {
  std::vector<bool> hit(scenario.n_actions, false);
  for (const Vec& theta : beliefs) {
    Vec w = policy.probs().col(signal).cwiseProduct(theta);
    const double z = w.sum();
    if (z <= 0.0) continue;
    hit[best_response(Vec(w / z), scenario.receiver_reward)] = true;
  }
  std::vector<int> out;
  for (int u = 0; u < scenario.n_actions; ++u) {
    if (hit[u]) out.push_back(u);
  }
  return out;
}

double worst_case_value(const Scenario& scenario,
                        const SignalingPolicy& policy,
                        const std::vector<Vec>& beliefs) {
  std::vector<std::vector<int>> per_signal(scenario.n_signals);
  for (int s = 0; s < scenario.n_signals; ++s) {
    per_signal[s] = rationalizable_actions(scenario, policy, s, beliefs);
  }
  return robust_value(scenario, policy,
                      [&](int, int s) { return per_signal[s]; });
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kOracle: return "oracle";
    case Method::kConformalRobust: return "conformal-robust";
    case Method::kWorstCase: return "worst-case";
    case Method::kNaive: return "naive";
  }
  return "unknown";
}

namespace {

template <typename F>
std::pair<int, double> first_argmax(int n, F value_of) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double v = value_of(k);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return {best, best_value};
}

}  // namespace

MethodResult run_baseline(Method method, const Scenario& scenario,
                          const std::vector<SignalingPolicy>& candidates,
                          const BeliefFunction& belief_fn, Rng& /*rng*/,
                          int lattice_resolution) {
  require(!candidates.empty(), ErrorKind::kEmptyInput,
          "run_baseline: empty candidate list");
  const int n = static_cast<int>(candidates.size());
  std::pair<int, double> pick;
  switch (method) {
    case Method::kOracle:
      pick = first_argmax(n, [&](int k) {
        return true_expected_utility(scenario, candidates[k], belief_fn);
      });
      break;
    case Method::kNaive:
      pick.first = classical_optimal_index(scenario, candidates);
      pick.second = classical_value(scenario, candidates[pick.first]);
      break;
    case Method::kWorstCase: {
      const auto beliefs =
          simplex_lattice(scenario.n_states, lattice_resolution);
      pick = first_argmax(n, [&](int k) {
        return worst_case_value(scenario, candidates[k], beliefs);
      });
      break;
    }
    case Method::kConformalRobust:
      fail(ErrorKind::kInvalidArgument,
           "conformal-robust needs a predictor; use run_conformal_robust");
  }
  MethodResult r;
  r.method = method;
  r.chosen_index = pick.first;
  r.chosen_policy = candidates[pick.first];
  r.robust_value = pick.second;
  r.true_expected_utility =
      true_expected_utility(scenario, r.chosen_policy, belief_fn);
  return r;
}

MethodResult run_conformal_robust(const Scenario& scenario,
                                  const std::vector<SignalingPolicy>& candidates,
                                  const Predictor& p,
                                  const ConformalCalibration& cal,
                                  const BeliefFunction& belief_fn) {
  const OptimizeResult opt = optimize_policy(scenario, candidates, p, cal);
  MethodResult r;
  r.method = Method::kConformalRobust;
  r.chosen_index = opt.index;
  r.chosen_policy = opt.policy;
  r.robust_value = opt.value;
  r.true_expected_utility =
      true_expected_utility(scenario, r.chosen_policy, belief_fn);
  return r;
}

}  // namespace rbp
