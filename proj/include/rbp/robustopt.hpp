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

// Sender-side optimization: the set-robust objective, candidate policies,
// policy-shift diagnostics, the utility lower bound and the comparison
// methods.

#ifndef RBP_ROBUSTOPT_HPP_
#define RBP_ROBUSTOPT_HPP_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbp/conformal.hpp"
#include "rbp/domain.hpp"
#include "rbp/neural.hpp"
#include "rbp/receiver.hpp"

namespace rbp {

// Action set at (obs, signal). Must be non-empty.
using ActionSetFn = std::function<std::vector<int>(int obs, int signal)>;

// sum_x mu(x) sum_y L(y|x) sum_s pi(s|x) min_{u in set(y,s)} r_s(x, u).
// Zero-mass (x, y, s) triples are skipped and sets are only queried for
// (y, s) pairs of positive mass.
double robust_value(const Scenario& scenario, const SignalingPolicy& policy,
                    const ActionSetFn& sets);

double robust_objective(const Scenario& scenario,
                        const SignalingPolicy& policy, const Predictor& p,
                        const ConformalCalibration& cal);

enum class CandidateFamily {
  kGrid,
  kRandomStochastic,
  kRandomSparse,
  kBaselinePerturbation
};

const char* candidate_family_name(CandidateFamily f);
CandidateFamily parse_candidate_family(const std::string& name);

struct PolicySearchConfig {
  CandidateFamily family = CandidateFamily::kRandomStochastic;
  int resolution_or_count = 200;
  std::optional<double> max_tv_from_baseline;
  std::uint64_t seed = 0;

  void validate() const;
};

// grid: every row-stochastic matrix on the lattice with the given
// resolution. random-stochastic: `count` matrices with rows uniform on the
// simplex. random-sparse: each row picks a nonempty signal support uniformly
// at random and is uniform on that face. baseline-perturbation: the baseline first, then `count - 1`
// mixtures (1 - w) baseline + w R with R random-stochastic and w set so the
// joint TV to the baseline is a uniform draw on [0, max_tv]. Candidates get
// ids "c<index>". With max_tv set, anything beyond it is filtered out.
std::vector<SignalingPolicy> generate_candidates(
    const Scenario& scenario, const PolicySearchConfig& config,
    const std::optional<SignalingPolicy>& baseline = std::nullopt);

// All points of the simplex with coordinates k / resolution.
std::vector<Vec> simplex_lattice(int dim, int resolution);

struct OptimizeResult {
  int index = 0;
  SignalingPolicy policy;
  double value = 0.0;
};

OptimizeResult optimize_policy(const Scenario& scenario,
                               const std::vector<SignalingPolicy>& candidates,
                               const Predictor& p,
                               const ConformalCalibration& cal);

double delta_tv(const Scenario& scenario, const SignalingPolicy& pi,
                const SignalingPolicy& pi_hat);

// Largest TV between predicted action laws over all (y, s).
double delta_mech_model(const Scenario& scenario, const Predictor& p,
                        const SignalingPolicy& pi,
                        const SignalingPolicy& pi_hat);

// |mean score under pi - mean score under pi_hat|, n simulated records per
// policy. Both streams are seeded from one draw of `rng`, so pi == pi_hat
// gives exactly zero.
double delta_cal_sim(const Scenario& scenario, const Predictor& p,
                     const ScoreKind& kind, const SignalingPolicy& pi,
                     const SignalingPolicy& pi_hat,
                     const BeliefFunction& belief_fn, int n, Rng& rng);

struct ShiftMeasures {
  double delta_tv = 0.0;
  double delta_mech = 0.0;
  double delta_cal = 0.0;
  double coverage_lower_bound = 0.0;
};

// 1 - alpha - 2 dTV - dMech - dCal, unclamped.
double coverage_lower_bound(double alpha, const ShiftMeasures& m);
ShiftMeasures make_shift_measures(double alpha, double d_tv, double d_mech,
                                  double d_cal);

// Exact expected sender reward when the receiver follows belief_fn.
double true_expected_utility(const Scenario& scenario,
                             const SignalingPolicy& policy,
                             const BeliefFunction& belief_fn);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

// Mean of r_s(x, u) over n simulated interactions.
MonteCarloEstimate simulate_utility(const Scenario& scenario,
                                    const SignalingPolicy& policy,
                                    const BeliefFunction& belief_fn, int n,
                                    Rng& rng);

struct BoundReport {
  double lhs = 0.0;  // simulated sender utility
  double lhs_std_error = 0.0;
  double robust_value = 0.0;
  double penalty = 0.0;  // alpha (M - m)
  double rhs = 0.0;      // robust_value - penalty
  double slack = 0.0;    // lhs - rhs
  bool holds = false;    // lhs >= rhs - 3 standard errors
};

BoundReport verify_utility_bound(const Scenario& scenario,
                                 const SignalingPolicy& policy,
                                 const Predictor& p,
                                 const ConformalCalibration& cal,
                                 const BeliefFunction& belief_fn, int n,
                                 Rng& rng);

// Actions that best-respond to receiver_posterior(pi, theta, s) for some
// lattice belief theta. Beliefs putting zero mass on the signal are skipped.
std::vector<int> rationalizable_actions(const Scenario& scenario,
                                        const SignalingPolicy& policy,
                                        int signal,
                                        const std::vector<Vec>& beliefs);

double worst_case_value(const Scenario& scenario,
                        const SignalingPolicy& policy,
                        const std::vector<Vec>& beliefs);

enum class Method { kOracle, kConformalRobust, kWorstCase, kNaive };

const char* method_name(Method m);

struct MethodResult {
  Method method = Method::kOracle;
  int chosen_index = 0;
  SignalingPolicy chosen_policy;
  double robust_value = 0.0;  // the method's own criterion at its choice
  double true_expected_utility = 0.0;
  std::optional<double> coverage;
  std::optional<double> test_utility;  // Monte Carlo mean, when measured
};

// oracle: argmax of the exact expected utility under belief_fn (rng unused).
// naive: classical_optimal_policy. worst-case: argmax of worst_case_value
// over the lattice of the given resolution.
MethodResult run_baseline(Method method, const Scenario& scenario,
                          const std::vector<SignalingPolicy>& candidates,
                          const BeliefFunction& belief_fn, Rng& rng,
                          int lattice_resolution = 10);

MethodResult run_conformal_robust(const Scenario& scenario,
                                  const std::vector<SignalingPolicy>& candidates,
                                  const Predictor& p,
                                  const ConformalCalibration& cal,
                                  const BeliefFunction& belief_fn);

}  // namespace rbp

#endif  // RBP_ROBUSTOPT_HPP_
