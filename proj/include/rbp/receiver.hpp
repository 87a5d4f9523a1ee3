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

// Simulated receivers with possibly non-Bayesian beliefs, and the
// interaction datasets they generate.

#ifndef RBP_RECEIVER_HPP_
#define RBP_RECEIVER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbp/domain.hpp"
#include "rbp/rng.hpp"

namespace rbp {

enum class BeliefKind { kExactBayes, kMisspecifiedPrior, kTabular };

const char* belief_kind_name(BeliefKind kind);
BeliefKind parse_belief_kind(const std::string& name);

struct BeliefFunction {
  BeliefKind kind = BeliefKind::kExactBayes;
  std::optional<Categorical> misspecified_prior;
  std::optional<std::vector<Categorical>> table;  // indexed by observation
  double temper_exponent = 1.0;    // gamma, likelihood tempering
  double noise_temperature = 0.0;  // tau, softmax action noise

  // theta*(obs).
  Categorical belief(const Scenario& scenario, int obs) const;
  void validate(const Scenario& scenario) const;
};

// Mixing scale for the prior perturbation: mu' = (1 - w) mu + w d with d
// uniform on the simplex, where w = deviation / E[TV(d, mu)] capped at 1.
// The expectation comes from a fixed-seed Monte Carlo run.
double expected_uniform_tv(const Categorical& prior);
Categorical perturb_prior(const Categorical& prior, double deviation,
                          Rng& rng);

// exact-bayes ignores gamma in the belief (it is the untempered posterior);
// misspecified-prior draws its prior from `seed`. Tabular beliefs use
// make_tabular_belief.
BeliefFunction make_belief_function(BeliefKind kind, const Scenario& scenario,
                                    double deviation, std::uint64_t seed,
                                    double temper_exponent = 1.0,
                                    double noise_temperature = 0.0);
BeliefFunction make_tabular_belief(const Scenario& scenario,
                                   std::vector<Categorical> table,
                                   double noise_temperature = 0.0);

// Exact action law of the receiver at (obs, signal): one-hot on the best
// response when tau = 0, softmax of expected rewards / tau otherwise.
Vec action_distribution(const Scenario& scenario,
                        const SignalingPolicy& policy,
                        const BeliefFunction& belief_fn, int obs, int signal);

int receiver_act(const Scenario& scenario, const SignalingPolicy& policy,
                 const BeliefFunction& belief_fn, int obs, int signal,
                 Rng& rng);

struct InteractionRecord {
  int state = 0;
  int obs = 0;
  int signal = 0;
  std::string policy_id;
  int action = 0;
};

class PolicyRegistry {
 public:
  // Policies without an id get "p<index>". Duplicate ids are rejected.
  void add(SignalingPolicy policy);
  const SignalingPolicy& at(const std::string& id) const;
  bool contains(const std::string& id) const;
  const std::vector<SignalingPolicy>& policies() const { return policies_; }
  int size() const { return static_cast<int>(policies_.size()); }

 private:
  std::vector<SignalingPolicy> policies_;
  std::map<std::string, int> index_;
};

struct Dataset {
  std::vector<InteractionRecord> records;
  PolicyRegistry policies;
  std::string scenario_ref;

  const SignalingPolicy& policy_of(const InteractionRecord& r) const {
    return policies.at(r.policy_id);
  }
  void validate(const Scenario& scenario) const;
};

// Each record draws its policy uniformly from the list, then x, y, s and the
// receiver's action. N = K * n_per_policy.
Dataset generate_dataset(const Scenario& scenario,
                         const std::vector<SignalingPolicy>& policies,
                         int n_per_policy, const BeliefFunction& belief_fn,
                         Rng& rng);

// n records under a single policy, used for fresh test and recalibration
// draws.
std::vector<InteractionRecord> simulate_records(
    const Scenario& scenario, const SignalingPolicy& policy,
    const BeliefFunction& belief_fn, int n, Rng& rng);

}  // namespace rbp

#endif  // RBP_RECEIVER_HPP_
