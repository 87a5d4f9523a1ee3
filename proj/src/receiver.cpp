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

#include "rbp/receiver.hpp"

#include <cmath>

#include "rbp/error.hpp"

namespace rbp {

const char* belief_kind_name(BeliefKind kind) {
  switch (kind) {
    case BeliefKind::kExactBayes: return "exact-bayes";
    case BeliefKind::kMisspecifiedPrior: return "misspecified-prior";
    case BeliefKind::kTabular: return "tabular";
  }
  return "unknown";
}

BeliefKind parse_belief_kind(const std::string& name) {
  if (name == "exact-bayes") return BeliefKind::kExactBayes;
  if (name == "misspecified-prior") return BeliefKind::kMisspecifiedPrior;
  if (name == "tabular") return BeliefKind::kTabular;
  fail(ErrorKind::kConfig, "unknown receiver kind '" + name + "'");
}

namespace {

Categorical likelihood_posterior(const Scenario& scenario, const Vec& prior,
                                 int obs, double gamma) {
  Vec w(scenario.n_states);
  for (int x = 0; x < scenario.n_states; ++x) {
    const double l = scenario.obs_likelihood(x, obs);
    w[x] = (gamma == 1.0 ? l : std::pow(l, gamma)) * prior[x];
  }
  const double z = w.sum();
  require(z > 0.0, ErrorKind::kBeliefIncompatible,
          "observation " + std::to_string(obs) + " has zero belief mass");
  return Categorical(w / z);
}

}  // namespace

Categorical BeliefFunction::belief(const Scenario& scenario, int obs) const {
  require(obs >= 0 && obs < scenario.n_obs, ErrorKind::kInvalidArgument,
          "observation index out of range");
  switch (kind) {
    case BeliefKind::kExactBayes:
      return likelihood_posterior(scenario, scenario.prior.probs(), obs, 1.0);
    case BeliefKind::kMisspecifiedPrior:
      return likelihood_posterior(scenario, misspecified_prior->probs(), obs,
                                  temper_exponent);
    case BeliefKind::kTabular:
      return (*table)[obs];
  }
  fail(ErrorKind::kInvalidArgument, "bad belief kind");
}

void BeliefFunction::validate(const Scenario& scenario) const {
  require(temper_exponent > 0.0 && std::isfinite(temper_exponent),
          ErrorKind::kInvalidArgument, "temper exponent must be positive");
  require(noise_temperature >= 0.0 && std::isfinite(noise_temperature),
          ErrorKind::kInvalidArgument,
          "noise temperature must be non-negative");
  switch (kind) {
    case BeliefKind::kExactBayes:
      require(!misspecified_prior && !table, ErrorKind::kInvalidArgument,
              "exact-bayes carries no prior or table");
      break;
    case BeliefKind::kMisspecifiedPrior:
      require(misspecified_prior.has_value() && !table,
              ErrorKind::kInvalidArgument,
              "misspecified-prior needs exactly a prior");
      require(misspecified_prior->size() == scenario.n_states,
              ErrorKind::kInvalidArgument, "misspecified prior has wrong size");
      break;
    case BeliefKind::kTabular:
      require(table.has_value() && !misspecified_prior,
              ErrorKind::kInvalidArgument, "tabular needs exactly a table");
      require(static_cast<int>(table->size()) == scenario.n_obs,
              ErrorKind::kInvalidArgument, "belief table needs one row per obs");
      for (const auto& c : *table) {
        require(c.size() == scenario.n_states, ErrorKind::kInvalidArgument,
                "belief table row has wrong size");
      }
      break;
  }
}

double expected_uniform_tv(const Categorical& prior) {
  constexpr int kDraws = 20000;
  Rng rng(0x5eed7u);
  double acc = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    acc += tv_distance(uniform_simplex(prior.size(), rng), prior.probs());
  }
  return acc / kDraws;
}

Categorical perturb_prior(const Categorical& prior, double deviation,
                          Rng& rng) {
  require(deviation >= 0.0 && deviation <= 1.0, ErrorKind::kInvalidArgument,
          "deviation must lie in [0, 1]");
  if (deviation == 0.0) return prior;
  const double w = std::min(1.0, deviation / expected_uniform_tv(prior));
  const Vec d = uniform_simplex(prior.size(), rng);
  return Categorical((1.0 - w) * prior.probs() + w * d);
}

BeliefFunction make_belief_function(BeliefKind kind, const Scenario& scenario,
                                    double deviation, std::uint64_t seed,
                                    double temper_exponent,
                                    double noise_temperature) {
  require(deviation >= 0.0 && deviation <= 1.0, ErrorKind::kInvalidArgument,
          "deviation must lie in [0, 1]");
  require(kind != BeliefKind::kTabular, ErrorKind::kInvalidArgument,
          "tabular beliefs are built with make_tabular_belief");
  BeliefFunction fn;
  fn.kind = kind;
  fn.temper_exponent = temper_exponent;
  fn.noise_temperature = noise_temperature;
  if (kind == BeliefKind::kMisspecifiedPrior) {
    Rng rng(seed);
    fn.misspecified_prior = perturb_prior(scenario.prior, deviation, rng);
  }
  fn.validate(scenario);
  return fn;
}

BeliefFunction make_tabular_belief(const Scenario& scenario,
                                   std::vector<Categorical> table,
                                   double noise_temperature) {
  BeliefFunction fn;
  fn.kind = BeliefKind::kTabular;
  fn.table = std::move(table);
  fn.noise_temperature = noise_temperature;
  fn.validate(scenario);
  return fn;
}

Vec action_distribution(const Scenario& scenario,
                        const SignalingPolicy& policy,
                        const BeliefFunction& belief_fn, int obs,
                        int signal) {
  const Categorical post =
      receiver_posterior(policy, belief_fn.belief(scenario, obs), signal);
  const Vec expected = scenario.receiver_reward.transpose() * post.probs();
  Vec p = Vec::Zero(scenario.n_actions);
  if (belief_fn.noise_temperature == 0.0) {
    p[argmax_first(expected)] = 1.0;
    return p;
  }
  p = ((expected.array() - expected.maxCoeff()) / belief_fn.noise_temperature)
          .exp()
          .matrix();
  return p / p.sum();
}

int receiver_act(const Scenario& scenario, const SignalingPolicy& policy,
                 const BeliefFunction& belief_fn, int obs, int signal,
                 Rng& rng) {
  if (belief_fn.noise_temperature == 0.0) {
    const Categorical post =
        receiver_posterior(policy, belief_fn.belief(scenario, obs), signal);
    return best_response(post, scenario.receiver_reward);
  }
  return sample_categorical(
      action_distribution(scenario, policy, belief_fn, obs, signal), rng);
}

void PolicyRegistry::add(SignalingPolicy policy) {
  if (policy.id().empty()) policy.set_id("p" + std::to_string(size()));
  require(!contains(policy.id()), ErrorKind::kInvalidArgument,
          "duplicate policy id '" + policy.id() + "'");
  index_[policy.id()] = size();
  policies_.push_back(std::move(policy));
}

const SignalingPolicy& PolicyRegistry::at(const std::string& id) const {
  auto it = index_.find(id);
  require(it != index_.end(), ErrorKind::kInvalidArgument,
          "unregistered policy id '" + id + "'");
  return policies_[it->second];
}

bool PolicyRegistry::contains(const std::string& id) const {
  return index_.count(id) > 0;
}

void Dataset::validate(const Scenario& scenario) const {
  require(!records.empty(), ErrorKind::kEmptyInput, "dataset is empty");
  for (const auto& r : records) {
    require(r.state >= 0 && r.state < scenario.n_states && r.obs >= 0 &&
                r.obs < scenario.n_obs && r.signal >= 0 &&
                r.signal < scenario.n_signals && r.action >= 0 &&
                r.action < scenario.n_actions,
            ErrorKind::kInvalidArgument, "dataset record index out of range");
    require(policies.contains(r.policy_id), ErrorKind::kInvalidArgument,
            "dataset record references unregistered policy '" + r.policy_id +
                "'");
  }
}

namespace {

// Lazily filled action laws per (policy, obs, signal), so sampling a record
// costs one categorical draw.
class ActionTable {
 public:
  ActionTable(const Scenario& scenario, const BeliefFunction& belief_fn,
              const std::vector<SignalingPolicy>& policies)
      : scenario_(scenario),
        belief_fn_(belief_fn),
        policies_(policies),
        cache_(policies.size() * scenario.n_obs * scenario.n_signals) {}

  int act(int k, int y, int s, Rng& rng) {
    auto& slot = cache_[(k * scenario_.n_obs + y) * scenario_.n_signals + s];
    if (!slot) {
      slot = action_distribution(scenario_, policies_[k], belief_fn_, y, s);
    }
    if (belief_fn_.noise_temperature == 0.0) return argmax_first(*slot);
    return sample_categorical(*slot, rng);
  }

 private:
  const Scenario& scenario_;
  const BeliefFunction& belief_fn_;
  const std::vector<SignalingPolicy>& policies_;
  std::vector<std::optional<Vec>> cache_;
};

InteractionRecord draw_record(const Scenario& scenario,
                              const SignalingPolicy& policy, int k,
                              ActionTable& actions, Rng& rng) {
  InteractionRecord r;
  r.state = sample_categorical(scenario.prior.probs(), rng);
  r.obs = sample_categorical(scenario.obs_likelihood.row(r.state).transpose(),
                             rng);
  r.signal = sample_categorical(policy.probs().row(r.state).transpose(), rng);
  r.policy_id = policy.id();
  r.action = actions.act(k, r.obs, r.signal, rng);
  return r;
}

}  // namespace

Dataset generate_dataset(const Scenario& scenario,
                         const std::vector<SignalingPolicy>& policies,
                         int n_per_policy, const BeliefFunction& belief_fn,
                         Rng& rng) {
  require(!policies.empty(), ErrorKind::kEmptyInput,
          "generate_dataset: no policies");
  require(n_per_policy >= 1, ErrorKind::kInvalidArgument,
          "generate_dataset: n_per_policy must be at least 1");
  belief_fn.validate(scenario);
  Dataset data;
  for (const auto& p : policies) {
    check_policy(scenario, p);
    data.policies.add(p);
  }
  const auto& registered = data.policies.policies();
  ActionTable actions(scenario, belief_fn, registered);
  const int k_total = static_cast<int>(registered.size());
  const long n = static_cast<long>(k_total) * n_per_policy;
  data.records.reserve(n);
  for (long i = 0; i < n; ++i) {
    const int k = uniform_index(k_total, rng);
    data.records.push_back(
        draw_record(scenario, registered[k], k, actions, rng));
  }
  return data;
}

std::vector<InteractionRecord> simulate_records(
    const Scenario& scenario, const SignalingPolicy& policy,
    const BeliefFunction& belief_fn, int n, Rng& rng) {
  require(n >= 1, ErrorKind::kInvalidArgument, "simulate_records: n < 1");
  check_policy(scenario, policy);
  std::vector<SignalingPolicy> one = {policy};
  ActionTable actions(scenario, belief_fn, one);
  std::vector<InteractionRecord> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(draw_record(scenario, policy, 0, actions, rng));
  }
  return out;
}

}  // namespace rbp
