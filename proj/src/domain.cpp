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

#include "rbp/domain.hpp"

#include <cmath>
#include <sstream>

#include "rbp/error.hpp"

namespace rbp {

void check_simplex(Eigen::Ref<Vec> p, const std::string& what) {
  require(p.size() > 0, ErrorKind::kInvalidArgument, what + ": empty support");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]), ErrorKind::kInvalidArgument,
            what + ": non-finite probability");
    require(p[i] >= 0.0, ErrorKind::kInvalidArgument,
            what + ": negative probability");
  }
  const double mass = p.sum();
  if (std::abs(mass - 1.0) > kRenormTol) {
    std::ostringstream msg;
    msg << what << ": mass " << mass << " is not 1";
    fail(ErrorKind::kInvalidArgument, msg.str());
  }
  if (mass != 1.0) p /= mass;
}

Categorical::Categorical(Vec probs) : probs_(std::move(probs)) {
  check_simplex(probs_, "Categorical");
}

Categorical Categorical::uniform(int n) {
  require(n > 0, ErrorKind::kInvalidArgument, "Categorical::uniform: n < 1");
  return Categorical(Vec::Constant(n, 1.0 / n));
}

Categorical Categorical::point_mass(int n, int i) {
  require(i >= 0 && i < n, ErrorKind::kInvalidArgument,
          "Categorical::point_mass: index out of range");
  Vec p = Vec::Zero(n);
  p[i] = 1.0;
  return Categorical(std::move(p));
}

SignalingPolicy::SignalingPolicy(Mat probs, std::string id)
    : probs_(std::move(probs)), id_(std::move(id)) {
  require(probs_.rows() > 0 && probs_.cols() > 0, ErrorKind::kInvalidArgument,
          "SignalingPolicy: empty matrix");
  for (Eigen::Index x = 0; x < probs_.rows(); ++x) {
    Vec row = probs_.row(x).transpose();
    check_simplex(row, "SignalingPolicy row " + std::to_string(x));
    probs_.row(x) = row.transpose();
  }
}

SignalingPolicy SignalingPolicy::uniform(int n_states, int n_signals,
                                         std::string id) {
  return SignalingPolicy(Mat::Constant(n_states, n_signals, 1.0 / n_signals),
                         std::move(id));
}

SignalingPolicy SignalingPolicy::identity(int n, std::string id) {
  return SignalingPolicy(Mat::Identity(n, n), std::move(id));
}

Vec Scenario::obs_marginal() const {
  return obs_likelihood.transpose() * prior.probs();
}

Scenario make_scenario(Categorical prior, Mat obs_likelihood,
                       Mat receiver_reward, Mat sender_reward,
                       int n_signals) {
  const int nx = prior.size();
  require(obs_likelihood.rows() == nx && obs_likelihood.cols() > 0,
          ErrorKind::kInvalidArgument,
          "scenario: obs_likelihood must be n_states x n_obs");
  require(receiver_reward.rows() == nx && receiver_reward.cols() > 0,
          ErrorKind::kInvalidArgument,
          "scenario: receiver_reward must be n_states x n_actions");
  require(sender_reward.rows() == nx &&
              sender_reward.cols() == receiver_reward.cols(),
          ErrorKind::kInvalidArgument,
          "scenario: reward matrices disagree in shape");
  require(n_signals > 0, ErrorKind::kInvalidArgument,
          "scenario: n_signals must be positive");
  require(receiver_reward.allFinite() && sender_reward.allFinite(),
          ErrorKind::kInvalidArgument, "scenario: non-finite reward");
  for (int x = 0; x < nx; ++x) {
    Vec row = obs_likelihood.row(x).transpose();
    check_simplex(row, "obs_likelihood row " + std::to_string(x));
    obs_likelihood.row(x) = row.transpose();
  }
  Scenario sc;
  sc.n_states = nx;
  sc.n_obs = static_cast<int>(obs_likelihood.cols());
  sc.n_signals = n_signals;
  sc.n_actions = static_cast<int>(receiver_reward.cols());
  sc.prior = std::move(prior);
  sc.obs_likelihood = std::move(obs_likelihood);
  sc.receiver_reward = std::move(receiver_reward);
  sc.sender_reward = std::move(sender_reward);
  return sc;
}

Scenario reference_scenario() {
  Vec prior(3);
  prior << 0.50, 0.35, 0.15;
  Mat lik(3, 3), rr(3, 3), rs(3, 3);
  lik << 0.70, 0.25, 0.05,
         0.15, 0.60, 0.25,
         0.05, 0.25, 0.70;
  rr << 20, 6, -20,
        10, 5, -5,
        -100, -10, 30;
  rs << 8, 4, -50,
        -100, 1, -20,
        -800, -50, 10;
  Scenario sc = make_scenario(Categorical(prior), lik, rr, rs, 3);
  sc.state_names = {"S", "C", "U"};
  sc.action_names = {"N", "C", "D"};
  return sc;
}

void check_policy(const Scenario& scenario, const SignalingPolicy& policy) {
  require(policy.n_states() == scenario.n_states &&
              policy.n_signals() == scenario.n_signals,
          ErrorKind::kInvalidArgument,
          "policy shape does not match the scenario");
}

Categorical posterior_from_signal(const Scenario& scenario,
                                  const SignalingPolicy& policy, int signal) {
  check_policy(scenario, policy);
  require(signal >= 0 && signal < scenario.n_signals,
          ErrorKind::kInvalidArgument, "signal index out of range");
  Vec w = policy.probs().col(signal).cwiseProduct(scenario.prior.probs());
  const double z = w.sum();
  require(z > 0.0, ErrorKind::kUnreachableSignal,
          "unreachable signal " + std::to_string(signal));
  return Categorical(w / z);
}

Categorical receiver_posterior(const SignalingPolicy& policy,
                               const Categorical& belief, int signal) {
  require(belief.size() == policy.n_states(), ErrorKind::kInvalidArgument,
          "belief size does not match the policy");
  require(signal >= 0 && signal < policy.n_signals(),
          ErrorKind::kInvalidArgument, "signal index out of range");
  Vec w = policy.probs().col(signal).cwiseProduct(belief.probs());
  const double z = w.sum();
  require(z > 0.0, ErrorKind::kBeliefIncompatible,
          "belief-incompatible signal " + std::to_string(signal));
  return Categorical(w / z);
}

int argmax_first(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int best_response(const Vec& belief, const Mat& rewards) {
  require(belief.size() == rewards.rows(), ErrorKind::kInvalidArgument,
          "best_response: belief and reward shapes disagree");
  return argmax_first(rewards.transpose() * belief);
}

JointYS joint_ys(const Scenario& scenario, const SignalingPolicy& policy) {
  check_policy(scenario, policy);
  // L^T diag(mu) Pi
  return {scenario.obs_likelihood.transpose() *
          scenario.prior.probs().asDiagonal() * policy.probs()};
}

double classical_value(const Scenario& scenario,
                       const SignalingPolicy& policy) {
  check_policy(scenario, policy);
  const Vec& mu = scenario.prior.probs();
  double value = 0.0;
  for (int s = 0; s < scenario.n_signals; ++s) {
    Vec w = policy.probs().col(s).cwiseProduct(mu);
    if (w.sum() <= 0.0) continue;
    const int u = best_response(Vec(w / w.sum()), scenario.receiver_reward);
    value += w.dot(scenario.sender_reward.col(u));
  }
  return value;
}

int classical_optimal_index(const Scenario& scenario,
                            const std::vector<SignalingPolicy>& candidates) {
  require(!candidates.empty(), ErrorKind::kEmptyInput,
          "classical_optimal_policy: empty candidate list");
  int best = 0;
  double best_value = classical_value(scenario, candidates[0]);
  for (int k = 1; k < static_cast<int>(candidates.size()); ++k) {
    const double v = classical_value(scenario, candidates[k]);
    if (v > best_value) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

SignalingPolicy classical_optimal_policy(
    const Scenario& scenario, const std::vector<SignalingPolicy>& candidates) {
  return candidates[classical_optimal_index(scenario, candidates)];
}

double tv_distance(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), ErrorKind::kInvalidArgument,
          "tv_distance: size mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace rbp
