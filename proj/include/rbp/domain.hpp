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

// Finite persuasion games: distributions, signaling policies, posteriors,
// best responses and the classical sender problem.

#ifndef RBP_DOMAIN_HPP_
#define RBP_DOMAIN_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rbp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Simplex tolerances. Inputs within kRenormTol of unit mass are renormalized,
// anything further off is rejected.
inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kRenormTol = 1e-6;

// Validates and renormalizes a probability vector in place. `what` names the
// object in the error message.
void check_simplex(Eigen::Ref<Vec> p, const std::string& what);

class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(Vec probs);

  static Categorical uniform(int n);
  static Categorical point_mass(int n, int i);

  const Vec& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }

 private:
  Vec probs_;
};

class SignalingPolicy {
 public:
  SignalingPolicy() = default;
  explicit SignalingPolicy(Mat probs, std::string id = "");

  static SignalingPolicy uniform(int n_states, int n_signals,
                                 std::string id = "");
  static SignalingPolicy identity(int n, std::string id = "");

  const Mat& probs() const { return probs_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_signals() const { return static_cast<int>(probs_.cols()); }
  double operator()(int x, int s) const { return probs_(x, s); }

 private:
  Mat probs_;
  std::string id_;
};

struct Scenario {
  int n_states = 0;
  int n_obs = 0;
  int n_signals = 0;
  int n_actions = 0;
  Categorical prior;
  Mat obs_likelihood;   // n_states x n_obs
  Mat receiver_reward;  // n_states x n_actions
  Mat sender_reward;    // n_states x n_actions
  // Display labels, optional.
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;

  double sender_min() const { return sender_reward.minCoeff(); }
  double sender_max() const { return sender_reward.maxCoeff(); }
  // Marginal law of the observation, independent of the policy.
  Vec obs_marginal() const;
};

// Checks dimensions, simplex rows and finiteness; renormalizes the
// likelihood rows. Throws rbp::Error on violation.
Scenario make_scenario(Categorical prior, Mat obs_likelihood,
                       Mat receiver_reward, Mat sender_reward,
                       int n_signals);

// The three-state demand-response game: states S, C, U (stable, congested,
// unstable), actions N, C, D (normal, curtail, disconnect).
Scenario reference_scenario();

void check_policy(const Scenario& scenario, const SignalingPolicy& policy);

// Law of (Y, S) under a policy: n_obs x n_signals.
struct JointYS {
  Mat probs;
};

// p(x | s) proportional to pi(s | x) mu(x). Throws kUnreachableSignal when
// the signal has zero marginal.
Categorical posterior_from_signal(const Scenario& scenario,
                                  const SignalingPolicy& policy, int signal);

// p_r(x | y, s) proportional to pi(s | x) theta(y)(x). Throws
// kBeliefIncompatible on a zero denominator.
Categorical receiver_posterior(const SignalingPolicy& policy,
                               const Categorical& belief, int signal);

// Expected-reward argmax; the smallest index wins ties.
int best_response(const Vec& belief, const Mat& rewards);
inline int best_response(const Categorical& belief, const Mat& rewards) {
  return best_response(belief.probs(), rewards);
}

// First index of the maximum, the tie rule used everywhere.
int argmax_first(const Vec& v);

JointYS joint_ys(const Scenario& scenario, const SignalingPolicy& policy);

// Sender value when a Bayesian receiver with the true prior ignores its
// observation. Zero-marginal signals contribute nothing.
double classical_value(const Scenario& scenario, const SignalingPolicy& policy);

// Index of the first candidate maximizing classical_value.
int classical_optimal_index(const Scenario& scenario,
                            const std::vector<SignalingPolicy>& candidates);
SignalingPolicy classical_optimal_policy(
    const Scenario& scenario, const std::vector<SignalingPolicy>& candidates);

// Half-L1 distance.
double tv_distance(const Vec& a, const Vec& b);

}  // namespace rbp

#endif  // RBP_DOMAIN_HPP_
