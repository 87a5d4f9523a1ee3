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

// Split-conformal action sets around the predictor.

#ifndef RBP_CONFORMAL_HPP_
#define RBP_CONFORMAL_HPP_

#include <functional>
#include <string>
#include <vector>

#include "rbp/domain.hpp"
#include "rbp/neural.hpp"
#include "rbp/receiver.hpp"

namespace rbp {

enum class ScoreVariant { kIndicator, kOneMinusProb, kNll, kAps };

struct ScoreKind {
  ScoreVariant variant = ScoreVariant::kNll;
  double nll_epsilon = 1e-9;
};

const char* score_variant_name(ScoreVariant v);
ScoreVariant parse_score_variant(const std::string& name);

// Score of `action` given the predicted law `probs`.
//   indicator       1{action != argmax}
//   one-minus-prob  1 - f(action)
//   nll             -log(f(action) + eps)
//   aps             total mass of actions at least as likely as `action`
double score_from_probs(const ScoreKind& kind, const Vec& probs, int action);

double score(const Predictor& p, const Scenario& scenario,
             const ScoreKind& kind, int obs, int signal,
             const SignalingPolicy& policy, int action);

struct ConformalCalibration {
  ScoreKind kind;
  double alpha = 0.1;
  std::vector<double> cal_scores;  // sorted ascending
  double threshold = 0.0;
};

// 1-based rank ceil((1 - alpha)(n + 1)), clamped to n. A 1e-9 guard keeps
// products such as 0.9 * 10 from rounding up a whole rank.
int conformal_rank(int n, double alpha);

ConformalCalibration calibrate(const ScoreKind& kind,
                               std::vector<double> scores, double alpha);

// Ascending action indices with score <= threshold. If none qualify, the
// top-probability action alone.
std::vector<int> set_from_probs(const ScoreKind& kind, const Vec& probs,
                                double threshold);

std::vector<int> prediction_set(const Predictor& p, const Scenario& scenario,
                                const ConformalCalibration& cal, int obs,
                                int signal, const SignalingPolicy& policy);

using PolicyResolver =
    std::function<const SignalingPolicy&(const std::string& policy_id)>;

std::vector<double> record_scores(
    const Predictor& p, const Scenario& scenario, const ScoreKind& kind,
    const std::vector<InteractionRecord>& records,
    const PolicyResolver& resolve);

struct CoverageReport {
  double rate = 0.0;
  long count = 0;  // records whose action fell in the set
  long n = 0;
  double mean_set_size = 0.0;
};

CoverageReport evaluate_coverage(const Predictor& p, const Scenario& scenario,
                                 const ConformalCalibration& cal,
                                 const std::vector<InteractionRecord>& records,
                                 const PolicyResolver& resolve);

// Resolver for records that all share one policy.
PolicyResolver single_policy_resolver(const SignalingPolicy& policy);

// n fresh records under `policy`, scored and calibrated.
ConformalCalibration recalibrate_for_policy(
    const Predictor& p, const Scenario& scenario, const SignalingPolicy& policy,
    const BeliefFunction& belief_fn, int n, double alpha,
    const ScoreKind& kind, Rng& rng);

}  // namespace rbp

#endif  // RBP_CONFORMAL_HPP_
