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

#include "rbp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "rbp/error.hpp"

namespace rbp {

const char* score_variant_name(ScoreVariant v) {
  switch (v) {
    case ScoreVariant::kIndicator: return "indicator";
    case ScoreVariant::kOneMinusProb: return "one-minus-prob";
    case ScoreVariant::kNll: return "nll";
    case ScoreVariant::kAps: return "aps";
  }
  return "unknown";
}

ScoreVariant parse_score_variant(const std::string& name) {
  if (name == "indicator") return ScoreVariant::kIndicator;
  if (name == "one-minus-prob") return ScoreVariant::kOneMinusProb;
  if (name == "nll") return ScoreVariant::kNll;
  if (name == "aps") return ScoreVariant::kAps;
  fail(ErrorKind::kConfig, "unknown score kind '" + name + "'");
}

double score_from_probs(const ScoreKind& kind, const Vec& probs, int action) {
  require(action >= 0 && action < probs.size(), ErrorKind::kInvalidArgument,
          "score: action out of range");
  switch (kind.variant) {
    case ScoreVariant::kIndicator:
      return action == argmax_first(probs) ? 0.0 : 1.0;
    case ScoreVariant::kOneMinusProb:
      return 1.0 - probs[action];
    case ScoreVariant::kNll:
      require(kind.nll_epsilon > 0.0, ErrorKind::kInvalidArgument,
              "nll epsilon must be positive");
      return -std::log(probs[action] + kind.nll_epsilon);
    case ScoreVariant::kAps: {
      double mass = 0.0;
      for (Eigen::Index u = 0; u < probs.size(); ++u) {
        if (probs[u] >= probs[action]) mass += probs[u];
      }
      return mass;
    }
  }
  fail(ErrorKind::kInvalidArgument, "bad score kind");
}

double score(const Predictor& p, const Scenario& scenario,
             const ScoreKind& kind, int obs, int signal,
             const SignalingPolicy& policy, int action) {
  return score_from_probs(kind, predict_proba(p, scenario, obs, signal, policy),
                          action);
}

int conformal_rank(int n, double alpha) {
  require(n >= 1, ErrorKind::kEmptyInput, "calibrate: no scores");
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::kInvalidArgument,
          "alpha must lie in (0, 1)");
  const double r = std::ceil((1.0 - alpha) * (n + 1) - 1e-9);
  return std::clamp(static_cast<int>(r), 1, n);
}

ConformalCalibration calibrate(const ScoreKind& kind,
                               std::vector<double> scores, double alpha) {
  require(!scores.empty(), ErrorKind::kEmptyInput, "calibrate: no scores");
  for (double s : scores) {
    require(std::isfinite(s), ErrorKind::kNumerical,
            "calibrate: non-finite score");
  }
  const int rank = conformal_rank(static_cast<int>(scores.size()), alpha);
  std::sort(scores.begin(), scores.end());
  ConformalCalibration cal;
  cal.kind = kind;
  cal.alpha = alpha;
  cal.threshold = scores[rank - 1];
  cal.cal_scores = std::move(scores);
  return cal;
}

std::vector<int> set_from_probs(const ScoreKind& kind, const Vec& probs,
                                double threshold) {
  std::vector<int> out;
  for (int u = 0; u < probs.size(); ++u) {
    if (score_from_probs(kind, probs, u) <= threshold) out.push_back(u);
  }
  if (out.empty()) out.push_back(argmax_first(probs));
  return out;
}

std::vector<int> prediction_set(const Predictor& p, const Scenario& scenario,
                                const ConformalCalibration& cal, int obs,
                                int signal, const SignalingPolicy& policy) {
  return set_from_probs(cal.kind,
                        predict_proba(p, scenario, obs, signal, policy),
                        cal.threshold);
}

std::vector<double> record_scores(
    const Predictor& p, const Scenario& scenario, const ScoreKind& kind,
    const std::vector<InteractionRecord>& records,
    const PolicyResolver& resolve) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(score(p, scenario, kind, r.obs, r.signal,
                        resolve(r.policy_id), r.action));
  }
  return out;
}

CoverageReport evaluate_coverage(const Predictor& p, const Scenario& scenario,
                                 const ConformalCalibration& cal,
                                 const std::vector<InteractionRecord>& records,
                                 const PolicyResolver& resolve) {
  require(!records.empty(), ErrorKind::kEmptyInput,
          "evaluate_coverage: no test records");
  CoverageReport rep;
  long total_size = 0;
  // Sets depend only on (policy, y, s); records repeat those keys heavily.
  std::map<std::tuple<std::string, int, int>, std::vector<int>> cache;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.policy_id, r.obs, r.signal);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache
               .emplace(std::move(key),
                        prediction_set(p, scenario, cal, r.obs, r.signal,
                                       resolve(r.policy_id)))
               .first;
    }
    const auto& set = it->second;
    total_size += static_cast<long>(set.size());
    if (std::find(set.begin(), set.end(), r.action) != set.end()) ++rep.count;
  }
  rep.n = static_cast<long>(records.size());
  rep.rate = static_cast<double>(rep.count) / rep.n;
  rep.mean_set_size = static_cast<double>(total_size) / rep.n;
  return rep;
}

PolicyResolver single_policy_resolver(const SignalingPolicy& policy) {
  return [&policy](const std::string&) -> const SignalingPolicy& {
    return policy;
  };
}

ConformalCalibration recalibrate_for_policy(
    const Predictor& p, const Scenario& scenario, const SignalingPolicy& policy,
    const BeliefFunction& belief_fn, int n, double alpha,
    const ScoreKind& kind, Rng& rng) {
  const auto records = simulate_records(scenario, policy, belief_fn, n, rng);
  return calibrate(kind,
                   record_scores(p, scenario, kind, records,
                                 single_policy_resolver(policy)),
                   alpha);
}

}  // namespace rbp
