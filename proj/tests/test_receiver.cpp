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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "rbp/domain.hpp"
#include "rbp/error.hpp"
#include "rbp/receiver.hpp"
#include "rbp/rng.hpp"

namespace rbp {
namespace {

TEST(Rng, DeriveSeedSeparatesStagesAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* stage : {"data", "train", "split", "test"}) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, stage, i));
  }
  EXPECT_EQ(seen.size(), 200u);
  EXPECT_EQ(derive_seed(7, "data", 3), derive_seed(7, "data", 3));
  EXPECT_NE(derive_seed(7, "data", 3), derive_seed(8, "data", 3));
}

TEST(Rng, CategoricalFrequencies) {
  Vec p(3);
  p << 0.2, 0.0, 0.8;
  Rng rng(1);
  std::vector<int> counts(3, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(p, rng)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.01);
}

TEST(Rng, UniformSimplexAndPermutation) {
  Rng rng(2);
  Vec mean = Vec::Zero(4);
  for (int i = 0; i < 20000; ++i) {
    const Vec d = uniform_simplex(4, rng);
    EXPECT_NEAR(d.sum(), 1.0, 1e-12);
    EXPECT_GE(d.minCoeff(), 0.0);
    mean += d;
  }
  mean /= 20000.0;
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(mean[i], 0.25, 0.01);
  auto perm = permutation(10, rng);
  std::sort(perm.begin(), perm.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(perm[i], i);
}

TEST(BeliefFunction, ExactBayesIsSenderPosteriorOverObservation) {
  const Scenario sc = reference_scenario();
  const auto fn =
      make_belief_function(BeliefKind::kExactBayes, sc, 0.0, 0, 1.0, 0.0);
  for (int y = 0; y < 3; ++y) {
    Vec expect(3);
    for (int x = 0; x < 3; ++x) expect[x] = sc.prior[x] * sc.obs_likelihood(x, y);
    expect /= expect.sum();
    EXPECT_TRUE(fn.belief(sc, y).probs().isApprox(expect, 1e-14));
  }
}

TEST(BeliefFunction, TemperingRaisesTheLikelihoodToGamma) {
  const Scenario sc = reference_scenario();
  EXPECT_THROW(make_belief_function(BeliefKind::kMisspecifiedPrior, sc, 0.0, 0,
                                    0.0, 0.0),
               Error);
  const auto half = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                         0.0, 0, 0.5, 0.0);
  Vec expect(3);
  for (int x = 0; x < 3; ++x) {
    expect[x] = sc.prior[x] * std::sqrt(sc.obs_likelihood(x, 0));
  }
  expect /= expect.sum();
  EXPECT_TRUE(half.belief(sc, 0).probs().isApprox(expect, 1e-14));
}

TEST(BeliefFunction, MisspecifiedPriorIsDeterministicInSeed) {
  const Scenario sc = reference_scenario();
  const auto a = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                      0.25, 99, 1.0, 0.0);
  const auto b = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                      0.25, 99, 1.0, 0.0);
  const auto c = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                      0.25, 100, 1.0, 0.0);
  ASSERT_TRUE(a.misspecified_prior.has_value());
  EXPECT_EQ(a.misspecified_prior->probs(), b.misspecified_prior->probs());
  EXPECT_NE(a.misspecified_prior->probs(), c.misspecified_prior->probs());
}

TEST(BeliefFunction, ZeroDeviationKeepsThePrior) {
  const Scenario sc = reference_scenario();
  const auto fn = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                       0.0, 5, 1.0, 0.0);
  EXPECT_TRUE(fn.misspecified_prior->probs().isApprox(sc.prior.probs(), 1e-15));
}

TEST(PerturbPrior, AverageDeviationMatchesTarget) {
  const Scenario sc = reference_scenario();
  double tv = 0.0;
  const int n = 1000;
  for (int seed = 0; seed < n; ++seed) {
    const auto fn = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                         0.25, seed, 1.0, 0.0);
    tv += tv_distance(fn.misspecified_prior->probs(), sc.prior.probs());
  }
  EXPECT_GE(tv / n, 0.20);
  EXPECT_LE(tv / n, 0.30);
}

TEST(BeliefFunction, TabularValidatesShape) {
  const Scenario sc = reference_scenario();
  std::vector<Categorical> two(2, Categorical::uniform(3));
  EXPECT_THROW(make_tabular_belief(sc, two), Error);
  std::vector<Categorical> three(3, Categorical::uniform(3));
  const auto fn = make_tabular_belief(sc, three);
  EXPECT_TRUE(fn.belief(sc, 1).probs().isApprox(Vec::Constant(3, 1.0 / 3)));
}

TEST(ActionDistribution, ZeroTemperatureIsOneHot) {
  const Scenario sc = reference_scenario();
  const auto fn =
      make_belief_function(BeliefKind::kExactBayes, sc, 0.0, 0, 1.0, 0.0);
  const auto pi = SignalingPolicy::identity(3);
  for (int y = 0; y < 3; ++y) {
    for (int s = 0; s < 3; ++s) {
      const Vec d = action_distribution(sc, pi, fn, y, s);
      EXPECT_DOUBLE_EQ(d.sum(), 1.0);
      EXPECT_DOUBLE_EQ(d.maxCoeff(), 1.0);
    }
  }
  // Signal 2 reveals U, so the receiver disconnects.
  EXPECT_DOUBLE_EQ(action_distribution(sc, pi, fn, 0, 2)[2], 1.0);
}

TEST(ActionDistribution, SoftmaxMatchesHandComputation) {
  const Scenario sc = reference_scenario();
  std::vector<Categorical> table(3, Categorical::uniform(3));
  const auto fn = make_tabular_belief(sc, table, 2.0);
  const auto pi = SignalingPolicy::uniform(3, 3);
  const Vec v = sc.receiver_reward.transpose() * Vec::Constant(3, 1.0 / 3);
  Vec expect = (v.array() / 2.0).exp();
  expect /= expect.sum();
  EXPECT_TRUE(action_distribution(sc, pi, fn, 1, 1).isApprox(expect, 1e-12));
}

TEST(ReceiverAct, DeterministicReceiverConsumesNoRandomness) {
  const Scenario sc = reference_scenario();
  const auto fn =
      make_belief_function(BeliefKind::kExactBayes, sc, 0.0, 0, 1.0, 0.0);
  Rng a(4);
  Rng b(4);
  receiver_act(sc, SignalingPolicy::identity(3), fn, 0, 0, a);
  EXPECT_EQ(a(), b());
}

TEST(PolicyRegistry, IdsAndDuplicates) {
  PolicyRegistry reg;
  reg.add(SignalingPolicy::uniform(3, 3));
  reg.add(SignalingPolicy::identity(3, "rev"));
  EXPECT_TRUE(reg.contains("p0"));
  EXPECT_TRUE(reg.contains("rev"));
  EXPECT_EQ(reg.size(), 2);
  EXPECT_THROW(reg.add(SignalingPolicy::identity(3, "rev")), Error);
  EXPECT_THROW(reg.at("missing"), Error);
}

TEST(GenerateDataset, CountsAndReproducibility) {
  const Scenario sc = reference_scenario();
  const auto fn = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                       0.25, 3, 1.0, 1.0);
  const std::vector<SignalingPolicy> pols = {
      SignalingPolicy::uniform(3, 3, "a"), SignalingPolicy::identity(3, "b")};
  Rng r1(8);
  Rng r2(8);
  const Dataset d1 = generate_dataset(sc, pols, 50, fn, r1);
  const Dataset d2 = generate_dataset(sc, pols, 50, fn, r2);
  ASSERT_EQ(d1.records.size(), 100u);
  for (size_t i = 0; i < d1.records.size(); ++i) {
    EXPECT_EQ(d1.records[i].action, d2.records[i].action);
    EXPECT_EQ(d1.records[i].policy_id, d2.records[i].policy_id);
  }
  EXPECT_NO_THROW(d1.validate(sc));
}

TEST(GenerateDataset, RejectsEmptyInputs) {
  const Scenario sc = reference_scenario();
  const auto fn =
      make_belief_function(BeliefKind::kExactBayes, sc, 0.0, 0, 1.0, 0.0);
  Rng rng(1);
  EXPECT_THROW(generate_dataset(sc, {}, 10, fn, rng), Error);
  EXPECT_THROW(generate_dataset(sc, {SignalingPolicy::uniform(3, 3)}, 0, fn, rng),
               Error);
}

TEST(SimulateRecords, EmpiricalActionLawMatchesExact) {
  const Scenario sc = reference_scenario();
  const auto fn = make_belief_function(BeliefKind::kMisspecifiedPrior, sc,
                                       0.25, 3, 1.0, 1.0);
  Mat m(3, 3);
  m << 0.6, 0.2, 0.2, 0.2, 0.6, 0.2, 0.2, 0.2, 0.6;
  const SignalingPolicy pi(m);
  Rng rng(12);
  const int n = 60000;
  const auto recs = simulate_records(sc, pi, fn, n, rng);
  std::map<std::pair<int, int>, Vec> counts;
  for (const auto& r : recs) {
    auto& c = counts.try_emplace({r.obs, r.signal}, Vec::Zero(3)).first->second;
    c[r.action] += 1.0;
  }
  for (const auto& [key, c] : counts) {
    if (c.sum() < 2000) continue;
    const Vec exact = action_distribution(sc, pi, fn, key.first, key.second);
    EXPECT_LT(tv_distance(c / c.sum(), exact), 0.03);
  }
}

}  // namespace
}  // namespace rbp
