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

// Serialization. Structured artifacts are JSON; doubles are written with
// round-trip precision, so dumps reload bit-exact. Datasets are CSV.

#ifndef RBP_IO_HPP_
#define RBP_IO_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "rbp/conformal.hpp"
#include "rbp/domain.hpp"
#include "rbp/neural.hpp"
#include "rbp/receiver.hpp"

namespace rbp {

using Json = nlohmann::ordered_json;

// Stamp carried by every artifact.
struct ArtifactMeta {
  std::uint64_t seed = 0;
  std::string fingerprint;
};

std::string fingerprint_of(const Json& j);

Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j, const std::string& what);

Json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j);

Json policy_to_json(const SignalingPolicy& p);
SignalingPolicy policy_from_json(const Json& j);

Json belief_to_json(const BeliefFunction& fn);
BeliefFunction belief_from_json(const Json& j, const Scenario& scenario);

Json registry_to_json(const PolicyRegistry& reg, const ArtifactMeta& meta);
PolicyRegistry registry_from_json(const Json& j);

Json predictor_to_json(const Predictor& p, const ArtifactMeta& meta);
Predictor predictor_from_json(const Json& j);

Json calibration_to_json(const ConformalCalibration& cal,
                         const ArtifactMeta& meta);
ConformalCalibration calibration_from_json(const Json& j);

// Dataset CSV: a "# rbp-dataset v1 seed=<n> fingerprint=<hex>" line, the
// header x,y,s,policy_id,u, then one record per line.
std::string dataset_to_csv(const Dataset& d, const ArtifactMeta& meta);
// Records only; the registry is loaded separately.
std::vector<InteractionRecord> records_from_csv(const std::string& text,
                                                ArtifactMeta* meta = nullptr);

ArtifactMeta meta_from_json(const Json& j);
Json meta_to_json(const ArtifactMeta& meta);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace rbp

#endif  // RBP_IO_HPP_
