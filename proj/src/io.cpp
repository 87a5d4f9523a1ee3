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

#include "rbp/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rbp/error.hpp"

namespace rbp {

namespace {

constexpr int kFormatVersion = 1;

void check_format(const Json& j, const std::string& format) {
  require(j.is_object() && j.contains("format") && j["format"].is_string() &&
              j["format"].get<std::string>() == format,
          ErrorKind::kConfig, "expected a '" + format + "' document");
  require(j.contains("version") && j["version"].is_number_integer() &&
              j["version"].get<int>() == kFormatVersion,
          ErrorKind::kConfig, "unsupported " + format + " version");
}

template <typename T>
T get_field(const Json& j, const char* key, const std::string& what) {
  require(j.is_object() && j.contains(key), ErrorKind::kConfig,
          what + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, what + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string fingerprint_of(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const Json& j, const std::string& what) {
  require(j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty(),
          ErrorKind::kConfig, what + ": expected a non-empty matrix");
  const size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_array() && j[i].size() == cols, ErrorKind::kConfig,
            what + ": ragged matrix");
    for (size_t k = 0; k < cols; ++k) {
      require(j[i][k].is_number(), ErrorKind::kConfig,
              what + ": non-numeric entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vector_from_json(const Json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), ErrorKind::kConfig,
          what + ": expected a non-empty array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), ErrorKind::kConfig, what + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json scenario_to_json(const Scenario& sc) {
  Json j;
  if (!sc.state_names.empty()) j["state_names"] = sc.state_names;
  if (!sc.action_names.empty()) j["action_names"] = sc.action_names;
  j["n_signals"] = sc.n_signals;
  j["prior"] = vector_to_json(sc.prior.probs());
  j["obs_likelihood"] = matrix_to_json(sc.obs_likelihood);
  j["receiver_reward"] = matrix_to_json(sc.receiver_reward);
  j["sender_reward"] = matrix_to_json(sc.sender_reward);
  return j;
}

Scenario scenario_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::kConfig, "scenario must be an object");
  Scenario sc = make_scenario(
      Categorical(vector_from_json(j.value("prior", Json()), "prior")),
      matrix_from_json(j.value("obs_likelihood", Json()), "obs_likelihood"),
      matrix_from_json(j.value("receiver_reward", Json()), "receiver_reward"),
      matrix_from_json(j.value("sender_reward", Json()), "sender_reward"),
      get_field<int>(j, "n_signals", "scenario"));
  if (j.contains("state_names")) {
    sc.state_names = j["state_names"].get<std::vector<std::string>>();
  }
  if (j.contains("action_names")) {
    sc.action_names = j["action_names"].get<std::vector<std::string>>();
  }
  return sc;
}

Json policy_to_json(const SignalingPolicy& p) {
  Json j;
  j["id"] = p.id();
  j["probs"] = matrix_to_json(p.probs());
  return j;
}

SignalingPolicy policy_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::kConfig, "policy must be an object");
  return SignalingPolicy(matrix_from_json(j.value("probs", Json()), "policy"),
                         j.value("id", ""));
}

Json belief_to_json(const BeliefFunction& fn) {
  Json j;
  j["kind"] = belief_kind_name(fn.kind);
  j["temper_exponent"] = fn.temper_exponent;
  j["noise_temperature"] = fn.noise_temperature;
  if (fn.misspecified_prior) {
    j["misspecified_prior"] = vector_to_json(fn.misspecified_prior->probs());
  }
  if (fn.table) {
    Json t = Json::array();
    for (const auto& c : *fn.table) t.push_back(vector_to_json(c.probs()));
    j["table"] = t;
  }
  return j;
}

BeliefFunction belief_from_json(const Json& j, const Scenario& scenario) {
  BeliefFunction fn;
  fn.kind = parse_belief_kind(get_field<std::string>(j, "kind", "belief"));
  fn.temper_exponent = j.value("temper_exponent", 1.0);
  fn.noise_temperature = j.value("noise_temperature", 0.0);
  if (j.contains("misspecified_prior")) {
    fn.misspecified_prior =
        Categorical(vector_from_json(j["misspecified_prior"], "belief prior"));
  }
  if (j.contains("table")) {
    std::vector<Categorical> rows;
    for (const auto& r : j["table"]) {
      rows.emplace_back(vector_from_json(r, "belief table"));
    }
    fn.table = std::move(rows);
  }
  fn.validate(scenario);
  return fn;
}

Json meta_to_json(const ArtifactMeta& meta) {
  Json j;
  j["seed"] = meta.seed;
  j["fingerprint"] = meta.fingerprint;
  return j;
}

ArtifactMeta meta_from_json(const Json& j) {
  ArtifactMeta m;
  m.seed = get_field<std::uint64_t>(j, "seed", "artifact");
  m.fingerprint = get_field<std::string>(j, "fingerprint", "artifact");
  return m;
}

namespace {

Json stamped(const char* format, const ArtifactMeta& meta) {
  Json j;
  j["format"] = format;
  j["version"] = kFormatVersion;
  j["seed"] = meta.seed;
  j["fingerprint"] = meta.fingerprint;
  return j;
}

}  // namespace

Json registry_to_json(const PolicyRegistry& reg, const ArtifactMeta& meta) {
  Json j = stamped("rbp-policy-registry", meta);
  Json ps = Json::array();
  for (const auto& p : reg.policies()) ps.push_back(policy_to_json(p));
  j["policies"] = ps;
  return j;
}

PolicyRegistry registry_from_json(const Json& j) {
  check_format(j, "rbp-policy-registry");
  PolicyRegistry reg;
  for (const auto& p : get_field<Json>(j, "policies", "registry")) {
    reg.add(policy_from_json(p));
  }
  return reg;
}

Json predictor_to_json(const Predictor& p, const ArtifactMeta& meta) {
  Json j = stamped("rbp-predictor", meta);
  j["layer_dims"] = p.layer_dims;
  j["dropout_rate"] = p.dropout_rate;
  Json layers = Json::array();
  for (int l = 0; l < p.n_layers(); ++l) {
    Json layer;
    layer["weights"] = matrix_to_json(p.weights[l]);
    layer["biases"] = vector_to_json(p.biases[l]);
    layers.push_back(std::move(layer));
  }
  j["layers"] = layers;
  return j;
}

Predictor predictor_from_json(const Json& j) {
  check_format(j, "rbp-predictor");
  Predictor p = zero_predictor<double>(
      get_field<std::vector<int>>(j, "layer_dims", "predictor"),
      get_field<double>(j, "dropout_rate", "predictor"));
  const Json layers = get_field<Json>(j, "layers", "predictor");
  require(layers.is_array() &&
              static_cast<int>(layers.size()) == p.n_layers(),
          ErrorKind::kConfig, "predictor: layer count mismatch");
  for (int l = 0; l < p.n_layers(); ++l) {
    Mat w = matrix_from_json(layers[l].value("weights", Json()), "weights");
    Vec b = vector_from_json(layers[l].value("biases", Json()), "biases");
    require(w.rows() == p.weights[l].rows() && w.cols() == p.weights[l].cols() &&
                b.size() == p.biases[l].size(),
            ErrorKind::kConfig, "predictor: parameter shape mismatch");
    p.weights[l] = std::move(w);
    p.biases[l] = std::move(b);
  }
  return p;
}

Json calibration_to_json(const ConformalCalibration& cal,
                         const ArtifactMeta& meta) {
  Json j = stamped("rbp-calibration", meta);
  j["score_kind"] = score_variant_name(cal.kind.variant);
  j["nll_epsilon"] = cal.kind.nll_epsilon;
  j["alpha"] = cal.alpha;
  j["threshold"] = cal.threshold;
  j["cal_scores"] = cal.cal_scores;
  return j;
}

ConformalCalibration calibration_from_json(const Json& j) {
  check_format(j, "rbp-calibration");
  ConformalCalibration cal;
  cal.kind.variant =
      parse_score_variant(get_field<std::string>(j, "score_kind", "calibration"));
  cal.kind.nll_epsilon = get_field<double>(j, "nll_epsilon", "calibration");
  cal.alpha = get_field<double>(j, "alpha", "calibration");
  cal.threshold = get_field<double>(j, "threshold", "calibration");
  cal.cal_scores = get_field<std::vector<double>>(j, "cal_scores", "calibration");
  require(!cal.cal_scores.empty(), ErrorKind::kConfig,
          "calibration: no scores");
  return cal;
}

std::string dataset_to_csv(const Dataset& d, const ArtifactMeta& meta) {
  std::ostringstream out;
  out << "# rbp-dataset v" << kFormatVersion << " seed=" << meta.seed
      << " fingerprint=" << meta.fingerprint << "\n";
  out << "x,y,s,policy_id,u\n";
  for (const auto& r : d.records) {
    out << r.state << ',' << r.obs << ',' << r.signal << ',' << r.policy_id
        << ',' << r.action << '\n';
  }
  return out.str();
}

std::vector<InteractionRecord> records_from_csv(const std::string& text,
                                                ArtifactMeta* meta) {
  std::istringstream in(text);
  std::string line;
  std::vector<InteractionRecord> out;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (meta != nullptr) {
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
          if (tok.rfind("seed=", 0) == 0) {
            meta->seed = std::stoull(tok.substr(5));
          } else if (tok.rfind("fingerprint=", 0) == 0) {
            meta->fingerprint = tok.substr(12);
          }
        }
      }
      continue;
    }
    if (!header) {
      require(line == "x,y,s,policy_id,u", ErrorKind::kConfig,
              "dataset: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string f[5];
    for (int k = 0; k < 5; ++k) {
      require(static_cast<bool>(std::getline(ls, f[k], ',')),
              ErrorKind::kConfig,
              "dataset: short row at line " + std::to_string(line_no));
    }
    InteractionRecord r;
    try {
      r.state = std::stoi(f[0]);
      r.obs = std::stoi(f[1]);
      r.signal = std::stoi(f[2]);
      r.policy_id = f[3];
      r.action = std::stoi(f[4]);
    } catch (const std::exception&) {
      fail(ErrorKind::kConfig,
           "dataset: bad row at line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  require(header, ErrorKind::kConfig, "dataset: missing header");
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot write '" + path + "'");
  out << text;
  out.close();
  require(!out.fail(), ErrorKind::kIo, "write failed for '" + path + "'");
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace rbp
