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

#include "rbp/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbp {

Predictor init_predictor(const std::vector<int>& dims, double dropout_rate,
                         Rng& rng) {
  Predictor p = zero_predictor<double>(dims, dropout_rate);
  for (int l = 0; l < p.n_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) {
      p.weights[l].data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
      p.biases[l][i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
  }
  return p;
}

int encoding_size(const Scenario& scenario) {
  return scenario.n_obs + scenario.n_signals +
         scenario.n_states * scenario.n_signals;
}

Vec encode(const Scenario& scenario, int obs, int signal,
           const SignalingPolicy& policy) {
  check_policy(scenario, policy);
  require(obs >= 0 && obs < scenario.n_obs && signal >= 0 &&
              signal < scenario.n_signals,
          ErrorKind::kInvalidArgument, "encode: index out of range");
  Vec f = Vec::Zero(encoding_size(scenario));
  f[obs] = 1.0;
  f[scenario.n_obs + signal] = 1.0;
  int k = scenario.n_obs + scenario.n_signals;
  for (int x = 0; x < scenario.n_states; ++x) {
    for (int s = 0; s < scenario.n_signals; ++s) f[k++] = policy(x, s);
  }
  return f;
}

Vec predict_proba(const Predictor& p, const Scenario& scenario, int obs,
                  int signal, const SignalingPolicy& policy) {
  return forward(p, encode(scenario, obs, signal, policy));
}

int predict_action(const Predictor& p, const Scenario& scenario, int obs,
                   int signal, const SignalingPolicy& policy) {
  return argmax_first(predict_proba(p, scenario, obs, signal, policy));
}

double squared_weight_norm(const Predictor& p) {
  double acc = 0.0;
  for (const auto& w : p.weights) acc += w.squaredNorm();
  return acc;
}

namespace {

// Forward with cached activations, then backprop of the mean cross-entropy.
// With `rng` set, hidden activations get inverted dropout. Returns the mean
// cross-entropy; the gradient excludes the L2 term.
double cross_entropy_backprop(const Predictor& p, const Mat& features,
                              const std::vector<int>& labels, Rng* rng,
                              Gradient* g) {
  const Eigen::Index n = features.cols();
  require(n > 0, ErrorKind::kEmptyInput, "empty batch");
  require(static_cast<Eigen::Index>(labels.size()) == n,
          ErrorKind::kInvalidArgument, "labels and features disagree in size");
  require(features.rows() == p.input_dim(), ErrorKind::kInvalidArgument,
          "encoding width does not match predictor input");
  const int depth = p.n_layers();
  const bool drop = rng != nullptr && p.dropout_rate > 0.0;
  const double keep_scale = 1.0 / (1.0 - p.dropout_rate);

  std::vector<Mat> acts(depth);   // input to layer l
  std::vector<Mat> masks(depth);  // relu' * dropout scale for hidden layers
  acts[0] = features;
  Mat z;
  for (int l = 0; l < depth; ++l) {
    z = p.weights[l] * acts[l];
    z.colwise() += p.biases[l];
    if (l + 1 == depth) break;
    Mat& m = masks[l + 1];
    m = (z.array() > 0.0).cast<double>().matrix();
    if (drop) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] *= uniform01(*rng) < p.dropout_rate ? 0.0 : keep_scale;
      }
    }
    acts[l + 1] = z.cwiseProduct(m);
  }

  // z now holds the output logits.
  double ce = 0.0;
  Mat probs(z.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int y = labels[j];
    require(y >= 0 && y < z.rows(), ErrorKind::kInvalidArgument,
            "label out of range");
    const double mx = z.col(j).maxCoeff();
    const Vec e = (z.col(j).array() - mx).exp().matrix();
    const double se = e.sum();
    ce -= z(y, j) - mx - std::log(se);
    probs.col(j) = e / se;
  }
  ce /= static_cast<double>(n);
  if (g == nullptr) return ce;

  g->d_weights.assign(depth, Mat());
  g->d_biases.assign(depth, Vec());
  Mat delta = probs;
  for (Eigen::Index j = 0; j < n; ++j) delta(labels[j], j) -= 1.0;
  delta /= static_cast<double>(n);
  for (int l = depth - 1; l >= 0; --l) {
    g->d_weights[l] = delta * acts[l].transpose();
    g->d_biases[l] = delta.rowwise().sum();
    if (l > 0) delta = (p.weights[l].transpose() * delta).cwiseProduct(masks[l]);
  }
  return ce;
}

}  // namespace

double loss(const Predictor& p, const Mat& features,
            const std::vector<int>& labels, double l2_coeff) {
  require(l2_coeff >= 0.0, ErrorKind::kInvalidArgument,
          "l2 coefficient must be non-negative");
  return cross_entropy_backprop(p, features, labels, nullptr, nullptr) +
         l2_coeff * squared_weight_norm(p);
}

Gradient grad(const Predictor& p, const Mat& features,
              const std::vector<int>& labels, double l2_coeff) {
  Gradient g;
  cross_entropy_backprop(p, features, labels, nullptr, &g);
  for (int l = 0; l < p.n_layers(); ++l) {
    g.d_weights[l] += 2.0 * l2_coeff * p.weights[l];
  }
  return g;
}

void TrainConfig::validate() const {
  require(l2_coeff >= 0.0, ErrorKind::kConfig, "l2_coeff must be >= 0");
  require(learning_rate > 0.0, ErrorKind::kConfig, "learning_rate must be > 0");
  require(batch_size >= 1, ErrorKind::kConfig, "batch_size must be >= 1");
  require(max_epochs >= 1, ErrorKind::kConfig, "max_epochs must be >= 1");
  require(patience >= 1, ErrorKind::kConfig, "patience must be >= 1");
  require(lr_decay_factor > 0.0 && lr_decay_factor < 1.0, ErrorKind::kConfig,
          "lr_decay_factor must lie in (0, 1)");
  require(lr_patience >= 0, ErrorKind::kConfig, "lr_patience must be >= 0");
  require(val_fraction > 0.0 && val_fraction < 1.0, ErrorKind::kConfig,
          "val_fraction must lie in (0, 1)");
  require(improvement_threshold >= 0.0, ErrorKind::kConfig,
          "improvement_threshold must be >= 0");
}

EncodedData encode_records(const Scenario& scenario,
                           const std::vector<InteractionRecord>& records,
                           const PolicyRegistry& policies) {
  EncodedData out;
  out.features.resize(encoding_size(scenario),
                      static_cast<Eigen::Index>(records.size()));
  out.labels.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out.features.col(i) =
        encode(scenario, r.obs, r.signal, policies.at(r.policy_id));
    out.labels.push_back(r.action);
  }
  return out;
}

double cross_entropy(const Predictor& p, const EncodedData& data) {
  return cross_entropy_backprop(p, data.features, data.labels, nullptr,
                                nullptr);
}

namespace {

EncodedData take_columns(const EncodedData& d, const std::vector<int>& idx,
                         size_t begin, size_t end) {
  EncodedData out;
  out.features.resize(d.features.rows(), static_cast<Eigen::Index>(end - begin));
  out.labels.resize(end - begin);
  for (size_t i = begin; i < end; ++i) {
    out.features.col(i - begin) = d.features.col(idx[i]);
    out.labels[i - begin] = d.labels[idx[i]];
  }
  return out;
}

struct AdamState {
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step = 0;

  explicit AdamState(const Predictor& p) {
    for (int l = 0; l < p.n_layers(); ++l) {
      m_w.push_back(Mat::Zero(p.weights[l].rows(), p.weights[l].cols()));
      v_w.push_back(m_w.back());
      m_b.push_back(Vec::Zero(p.biases[l].size()));
      v_b.push_back(m_b.back());
    }
  }
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename T>
void adam_update(T& param, const T& g, T& m, T& v, double lr, double c1,
                 double c2) {
  m = kBeta1 * m + (1.0 - kBeta1) * g;
  v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
  param.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
}

// Decoupled weight decay on weights, then the Adam step on the
// cross-entropy gradient.
void adamw_step(Predictor& p, const Gradient& g, AdamState& st, double lr,
                double l2) {
  ++st.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.step));
  for (int l = 0; l < p.n_layers(); ++l) {
    p.weights[l] *= 1.0 - lr * l2;
    adam_update(p.weights[l], g.d_weights[l], st.m_w[l], st.v_w[l], lr, c1, c2);
    adam_update(p.biases[l], g.d_biases[l], st.m_b[l], st.v_b[l], lr, c1, c2);
  }
}

bool improves(double value, double best, double threshold) {
  return value < best * (best >= 0.0 ? 1.0 - threshold : 1.0 + threshold);
}

}  // namespace

Predictor train(const Dataset& dataset, const Scenario& scenario,
                const std::vector<int>& hidden, double dropout_rate,
                const TrainConfig& config, Rng& rng, TrainHistory* history) {
  config.validate();
  dataset.validate(scenario);
  const EncodedData all =
      encode_records(scenario, dataset.records, dataset.policies);
  const int n = static_cast<int>(dataset.records.size());
  const int n_val = static_cast<int>(std::lround(config.val_fraction * n));
  require(n_val >= 1 && n - n_val >= 1, ErrorKind::kInvalidArgument,
          "train: val_fraction leaves an empty training or validation set");
  const std::vector<int> order = permutation(n, rng);
  const EncodedData val = take_columns(all, order, 0, n_val);
  const EncodedData tr = take_columns(all, order, n_val, n);
  const int n_tr = n - n_val;

  std::vector<int> dims = {encoding_size(scenario)};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(scenario.n_actions);
  Predictor p = init_predictor(dims, dropout_rate, rng);
  Predictor best = p;

  AdamState adam(p);
  double lr = config.learning_rate;
  double best_val = std::numeric_limits<double>::infinity();
  double stop_ref = best_val, plateau_ref = best_val;
  int stop_bad = 0, plateau_bad = 0;
  TrainHistory local;
  std::vector<int> idx(n_tr);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    idx = permutation(n_tr, rng);
    for (int b = 0; b < n_tr; b += config.batch_size) {
      const int e = std::min(n_tr, b + config.batch_size);
      const EncodedData batch = take_columns(tr, idx, b, e);
      Gradient g;
      const double ce =
          cross_entropy_backprop(p, batch.features, batch.labels, &rng, &g);
      require(std::isfinite(ce), ErrorKind::kNumerical,
              "non-finite training loss at epoch " + std::to_string(epoch));
      adamw_step(p, g, adam, lr, config.l2_coeff);
    }
    const double tr_loss = cross_entropy(p, tr);
    const double val_loss = cross_entropy(p, val);
    require(std::isfinite(tr_loss) && std::isfinite(val_loss),
            ErrorKind::kNumerical,
            "non-finite loss after epoch " + std::to_string(epoch));
    local.epochs.push_back({epoch, tr_loss, val_loss, lr});

    if (val_loss < best_val) {
      best_val = val_loss;
      best = p;
      local.best_epoch = epoch;
    }
    // Plateau schedule: decay once the counter exceeds lr_patience.
    if (improves(val_loss, plateau_ref, config.improvement_threshold)) {
      plateau_ref = val_loss;
      plateau_bad = 0;
    } else if (++plateau_bad > config.lr_patience) {
      lr *= config.lr_decay_factor;
      plateau_bad = 0;
    }
    if (improves(val_loss, stop_ref, config.improvement_threshold)) {
      stop_ref = val_loss;
      stop_bad = 0;
    } else if (++stop_bad >= config.patience) {
      break;
    }
  }
  local.best_val_loss = best_val;
  if (history != nullptr) *history = std::move(local);
  return best;
}

}  // namespace rbp
