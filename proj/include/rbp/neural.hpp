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

// Action predictor f(y, s, pi) -> distribution over actions. A ReLU
// multilayer perceptron with a softmax head, trained by AdamW on
// cross-entropy.

#ifndef RBP_NEURAL_HPP_
#define RBP_NEURAL_HPP_

#include <vector>

#include <Eigen/Dense>

#include "rbp/domain.hpp"
#include "rbp/error.hpp"
#include "rbp/receiver.hpp"
#include "rbp/rng.hpp"

namespace rbp {

template <typename Scalar>
struct BasicPredictor {
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<int> layer_dims;   // input, hidden..., n_actions
  std::vector<MatrixS> weights;  // weights[l] is dims[l+1] x dims[l]
  std::vector<VectorS> biases;
  double dropout_rate = 0.0;

  int n_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
};

using Predictor = BasicPredictor<double>;

enum class Mode { kInfer, kTrain };

// Zero weights and biases, so the output is uniform.
template <typename Scalar>
BasicPredictor<Scalar> zero_predictor(const std::vector<int>& dims,
                                      double dropout_rate = 0.0) {
  require(dims.size() >= 2, ErrorKind::kInvalidArgument,
          "predictor needs at least an input and an output width");
  for (int d : dims) {
    require(d > 0, ErrorKind::kInvalidArgument, "layer widths must be positive");
  }
  require(dropout_rate >= 0.0 && dropout_rate < 1.0,
          ErrorKind::kInvalidArgument, "dropout rate must lie in [0, 1)");
  BasicPredictor<Scalar> p;
  p.layer_dims = dims;
  p.dropout_rate = dropout_rate;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    p.weights.push_back(
        BasicPredictor<Scalar>::MatrixS::Zero(dims[l + 1], dims[l]));
    p.biases.push_back(BasicPredictor<Scalar>::VectorS::Zero(dims[l + 1]));
  }
  return p;
}

// Weights and biases uniform on +-1/sqrt(fan_in).
Predictor init_predictor(const std::vector<int>& dims, double dropout_rate,
                         Rng& rng);

template <typename To, typename From>
BasicPredictor<To> cast_predictor(const BasicPredictor<From>& p) {
  BasicPredictor<To> out;
  out.layer_dims = p.layer_dims;
  out.dropout_rate = p.dropout_rate;
  for (int l = 0; l < p.n_layers(); ++l) {
    out.weights.push_back(p.weights[l].template cast<To>());
    out.biases.push_back(p.biases[l].template cast<To>());
  }
  return out;
}

int encoding_size(const Scenario& scenario);

// One-hot obs, one-hot signal, then the policy matrix flattened row-major.
Vec encode(const Scenario& scenario, int obs, int signal,
           const SignalingPolicy& policy);

// Column-wise softmax, shifted by the column max.
template <typename Derived>
typename Derived::PlainObject softmax_columns(
    const Eigen::MatrixBase<Derived>& logits) {
  typename Derived::PlainObject out = logits;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return out;
}

// Batched pass over the columns of `features`. Returns n_actions x batch
// probabilities. Train mode applies inverted dropout after every hidden
// activation and needs an rng.
template <typename Scalar>
typename BasicPredictor<Scalar>::MatrixS forward_batch(
    const BasicPredictor<Scalar>& p,
    const typename BasicPredictor<Scalar>::MatrixS& features,
    Mode mode = Mode::kInfer, Rng* rng = nullptr) {
  require(features.rows() == p.input_dim(), ErrorKind::kInvalidArgument,
          "encoding width " + std::to_string(features.rows()) +
              " does not match predictor input " +
              std::to_string(p.input_dim()));
  const bool drop = mode == Mode::kTrain && p.dropout_rate > 0.0;
  require(!drop || rng != nullptr, ErrorKind::kInvalidArgument,
          "train-mode forward needs an rng");
  const Scalar keep_scale = Scalar(1.0 / (1.0 - p.dropout_rate));
  typename BasicPredictor<Scalar>::MatrixS h = features;
  for (int l = 0; l < p.n_layers(); ++l) {
    typename BasicPredictor<Scalar>::MatrixS z = p.weights[l] * h;
    z.colwise() += p.biases[l];
    if (l + 1 == p.n_layers()) return softmax_columns(z);
    h = z.cwiseMax(Scalar(0));
    if (drop) {
      for (Eigen::Index i = 0; i < h.size(); ++i) {
        h.data()[i] = uniform01(*rng) < p.dropout_rate
                          ? Scalar(0)
                          : h.data()[i] * keep_scale;
      }
    }
  }
  return h;  // unreachable for a well-formed predictor
}

template <typename Scalar>
typename BasicPredictor<Scalar>::VectorS forward(
    const BasicPredictor<Scalar>& p,
    const typename BasicPredictor<Scalar>::VectorS& encoding,
    Mode mode = Mode::kInfer, Rng* rng = nullptr) {
  typename BasicPredictor<Scalar>::MatrixS x = encoding;
  return forward_batch(p, x, mode, rng).col(0);
}

// Action law for (obs, signal, policy), infer mode.
Vec predict_proba(const Predictor& p, const Scenario& scenario, int obs,
                  int signal, const SignalingPolicy& policy);

int predict_action(const Predictor& p, const Scenario& scenario, int obs,
                   int signal, const SignalingPolicy& policy);

// Same shapes as the parameters.
struct Gradient {
  std::vector<Mat> d_weights;
  std::vector<Vec> d_biases;
};

// Mean cross-entropy plus l2 * (sum of squared weights), biases excluded.
// Features are one column per example.
double loss(const Predictor& p, const Mat& features,
            const std::vector<int>& labels, double l2_coeff);

// Analytic gradient of `loss` for the deterministic pass.
Gradient grad(const Predictor& p, const Mat& features,
              const std::vector<int>& labels, double l2_coeff);

double squared_weight_norm(const Predictor& p);

struct TrainConfig {
  double l2_coeff = 1e-3;
  double learning_rate = 5e-3;
  int batch_size = 64;
  int max_epochs = 300;
  int patience = 30;
  double lr_decay_factor = 0.1;
  int lr_patience = 10;
  double val_fraction = 0.15;
  // Relative improvement needed to reset the plateau and stopping counters.
  double improvement_threshold = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy, infer mode
  double val_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

struct EncodedData {
  Mat features;  // encoding_size x N
  std::vector<int> labels;
};

EncodedData encode_records(const Scenario& scenario,
                           const std::vector<InteractionRecord>& records,
                           const PolicyRegistry& policies);

// Mean cross-entropy of infer-mode predictions.
double cross_entropy(const Predictor& p, const EncodedData& data);

// `hidden` lists the hidden widths; input and output widths come from the
// scenario. Returns the parameters with the best validation loss.
Predictor train(const Dataset& dataset, const Scenario& scenario,
                const std::vector<int>& hidden, double dropout_rate,
                const TrainConfig& config, Rng& rng,
                TrainHistory* history = nullptr);

}  // namespace rbp

#endif  // RBP_NEURAL_HPP_
