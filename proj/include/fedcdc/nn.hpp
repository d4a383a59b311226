//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fedcdc/dataset.hpp"
#include "fedcdc/types.hpp"

namespace fedcdc::nn {

using data::Matrix;
using Vector = Eigen::VectorXd;

// Logit written at inactive label positions. Finite so downstream arithmetic
// never produces NaN; every softmax consumer applies the mask explicitly.
inline constexpr double kMaskedLogit = -1e9;

// Lower clamp for probabilities inside logarithms.
inline constexpr double kProbFloor = 1e-12;

/// Fully connected ReLU network whose output layer spans the global K-way
/// label universe, with a mask selecting the labels this model is trained for.
///
/// All weights and biases live in one flat parameter vector so aggregation,
/// optimisation and checkpointing operate on a single contiguous buffer.
/// Layer l stores W_l (in x out, row-major) followed by b_l (out).
class Mlp
{
public:
  struct Cache
  {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> pre_relu;     // hidden pre-activations
  };

  Mlp() = default;

  /// He-normal weights, zero biases. `dims` = {input, hidden..., K}.
  Mlp(std::vector<std::size_t> dims, LabelSet const &active, std::uint64_t seed);

  static Mlp zeros(std::vector<std::size_t> dims, LabelSet const &active);

  std::size_t input_dim() const noexcept
  {
    return dims_.front();
  }
  std::size_t num_classes() const noexcept
  {
    return dims_.back();
  }
  std::size_t num_layers() const noexcept
  {
    return dims_.size() - 1;
  }
  std::vector<std::size_t> const &dims() const noexcept
  {
    return dims_;
  }
  LabelMask const &active_mask() const noexcept
  {
    return active_;
  }
  LabelSet active_labels() const
  {
    return mask_to_set(active_);
  }
  void set_active(LabelSet const &active);

  Vector &params() noexcept
  {
    return params_;
  }
  Vector const &params() const noexcept
  {
    return params_;
  }

  Eigen::Map<Matrix const>         weight(std::size_t layer) const;
  Eigen::Map<Eigen::RowVectorXd const> bias(std::size_t layer) const;

  /// Masked logits, one row per sample.
  Matrix forward(Eigen::Ref<Matrix const> const &batch) const;
  Matrix forward(Eigen::Ref<Matrix const> const &batch, Cache &cache) const;

  /// Gradient of the loss w.r.t. the flat parameter vector given dL/dlogits.
  /// Masked positions of `grad_logits` must be zero.
  Vector backward(Cache const &cache, Matrix const &grad_logits) const;

  bool same_architecture(Mlp const &other) const noexcept;

  /// FNV-1a over the raw parameter bytes; detects any mutation.
  std::uint64_t fingerprint() const;

private:
  std::size_t weight_offset(std::size_t layer) const;

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  LabelMask                active_;
  Vector                   params_;
};

// --- probability kernels -------------------------------------------------------

/// Max-subtracted softmax over active positions; inactive entries are exactly 0.
std::vector<double> softmax(std::span<double const> logits, LabelMask const &active);

/// Row-wise masked softmax.
Matrix softmax_rows(Matrix const &logits, LabelMask const &active);

/// Shannon entropy in nats; zero entries contribute nothing.
double entropy(std::span<double const> p);

/// KL(p || q) in nats, summed over positions where p > 0.
double kl_div(std::span<double const> p, std::span<double const> q);

struct LossAndGrad
{
  double loss = 0.0;
  Matrix grad;  // dL/dlogits, zero at masked positions
};

/// Mean cross-entropy of masked softmax against integer targets.
LossAndGrad cross_entropy(Matrix const &logits, std::span<ClassId const> targets,
                          LabelMask const &active);

// --- optimisation --------------------------------------------------------------

struct AdamConfig
{
  double lr    = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps   = 1e-8;
};

struct AdamState
{
  AdamState() = default;
  AdamState(std::size_t num_params, AdamConfig cfg);

  AdamConfig    config;
  Vector        m;
  Vector        v;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update applied in place.
void adam_step(AdamState &state, Vector &params, Vector const &grads);

/// One Adam step on mean cross-entropy; returns the pre-step loss.
/// Throws std::invalid_argument if a label lies outside the model's active set.
double train_step(Mlp &model, AdamState &opt, Eigen::Ref<Matrix const> const &batch,
                  std::span<ClassId const> labels);

// --- checkpoints ---------------------------------------------------------------
// One JSON object per line:
//   {"format":"fedcdc.mlp","version":1,"dims":[...],"active":[...],"params":[...]}
// `params` is the flat vector in the layout described on Mlp. Loading rejects
// other tags or versions, and a parameter count that does not match `dims`.

void save_model(Mlp const &model, std::ostream &out);
Mlp  load_model(std::istream &in);
void save_model(Mlp const &model, std::filesystem::path const &path);
Mlp  load_model(std::filesystem::path const &path);

}  // namespace fedcdc::nn
