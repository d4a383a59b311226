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
#include <span>
#include <vector>

#include "fedcdc/dataset.hpp"
#include "fedcdc/nn.hpp"
#include "fedcdc/types.hpp"

namespace fedcdc::distill {

using nn::Matrix;

struct DistillConfig
{
  double      alpha      = 1.0;  // weight of the soft KL term; 1 - alpha goes to pseudo-label CE
  std::size_t epochs     = 10;
  std::size_t batch_size = 32;
  double      lr         = 1e-3;

  void validate() const;
};

enum class TeacherWeighting
{
  Entropy,  // w_i proportional to exp(-H(softmax(z_i))), per sample
  Uniform,  // plain logit average
};

/// Frozen teachers distilled into a student whose task is `target_active`.
struct TeacherEnsemble
{
  std::vector<nn::Mlp const *> teachers;
  LabelMask                    target_active;

  // Throws std::invalid_argument if empty or a teacher shares no label with the target.
  void validate() const;
};

/// Entropy-based weights for one sample. `logits[i]` is teacher i's full K-way
/// logit vector and `masks[i]` the positions it is scored on (its active set
/// intersected with the student's). Weights are positive and sum to one.
std::vector<double> teacher_weights(std::span<std::vector<double> const> logits,
                                    std::span<LabelMask const> masks);

/// Weighted combination over student-active positions. A teacher only
/// contributes at positions inside its mask; at each position the weights of
/// contributing teachers are renormalised to sum to one. Positions outside the
/// student mask are set to nn::kMaskedLogit.
/// Throws ConfigError naming the class if a student position has no teacher.
std::vector<double> ensemble_logits(std::span<std::vector<double> const> logits,
                                    std::span<LabelMask const> masks,
                                    std::span<double const> weights,
                                    LabelMask const &student_mask);

struct LossTerms
{
  double soft  = 0.0;  // KL(P_student || P_teacher)
  double hard  = 0.0;  // CE of student against argmax(P_teacher)
  double total = 0.0;  // alpha * soft + (1 - alpha) * hard
};

/// Per-sample loss against an already combined teacher logit vector. If
/// `grad` is non-null it receives dL/dz_student (zero outside the mask).
LossTerms loss_against_target(std::span<double const> student_logits,
                              std::span<double const> target_logits,
                              LabelMask const &student_mask, double alpha,
                              std::span<double> grad = {});

/// Loss for one sample given the raw teacher logits and their active masks.
/// Teacher weights use entropy weighting over (teacher mask AND student mask).
LossTerms distill_loss(std::span<double const> student_logits, LabelMask const &student_mask,
                       std::span<std::vector<double> const> teacher_logits,
                       std::span<LabelMask const> teacher_masks, double alpha);

/// Combined teacher logits for every row of `inputs`.
Matrix ensemble_targets(TeacherEnsemble const &ensemble, Matrix const &inputs,
                        TeacherWeighting weighting);

/// Mean loss of `student` over all rows against precomputed targets.
double mean_loss(nn::Mlp const &student, Matrix const &inputs, Matrix const &targets,
                 double alpha);

struct DistillResult
{
  nn::Mlp student;
  double  initial_loss = 0.0;
  double  final_loss   = 0.0;
};

/// Minibatch Adam on the distillation loss against fixed targets.
DistillResult distill_to_targets(nn::Mlp student, Matrix const &inputs, Matrix const &targets,
                                 DistillConfig const &cfg, std::uint64_t seed);

/// Trains `student` to match the entropy-weighted ensemble on the public pool.
/// Teachers are read-only; weights are recomputed for every public sample.
DistillResult distill_train(nn::Mlp student, TeacherEnsemble const &ensemble,
                            data::UnlabeledDataset const &public_set, DistillConfig const &cfg,
                            std::uint64_t seed,
                            TeacherWeighting weighting = TeacherWeighting::Entropy);

}  // namespace fedcdc::distill
