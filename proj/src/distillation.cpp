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

#include "fedcdc/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "fedcdc/errors.hpp"

namespace fedcdc::distill {

void DistillConfig::validate() const
{
  if (!(alpha >= 0.0 && alpha <= 1.0))
  {
    throw ConfigError("distillation alpha must lie in [0,1], got " + std::to_string(alpha));
  }
  if (batch_size == 0)
  {
    throw ConfigError("distillation batch size must be positive");
  }
  if (!(lr > 0.0))
  {
    throw ConfigError("distillation learning rate must be positive");
  }
}

void TeacherEnsemble::validate() const
{
  if (teachers.empty())
  {
    throw std::invalid_argument("teacher ensemble is empty");
  }
  for (auto const *t : teachers)
  {
    if (t == nullptr || t->num_classes() != target_active.size())
    {
      throw ShapeError("teacher output universe does not match the student");
    }
    if (mask_count(mask_and(t->active_mask(), target_active)) == 0)
    {
      throw std::invalid_argument("teacher shares no label with the student task");
    }
  }
}

std::vector<double> teacher_weights(std::span<std::vector<double> const> logits,
                                    std::span<LabelMask const> masks)
{
  if (logits.empty() || logits.size() != masks.size())
  {
    throw std::invalid_argument("teacher_weights needs one mask per teacher and >= 1 teacher");
  }
  std::vector<double> entropies;
  entropies.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
  {
    entropies.push_back(nn::entropy(nn::softmax(logits[i], masks[i])));
  }
  // exp(-H) normalised; shift by the minimum entropy for stability.
  double const        h_min = *std::min_element(entropies.begin(), entropies.end());
  std::vector<double> w;
  w.reserve(entropies.size());
  for (double h : entropies)
  {
    w.push_back(std::exp(-(h - h_min)));
  }
  double const total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double &v : w)
  {
    v /= total;
  }
  return w;
}

std::vector<double> ensemble_logits(std::span<std::vector<double> const> logits,
                                    std::span<LabelMask const> masks,
                                    std::span<double const> weights,
                                    LabelMask const &student_mask)
{
  if (logits.size() != masks.size() || logits.size() != weights.size())
  {
    throw std::invalid_argument("ensemble_logits: teacher, mask and weight counts differ");
  }
  std::vector<double> out(student_mask.size(), nn::kMaskedLogit);
  for (std::size_t k = 0; k < student_mask.size(); ++k)
  {
    if (!student_mask[k])
    {
      continue;
    }
    double mass = 0.0;
    double acc  = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
    {
      if (masks[i][k])
      {
        mass += weights[i];
        acc += weights[i] * logits[i][k];
      }
    }
    if (mass <= 0.0)
    {
      throw ConfigError("student class " + std::to_string(k) + " is covered by no teacher");
    }
    out[k] = acc / mass;
  }
  return out;
}

namespace {

std::size_t argmax_masked(std::span<double const> p, LabelMask const &mask)
{
  std::size_t best = p.size();
  for (std::size_t k = 0; k < p.size(); ++k)
  {
    if (mask[k] && (best == p.size() || p[k] > p[best]))
    {
      best = k;
    }
  }
  return best;
}

}  // namespace

LossTerms loss_against_target(std::span<double const> student_logits,
                              std::span<double const> target_logits,
                              LabelMask const &student_mask, double alpha, std::span<double> grad)
{
  auto const p = nn::softmax(student_logits, student_mask);
  auto const q = nn::softmax(target_logits, student_mask);

  LossTerms   terms;
  terms.soft = nn::kl_div(p, q);
  std::size_t const pseudo = argmax_masked(q, student_mask);
  terms.hard  = -std::log(std::max(p[pseudo], nn::kProbFloor));
  terms.total = alpha * terms.soft + (1.0 - alpha) * terms.hard;

  if (!grad.empty())
  {
    // d KL(p||q) / dz_j = p_j (log p_j - log q_j - KL);  d CE / dz_j = p_j - [j == pseudo]
    for (std::size_t k = 0; k < p.size(); ++k)
    {
      if (!student_mask[k])
      {
        grad[k] = 0.0;
        continue;
      }
      double const log_ratio =
          std::log(std::max(p[k], nn::kProbFloor)) - std::log(std::max(q[k], nn::kProbFloor));
      double const soft = p[k] * (log_ratio - terms.soft);
      double const hard = p[k] - (k == pseudo ? 1.0 : 0.0);
      grad[k]           = alpha * soft + (1.0 - alpha) * hard;
    }
  }
  return terms;
}

LossTerms distill_loss(std::span<double const> student_logits, LabelMask const &student_mask,
                       std::span<std::vector<double> const> teacher_logits,
                       std::span<LabelMask const> teacher_masks, double alpha)
{
  std::vector<LabelMask> effective;
  effective.reserve(teacher_masks.size());
  for (auto const &m : teacher_masks)
  {
    effective.push_back(mask_and(m, student_mask));
  }
  auto const w      = teacher_weights(teacher_logits, effective);
  auto const target = ensemble_logits(teacher_logits, effective, w, student_mask);
  return loss_against_target(student_logits, target, student_mask, alpha);
}

Matrix ensemble_targets(TeacherEnsemble const &ensemble, Matrix const &inputs,
                        TeacherWeighting weighting)
{
  ensemble.validate();
  std::size_t const      n_teachers = ensemble.teachers.size();
  std::vector<Matrix>    outputs;
  std::vector<LabelMask> masks;
  for (auto const *t : ensemble.teachers)
  {
    outputs.push_back(t->forward(inputs));
    masks.push_back(mask_and(t->active_mask(), ensemble.target_active));
  }

  std::size_t const   K = ensemble.target_active.size();
  Matrix              targets(inputs.rows(), static_cast<Eigen::Index>(K));
  std::vector<std::vector<double>> row_logits(n_teachers, std::vector<double>(K));
  std::vector<double> uniform(n_teachers, 1.0 / static_cast<double>(n_teachers));
  for (Eigen::Index r = 0; r < inputs.rows(); ++r)
  {
    for (std::size_t i = 0; i < n_teachers; ++i)
    {
      auto const row = outputs[i].row(r);
      std::copy(row.data(), row.data() + K, row_logits[i].begin());
    }
    auto const w = weighting == TeacherWeighting::Entropy ? teacher_weights(row_logits, masks)
                                                          : uniform;
    auto const z = ensemble_logits(row_logits, masks, w, ensemble.target_active);
    targets.row(r) = Eigen::Map<Eigen::RowVectorXd const>(z.data(), static_cast<Eigen::Index>(K));
  }
  return targets;
}

namespace {

// Mean loss and dL/dlogits over a block of rows.
double batch_loss(Matrix const &student_logits, Matrix const &targets, LabelMask const &mask,
                  double alpha, Matrix *grad)
{
  auto const  K    = static_cast<std::size_t>(student_logits.cols());
  auto const  rows = student_logits.rows();
  double      sum  = 0.0;
  if (grad != nullptr)
  {
    grad->resize(rows, student_logits.cols());
  }
  for (Eigen::Index r = 0; r < rows; ++r)
  {
    std::span<double> g;
    if (grad != nullptr)
    {
      g = {grad->row(r).data(), K};
    }
    sum += loss_against_target({student_logits.row(r).data(), K}, {targets.row(r).data(), K},
                               mask, alpha, g)
               .total;
  }
  if (grad != nullptr)
  {
    *grad /= static_cast<double>(rows);
  }
  return sum / static_cast<double>(rows);
}

}  // namespace

double mean_loss(nn::Mlp const &student, Matrix const &inputs, Matrix const &targets,
                 double alpha)
{
  if (inputs.rows() == 0)
  {
    return 0.0;
  }
  return batch_loss(student.forward(inputs), targets, student.active_mask(), alpha, nullptr);
}

DistillResult distill_to_targets(nn::Mlp student, Matrix const &inputs, Matrix const &targets,
                                 DistillConfig const &cfg, std::uint64_t seed)
{
  cfg.validate();
  if (inputs.rows() == 0)
  {
    throw std::invalid_argument("distillation needs a nonempty public dataset");
  }
  if (targets.rows() != inputs.rows() ||
      static_cast<std::size_t>(targets.cols()) != student.num_classes())
  {
    throw ShapeError("distillation targets do not match inputs / student universe");
  }

  DistillResult result{std::move(student), 0.0, 0.0};
  nn::Mlp      &s = result.student;
  result.initial_loss = mean_loss(s, inputs, targets, cfg.alpha);
  if (cfg.epochs == 0)
  {
    result.final_loss = result.initial_loss;
    return result;
  }

  nn::AdamState            opt(static_cast<std::size_t>(s.params().size()), {.lr = cfg.lr});
  std::mt19937_64          rng(seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix     xb;
  Matrix     tb;
  Matrix     grad;
  nn::Mlp::Cache cache;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
  {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size)
    {
      std::size_t const len = std::min(cfg.batch_size, order.size() - start);
      xb.resize(static_cast<Eigen::Index>(len), inputs.cols());
      tb.resize(static_cast<Eigen::Index>(len), targets.cols());
      for (std::size_t i = 0; i < len; ++i)
      {
        xb.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(order[start + i]));
        tb.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(order[start + i]));
      }
      Matrix const logits = s.forward(xb, cache);
      batch_loss(logits, tb, s.active_mask(), cfg.alpha, &grad);
      nn::adam_step(opt, s.params(), s.backward(cache, grad));
    }
  }
  result.final_loss = mean_loss(s, inputs, targets, cfg.alpha);
  return result;
}

DistillResult distill_train(nn::Mlp student, TeacherEnsemble const &ensemble,
                            data::UnlabeledDataset const &public_set, DistillConfig const &cfg,
                            std::uint64_t seed, TeacherWeighting weighting)
{
  if (public_set.empty())
  {
    throw std::invalid_argument("distillation needs a nonempty public dataset");
  }
  if (ensemble.target_active != student.active_mask())
  {
    throw std::invalid_argument("ensemble target labels differ from the student's active labels");
  }
  Matrix const targets = ensemble_targets(ensemble, public_set.features, weighting);
  return distill_to_targets(std::move(student), public_set.features, targets, cfg, seed);
}

}  // namespace fedcdc::distill
