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

#include "fedcdc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedcdc/errors.hpp"

namespace fedcdc::nn {

namespace {

std::vector<std::size_t> layout_offsets(std::vector<std::size_t> const &dims)
{
  if (dims.size() < 2)
  {
    throw ShapeError("an MLP needs at least an input and an output layer");
  }
  std::vector<std::size_t> offsets;
  std::size_t              at = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
  {
    if (dims[l] == 0 || dims[l + 1] == 0)
    {
      throw ShapeError("layer widths must be positive");
    }
    offsets.push_back(at);
    at += dims[l] * dims[l + 1] + dims[l + 1];
  }
  offsets.push_back(at);
  return offsets;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> dims, LabelSet const &active, std::uint64_t seed)
  : Mlp(zeros(std::move(dims), active))
{
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < num_layers(); ++l)
  {
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(dims_[l])));
    std::size_t const                at = offsets_[l];
    for (std::size_t i = 0; i < dims_[l] * dims_[l + 1]; ++i)
    {
      params_[static_cast<Eigen::Index>(at + i)] = init(rng);
    }
  }
}

Mlp Mlp::zeros(std::vector<std::size_t> dims, LabelSet const &active)
{
  Mlp m;
  m.offsets_ = layout_offsets(dims);
  m.dims_    = std::move(dims);
  m.params_  = Vector::Zero(static_cast<Eigen::Index>(m.offsets_.back()));
  m.set_active(active);
  return m;
}

void Mlp::set_active(LabelSet const &active)
{
  if (active.empty())
  {
    throw ShapeError("a model needs at least one active label");
  }
  active_ = make_mask(active, num_classes());
}

std::size_t Mlp::weight_offset(std::size_t layer) const
{
  return offsets_.at(layer);
}

Eigen::Map<Matrix const> Mlp::weight(std::size_t layer) const
{
  return {params_.data() + weight_offset(layer), static_cast<Eigen::Index>(dims_[layer]),
          static_cast<Eigen::Index>(dims_[layer + 1])};
}

Eigen::Map<Eigen::RowVectorXd const> Mlp::bias(std::size_t layer) const
{
  return {params_.data() + weight_offset(layer) + dims_[layer] * dims_[layer + 1],
          static_cast<Eigen::Index>(dims_[layer + 1])};
}

Matrix Mlp::forward(Eigen::Ref<Matrix const> const &batch) const
{
  Cache cache;
  return forward(batch, cache);
}

Matrix Mlp::forward(Eigen::Ref<Matrix const> const &batch, Cache &cache) const
{
  if (static_cast<std::size_t>(batch.cols()) != input_dim())
  {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " features, model expects " + std::to_string(input_dim()));
  }
  cache.inputs.clear();
  cache.pre_relu.clear();
  Matrix a = batch;
  for (std::size_t l = 0; l < num_layers(); ++l)
  {
    cache.inputs.push_back(a);
    Matrix z = a * weight(l);
    z.rowwise() += bias(l);
    if (l + 1 < num_layers())
    {
      cache.pre_relu.push_back(z);
      a = z.cwiseMax(0.0);
    }
    else
    {
      a = std::move(z);
    }
  }
  for (std::size_t k = 0; k < num_classes(); ++k)
  {
    if (!active_[k])
    {
      a.col(static_cast<Eigen::Index>(k)).setConstant(kMaskedLogit);
    }
  }
  return a;
}

Vector Mlp::backward(Cache const &cache, Matrix const &grad_logits) const
{
  Vector grads = Vector::Zero(params_.size());
  Matrix delta = grad_logits;
  for (std::size_t l = num_layers(); l-- > 0;)
  {
    std::size_t const in  = dims_[l];
    std::size_t const out = dims_[l + 1];
    Eigen::Map<Matrix> dW(grads.data() + offsets_[l], static_cast<Eigen::Index>(in),
                          static_cast<Eigen::Index>(out));
    Eigen::Map<Eigen::RowVectorXd> db(grads.data() + offsets_[l] + in * out,
                                      static_cast<Eigen::Index>(out));
    dW.noalias() = cache.inputs[l].transpose() * delta;
    db           = delta.colwise().sum();
    if (l > 0)
    {
      Matrix upstream = delta * weight(l).transpose();
      delta = upstream.cwiseProduct((cache.pre_relu[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

bool Mlp::same_architecture(Mlp const &other) const noexcept
{
  return dims_ == other.dims_ && active_ == other.active_;
}

std::uint64_t Mlp::fingerprint() const
{
  std::uint64_t h = 1469598103934665603ULL;
  auto const   *bytes = reinterpret_cast<unsigned char const *>(params_.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(params_.size()) * sizeof(double); ++i)
  {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> softmax(std::span<double const> logits, LabelMask const &active)
{
  if (logits.size() != active.size())
  {
    throw ShapeError("logit vector and label mask differ in length");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k)
  {
    if (active[k])
    {
      peak = std::max(peak, logits[k]);
    }
  }
  if (peak == -std::numeric_limits<double>::infinity())
  {
    throw std::invalid_argument("softmax over an empty label mask");
  }
  std::vector<double> p(logits.size(), 0.0);
  double              total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k)
  {
    if (active[k])
    {
      p[k] = std::exp(logits[k] - peak);
      total += p[k];
    }
  }
  for (double &v : p)
  {
    v /= total;
  }
  return p;
}

Matrix softmax_rows(Matrix const &logits, LabelMask const &active)
{
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
  {
    auto p = softmax({logits.row(r).data(), static_cast<std::size_t>(logits.cols())}, active);
    out.row(r) = Eigen::Map<Eigen::RowVectorXd const>(p.data(), logits.cols());
  }
  return out;
}

double entropy(std::span<double const> p)
{
  double h = 0.0;
  for (double v : p)
  {
    if (v > 0.0)
    {
      h -= v * std::log(std::max(v, kProbFloor));
    }
  }
  return h;
}

double kl_div(std::span<double const> p, std::span<double const> q)
{
  if (p.size() != q.size())
  {
    throw ShapeError("KL divergence between vectors of different length");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    if (p[i] > 0.0)
    {
      d += p[i] * (std::log(std::max(p[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
    }
  }
  return std::max(d, 0.0);
}

LossAndGrad cross_entropy(Matrix const &logits, std::span<ClassId const> targets,
                          LabelMask const &active)
{
  if (static_cast<std::size_t>(logits.rows()) != targets.size())
  {
    throw ShapeError("cross_entropy: logits rows and targets differ");
  }
  LossAndGrad out;
  out.grad        = softmax_rows(logits, active);
  auto const rows = static_cast<double>(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
  {
    auto const t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)]);
    if (t < 0 || t >= logits.cols() || !active[static_cast<std::size_t>(t)])
    {
      throw std::invalid_argument("target class " + std::to_string(t) +
                                  " is not an active label of the model");
    }
    out.loss -= std::log(std::max(out.grad(r, t), kProbFloor));
    out.grad(r, t) -= 1.0;
  }
  out.loss /= rows;
  out.grad /= rows;
  return out;
}

AdamState::AdamState(std::size_t num_params, AdamConfig cfg)
  : config(cfg)
  , m(Vector::Zero(static_cast<Eigen::Index>(num_params)))
  , v(Vector::Zero(static_cast<Eigen::Index>(num_params)))
{}

void adam_step(AdamState &state, Vector &params, Vector const &grads)
{
  if (grads.size() != params.size() || state.m.size() != params.size())
  {
    throw ShapeError("adam_step: gradient, moment and parameter sizes differ");
  }
  auto const &c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseProduct(grads);
  double const t   = static_cast<double>(state.step);
  double const bc1 = 1.0 - std::pow(c.beta1, t);
  double const bc2 = 1.0 - std::pow(c.beta2, t);
  params.array() -=
      c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
}

double train_step(Mlp &model, AdamState &opt, Eigen::Ref<Matrix const> const &batch,
                  std::span<ClassId const> labels)
{
  Mlp::Cache cache;
  Matrix     logits = model.forward(batch, cache);
  auto       ce     = cross_entropy(logits, labels, model.active_mask());
  Vector     grads  = model.backward(cache, ce.grad);
  adam_step(opt, model.params(), grads);
  return ce.loss;
}

namespace {
constexpr char const *kFormatTag = "fedcdc.mlp";
constexpr int         kFormatVersion = 1;
}  // namespace

void save_model(Mlp const &model, std::ostream &out)
{
  nlohmann::json j;
  j["format"]  = kFormatTag;
  j["version"] = kFormatVersion;
  j["dims"]    = model.dims();
  j["active"]  = model.active_labels();
  j["params"]  = std::vector<double>(model.params().data(),
                                     model.params().data() + model.params().size());
  out << j.dump() << '\n';
}

Mlp load_model(std::istream &in)
{
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw ParseError(std::string("model checkpoint is not valid JSON: ") + e.what(), e.byte);
  }
  if (j.value("format", "") != kFormatTag || j.value("version", 0) != kFormatVersion)
  {
    throw ParseError("unrecognised model checkpoint header", 0);
  }
  auto       dims   = j.at("dims").get<std::vector<std::size_t>>();
  auto       active = j.at("active").get<LabelSet>();
  auto const params = j.at("params").get<std::vector<double>>();
  Mlp        m      = Mlp::zeros(std::move(dims), active);
  if (params.size() != static_cast<std::size_t>(m.params().size()))
  {
    throw ShapeError("checkpoint parameter count does not match its layer dims");
  }
  m.params() = Eigen::Map<Vector const>(params.data(), m.params().size());
  return m;
}

void save_model(Mlp const &model, std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot write " + path.string());
  }
  save_model(model, out);
}

Mlp load_model(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw std::runtime_error("cannot read " + path.string());
  }
  return load_model(in);
}

}  // namespace fedcdc::nn
