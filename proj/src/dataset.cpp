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

#include "fedcdc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "fedcdc/errors.hpp"

namespace fedcdc::data {

LabelSet LabeledDataset::label_set() const
{
  return LabelSet(labels.begin(), labels.end());
}

std::vector<std::size_t> LabeledDataset::class_counts() const
{
  std::vector<std::size_t> counts(num_classes, 0);
  for (ClassId c : labels)
  {
    ++counts.at(static_cast<std::size_t>(c));
  }
  return counts;
}

void LabeledDataset::validate() const
{
  if (static_cast<std::size_t>(features.rows()) != labels.size())
  {
    throw ShapeError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (ClassId c : labels)
  {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
    {
      throw ShapeError("label " + std::to_string(c) + " outside [0," +
                       std::to_string(num_classes) + ")");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<std::size_t const> rows) const
{
  LabeledDataset out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
  {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels.at(rows[i]));
  }
  return out;
}

LabeledDataset LabeledDataset::filter(LabelSet const &keep) const
{
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
  {
    if (keep.contains(labels[i]))
    {
      rows.push_back(i);
    }
  }
  return subset(rows);
}

LabeledDataset LabeledDataset::concat(std::span<LabeledDataset const> parts)
{
  LabeledDataset out;
  if (parts.empty())
  {
    return out;
  }
  Eigen::Index rows = 0;
  for (auto const &p : parts)
  {
    rows += p.features.rows();
    out.num_classes = std::max(out.num_classes, p.num_classes);
  }
  out.features.resize(rows, parts.front().features.cols());
  Eigen::Index at = 0;
  for (auto const &p : parts)
  {
    if (p.features.rows() == 0)
    {
      continue;
    }
    if (p.features.cols() != out.features.cols())
    {
      throw ShapeError("cannot concatenate datasets of different dimension");
    }
    out.features.middleRows(at, p.features.rows()) = p.features;
    at += p.features.rows();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

LabeledDataset gen_blobs(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                         double spread, std::uint64_t seed)
{
  if (num_classes < 2 || dim < 2)
  {
    throw ConfigError("gen_blobs needs at least 2 classes and 2 dimensions");
  }
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) < num_classes)
  {
    ++bits;
  }

  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledDataset out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(num_classes * per_class),
                      static_cast<Eigen::Index>(dim));
  out.labels.reserve(num_classes * per_class);

  Eigen::Index row = 0;
  for (std::size_t c = 0; c < num_classes; ++c)
  {
    Eigen::RowVectorXd mean(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j)
    {
      mean[static_cast<Eigen::Index>(j)] = ((c >> (j % bits)) & 1U) != 0 ? 1.0 : -1.0;
    }
    for (std::size_t s = 0; s < per_class; ++s, ++row)
    {
      for (std::size_t j = 0; j < dim; ++j)
      {
        auto const jj          = static_cast<Eigen::Index>(j);
        out.features(row, jj)  = mean[jj] + spread * noise(rng);
      }
      out.labels.push_back(static_cast<ClassId>(c));
    }
  }
  return out;
}

void PartitionSpec::validate(std::size_t num_classes) const
{
  if (n_dc < 1)
  {
    throw ConfigError("partition needs at least one consumer");
  }
  if (n_c < 2 || n_c % 2 != 0)
  {
    throw ConfigError("classes per consumer (n_c) must be even and >= 2, got " +
                      std::to_string(n_c));
  }
  if (n_do == 0 || n_do % groups() != 0)
  {
    throw ConfigError("owner count " + std::to_string(n_do) + " is not divisible into " +
                      std::to_string(groups()) + " groups");
  }
  if (groups() * (n_c / 2) > num_classes)
  {
    throw ConfigError("partition needs " + std::to_string(groups() * (n_c / 2)) +
                      " distinct classes but the dataset has " + std::to_string(num_classes));
  }
  if (samples_per_do == 0 || samples_per_val == 0)
  {
    throw ConfigError("owner and validation shards must be nonempty");
  }
}

namespace {

// Even split of `total` over `parts` slots; the first (total % parts) get one extra.
std::size_t share(std::size_t total, std::size_t parts, std::size_t slot)
{
  return total / parts + (slot < total % parts ? 1 : 0);
}

struct ClassLayout
{
  LabelSet              shared;
  std::vector<LabelSet> unique;  // per consumer
};

ClassLayout layout_classes(PartitionSpec const &spec, std::size_t num_classes)
{
  std::vector<ClassId> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  if (spec.shuffle_classes)
  {
    std::mt19937_64 rng(derive_seed(spec.seed, {0x636c617373ULL}));
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::size_t const half = spec.n_c / 2;
  ClassLayout       layout;
  layout.shared.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  for (std::size_t i = 0; i < spec.n_dc; ++i)
  {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(half * (i + 1));
    layout.unique.emplace_back(first, first + static_cast<std::ptrdiff_t>(half));
  }
  return layout;
}

void add_balanced(std::vector<std::size_t> &demand, LabelSet const &classes, std::size_t total)
{
  std::size_t slot = 0;
  for (ClassId c : classes)
  {
    demand[static_cast<std::size_t>(c)] += share(total, classes.size(), slot++);
  }
}

LabelSet all_classes(std::size_t num_classes)
{
  LabelSet out;
  for (std::size_t c = 0; c < num_classes; ++c)
  {
    out.insert(static_cast<ClassId>(c));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> partition_demand(PartitionSpec const &spec, std::size_t num_classes)
{
  spec.validate(num_classes);
  auto const               layout = layout_classes(spec, num_classes);
  std::vector<std::size_t> demand(num_classes, 0);
  for (std::size_t o = 0; o < spec.owners_per_group(); ++o)
  {
    add_balanced(demand, layout.shared, spec.samples_per_do);
    for (auto const &u : layout.unique)
    {
      add_balanced(demand, u, spec.samples_per_do);
    }
  }
  for (auto const &u : layout.unique)
  {
    auto const labels = set_union(layout.shared, u);
    add_balanced(demand, labels, spec.samples_per_val);
    add_balanced(demand, labels, spec.samples_per_test);
  }
  add_balanced(demand, all_classes(num_classes), spec.public_size);
  return demand;
}

MarketPartition build_market_partition(PartitionSpec const &spec, LabeledDataset const &base)
{
  base.validate();
  std::size_t const K = base.num_classes;
  spec.validate(K);
  auto const layout = layout_classes(spec, K);

  // Shuffled per-class pools; shards draw from the front so they stay disjoint.
  std::vector<std::vector<std::size_t>> pools(K);
  for (std::size_t i = 0; i < base.size(); ++i)
  {
    pools[static_cast<std::size_t>(base.labels[i])].push_back(i);
  }
  std::mt19937_64 rng(derive_seed(spec.seed, {0x706f6f6cULL}));
  for (auto &pool : pools)
  {
    std::shuffle(pool.begin(), pool.end(), rng);
  }
  std::vector<std::size_t> cursor(K, 0);

  auto draw = [&](LabelSet const &classes, std::size_t total) {
    std::vector<std::size_t> rows;
    rows.reserve(total);
    std::size_t slot = 0;
    for (ClassId c : classes)
    {
      auto const  cc   = static_cast<std::size_t>(c);
      std::size_t need = share(total, classes.size(), slot++);
      if (cursor[cc] + need > pools[cc].size())
      {
        throw ConfigError("class " + std::to_string(c) + " has " +
                          std::to_string(pools[cc].size()) +
                          " samples, not enough for the requested partition");
      }
      rows.insert(rows.end(), pools[cc].begin() + static_cast<std::ptrdiff_t>(cursor[cc]),
                  pools[cc].begin() + static_cast<std::ptrdiff_t>(cursor[cc] + need));
      cursor[cc] += need;
    }
    return rows;
  };

  MarketPartition out;
  out.shared_labels = layout.shared;
  for (auto const &u : layout.unique)
  {
    out.consumer_labels.push_back(set_union(layout.shared, u));
  }

  std::size_t const per_group = spec.owners_per_group();
  for (std::size_t g = 0; g < spec.groups(); ++g)
  {
    LabelSet const &classes = g == 0 ? layout.shared : layout.unique[g - 1];
    for (std::size_t o = 0; o < per_group; ++o)
    {
      auto rows = draw(classes, spec.samples_per_do);
      out.owner_shards.push_back(base.subset(rows));
      out.owner_labels.push_back(classes);
      out.owner_group.push_back(g);
    }
  }

  for (auto const &labels : out.consumer_labels)
  {
    auto rows = draw(labels, spec.samples_per_val);
    out.validation.push_back(base.subset(rows));
  }
  for (auto const &labels : out.consumer_labels)
  {
    if (spec.samples_per_test == 0)
    {
      out.test.push_back(base.subset(std::vector<std::size_t>{}));
      continue;
    }
    auto rows = draw(labels, spec.samples_per_test);
    out.test.push_back(base.subset(rows));
  }

  if (spec.public_size > 0)
  {
    auto rows = draw(all_classes(K), spec.public_size);
    // Mix classes so minibatches over the public pool are class-homogeneous in expectation.
    std::shuffle(rows.begin(), rows.end(), rng);
    out.public_set.features = base.subset(rows).features;
  }
  else
  {
    out.public_set.features.resize(0, base.features.cols());
  }
  return out;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<std::uint8_t const> bytes, std::size_t offset,
                        char const *what)
{
  if (offset + 4 > bytes.size())
  {
    throw ParseError(std::string("truncated ") + what + " header", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24U) | (std::uint32_t{bytes[offset + 1]} << 16U) |
         (std::uint32_t{bytes[offset + 2]} << 8U) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> slurp(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

LabeledDataset parse_idx(std::span<std::uint8_t const> images, std::span<std::uint8_t const> labels)
{
  if (auto magic = read_be32(images, 0, "image"); magic != kImageMagic)
  {
    throw ParseError("bad IDX image magic " + std::to_string(magic), 0);
  }
  if (auto magic = read_be32(labels, 0, "label"); magic != kLabelMagic)
  {
    throw ParseError("bad IDX label magic " + std::to_string(magic), 0);
  }
  std::size_t const count  = read_be32(images, 4, "image");
  std::size_t const rows   = read_be32(images, 8, "image");
  std::size_t const cols   = read_be32(images, 12, "image");
  std::size_t const nlabel = read_be32(labels, 4, "label");
  if (nlabel != count)
  {
    throw ParseError("label count " + std::to_string(nlabel) + " does not match image count " +
                         std::to_string(count),
                     4);
  }
  std::size_t const pixels = rows * cols;
  if (std::size_t expected = 16 + count * pixels; images.size() != expected)
  {
    throw ParseError("image payload length mismatch, expected " + std::to_string(expected) +
                         " bytes",
                     std::min(images.size(), expected));
  }
  if (std::size_t expected = 8 + count; labels.size() != expected)
  {
    throw ParseError("label payload length mismatch, expected " + std::to_string(expected) +
                         " bytes",
                     std::min(labels.size(), expected));
  }

  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  out.labels.reserve(count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i)
  {
    for (std::size_t p = 0; p < pixels; ++p)
    {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          images[16 + i * pixels + p] / 255.0;
    }
    std::uint8_t const label = labels[8 + i];
    max_label                = std::max<std::size_t>(max_label, label);
    out.labels.push_back(label);
  }
  out.num_classes = count == 0 ? 0 : max_label + 1;
  return out;
}

LabeledDataset load_idx(std::filesystem::path const &images_path,
                        std::filesystem::path const &labels_path)
{
  auto const images = slurp(images_path);
  auto const labels = slurp(labels_path);
  return parse_idx(images, labels);
}

}  // namespace fedcdc::data
