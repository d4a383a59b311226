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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fedcdc/types.hpp"

namespace fedcdc::data {

// Row-major so a minibatch is a contiguous block of sample rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LabeledDataset
{
  Matrix               features;  // one sample per row
  std::vector<ClassId> labels;
  std::size_t          num_classes = 0;

  std::size_t size() const noexcept
  {
    return labels.size();
  }
  std::size_t dim() const noexcept
  {
    return static_cast<std::size_t>(features.cols());
  }
  bool empty() const noexcept
  {
    return labels.empty();
  }

  LabelSet label_set() const;
  std::vector<std::size_t> class_counts() const;

  // Throws ShapeError when labels/features disagree or a label is >= num_classes.
  void validate() const;

  LabeledDataset subset(std::span<std::size_t const> rows) const;
  LabeledDataset filter(LabelSet const &keep) const;

  static LabeledDataset concat(std::span<LabeledDataset const> parts);
};

struct UnlabeledDataset
{
  Matrix features;

  std::size_t size() const noexcept
  {
    return static_cast<std::size_t>(features.rows());
  }
  std::size_t dim() const noexcept
  {
    return static_cast<std::size_t>(features.cols());
  }
  bool empty() const noexcept
  {
    return features.rows() == 0;
  }
};

/// K isotropic Gaussian clusters in `dim` dimensions. Class c is centred on
/// a vertex of the {-1,+1} hypercube given by the binary code of c, with the
/// code bits tiled across all dimensions. Samples are grouped by class.
LabeledDataset gen_blobs(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                         double spread, std::uint64_t seed);

struct PartitionSpec
{
  std::size_t   n_dc              = 3;
  std::size_t   n_do              = 24;
  std::size_t   n_c               = 4;  // classes per consumer, half of them shared
  std::size_t   samples_per_do    = 500;
  std::size_t   samples_per_val   = 1000;
  std::size_t   samples_per_test  = 1000;
  std::size_t   public_size       = 3000;
  bool          shuffle_classes   = true;
  std::uint64_t seed              = 0;

  void validate(std::size_t num_classes) const;

  std::size_t groups() const noexcept
  {
    return n_dc + 1;
  }
  std::size_t owners_per_group() const noexcept
  {
    return n_do / groups();
  }
};

struct MarketPartition
{
  LabelSet                    shared_labels;   // intersection of all consumer label sets
  std::vector<LabelSet>       consumer_labels;
  std::vector<LabeledDataset> owner_shards;
  std::vector<LabelSet>       owner_labels;
  std::vector<std::size_t>    owner_group;     // 0 = shared group, i+1 = unique group of consumer i
  std::vector<LabeledDataset> validation;
  std::vector<LabeledDataset> test;
  UnlabeledDataset            public_set;
};

/// Samples each class needs from the base dataset for `spec` to be realisable.
std::vector<std::size_t> partition_demand(PartitionSpec const &spec, std::size_t num_classes);

/// Splits `base` into disjoint owner shards, consumer validation/test shards and
/// an unlabeled public pool following the shared/unique group construction.
/// Throws ConfigError naming the first class that runs out of samples.
MarketPartition build_market_partition(PartitionSpec const &spec, LabeledDataset const &base);

/// Reads an IDX3 image file (magic 0x00000803) and IDX1 label file
/// (magic 0x00000801). Pixels are scaled to [0,1] and flattened row-major.
LabeledDataset load_idx(std::filesystem::path const &images_path,
                        std::filesystem::path const &labels_path);

LabeledDataset parse_idx(std::span<std::uint8_t const> images,
                         std::span<std::uint8_t const> labels);

}  // namespace fedcdc::data
