// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcdok {

struct FeaturizerConfig {
  std::size_t ngram_min = 1;
  std::size_t ngram_max = 4;
  std::size_t hash_dim = std::size_t{1} << 20;
  std::size_t max_code_bytes = 8192;
  bool l2_normalize = true;

  /// Throws ValidationError unless 1 <= min <= max <= 8, hash_dim is a power
  /// of two in [2^12, 2^24] and max_code_bytes >= 64.
  void validate() const;
  nlohmann::json to_json() const;
  static FeaturizerConfig from_json(const nlohmann::json& j);

  friend bool operator==(const FeaturizerConfig&, const FeaturizerConfig&) = default;
};

/// Sparse vector with strictly increasing indices.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::size_t dim = 0;

  double norm() const;
  /// Value at `index`, 0 when absent.
  double at(std::uint32_t index) const;
};

/// Index of a byte n-gram in [0, hash_dim).
std::uint32_t ngram_index(std::string_view gram, std::size_t hash_dim);

/// Hashed byte n-gram counts, collisions summed, optionally L2-normalized.
/// Only the first max_code_bytes bytes of `code` are read.
FeatureVector featurize(std::string_view code, const FeaturizerConfig& cfg);

/// Throws ValidationError on a non-finite weight. Zero maps to zero.
FeatureVector l2_normalize(FeatureVector v);

}  // namespace mcdok
