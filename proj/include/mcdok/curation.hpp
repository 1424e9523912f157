// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdok/corpus.hpp"

namespace mcdok {

struct CurationRecipe {
  std::vector<Dimension> train_stratum_dims;
  std::size_t train_stratum_cap = 1;
  std::size_t train_class_cap = 1;
  std::vector<Dimension> val_stratum_dims;
  std::size_t val_stratum_cap = 1;
  std::size_t val_class_cap = 1;
  std::uint64_t seed = 0;

  /// Throws ValidationError when a cap is zero.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Published per-subtask constants (A, B or C). Seed is left at 0.
CurationRecipe preset_recipe(char subtask);

/// Keeps the first occurrence of each digest, in input order.
Corpus deduplicate(const Corpus& corpus);

/// Per stratum, keeps the min(n, cap) samples with the smallest
/// selection_key(seed, digest); input order of the survivors is preserved.
Corpus cap_per_stratum(const Corpus& corpus, std::span<const Dimension> dims, std::size_t cap,
                       std::uint64_t seed);

/// cap_per_stratum keyed by class label.
Corpus cap_per_class(const Corpus& corpus, std::size_t cap, std::uint64_t seed);

/// Seeded rank of a sample inside its stratum. Pure function of (seed, digest).
Digest selection_key(std::uint64_t seed, const Digest& digest);

struct SplitBundle {
  Corpus train;
  Corpus validation;
  CurationRecipe recipe;
  /// Stage-by-stage counts per class and per stratum.
  nlohmann::json report;
};

/// validation: concat(val_sources) -> dedup -> stratum cap -> class cap
/// train:      train_source -> dedup -> stratum cap -> class cap -> drop validation digests
/// Throws ValidationError if any scheme class ends up empty in train.
SplitBundle apply_recipe(const Corpus& train_source, std::span<const Corpus> val_sources,
                         const CurationRecipe& recipe);

}  // namespace mcdok
