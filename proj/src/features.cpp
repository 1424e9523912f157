// SPDX-License-Identifier: Apache-2.0
#include "mcdok/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mcdok/error.hpp"
#include "mcdok/hash.hpp"

namespace mcdok {

void FeaturizerConfig::validate() const {
  if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > 8)
    throw ValidationError("featurizer n-gram range must satisfy 1 <= ngram_min <= ngram_max <= 8");
  if (!std::has_single_bit(hash_dim) || hash_dim < (std::size_t{1} << 12) || hash_dim > (std::size_t{1} << 24))
    throw ValidationError("featurizer hash_dim must be a power of two in [2^12, 2^24]");
  if (max_code_bytes < 64) throw ValidationError("featurizer max_code_bytes must be >= 64");
}

nlohmann::json FeaturizerConfig::to_json() const {
  return {{"ngram_min", ngram_min},
          {"ngram_max", ngram_max},
          {"hash_dim", hash_dim},
          {"max_code_bytes", max_code_bytes},
          {"l2_normalize", l2_normalize}};
}

FeaturizerConfig FeaturizerConfig::from_json(const nlohmann::json& j) {
  FeaturizerConfig c;
  c.ngram_min = j.at("ngram_min").get<std::size_t>();
  c.ngram_max = j.at("ngram_max").get<std::size_t>();
  c.hash_dim = j.at("hash_dim").get<std::size_t>();
  c.max_code_bytes = j.at("max_code_bytes").get<std::size_t>();
  c.l2_normalize = j.at("l2_normalize").get<bool>();
  c.validate();
  return c;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second * e.second;
  return std::sqrt(s);
}

double FeatureVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  return (it != entries.end() && it->first == index) ? it->second : 0.0;
}

std::uint32_t ngram_index(std::string_view gram, std::size_t hash_dim) {
  return static_cast<std::uint32_t>(murmur3_128(gram).lo & (hash_dim - 1));
}

FeatureVector featurize(std::string_view code, const FeaturizerConfig& cfg) {
  const std::string_view text = code.substr(0, std::min(code.size(), cfg.max_code_bytes));
  std::vector<std::uint32_t> hits;
  hits.reserve(text.size() * (cfg.ngram_max - cfg.ngram_min + 1));
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (n > text.size()) break;
    for (std::size_t i = 0; i + n <= text.size(); ++i) hits.push_back(ngram_index(text.substr(i, n), cfg.hash_dim));
  }
  std::sort(hits.begin(), hits.end());

  FeatureVector v;
  v.dim = cfg.hash_dim;
  for (auto h : hits) {
    if (!v.entries.empty() && v.entries.back().first == h)
      v.entries.back().second += 1.0;
    else
      v.entries.emplace_back(h, 1.0);
  }
  if (cfg.l2_normalize) v = l2_normalize(std::move(v));
  return v;
}

FeatureVector l2_normalize(FeatureVector v) {
  double scale = 0.0;
  for (const auto& e : v.entries) {
    if (!std::isfinite(e.second)) throw ValidationError("l2_normalize: non-finite feature weight");
    scale = std::max(scale, std::abs(e.second));
  }
  if (scale == 0.0) return v;
  // Scale by the largest magnitude first so the sum of squares cannot overflow.
  double sumsq = 0.0;
  for (const auto& e : v.entries) {
    const double x = e.second / scale;
    sumsq += x * x;
  }
  const double norm = scale * std::sqrt(sumsq);
  for (auto& e : v.entries) e.second /= norm;
  return v;
}

}  // namespace mcdok
