// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcdok/corpus.hpp"
#include "mcdok/features.hpp"

namespace mcdok {

/// Linear classifier over hashed features. Weights are class-major:
/// weight(k, i) lives at weights[k * dim + i].
struct ModelState {
  std::vector<std::string> classes;
  FeaturizerConfig featurizer;
  std::vector<double> bias;
  std::vector<double> weights;

  /// Zero-initialized model for `scheme`.
  static ModelState zeros(const LabelScheme& scheme, const FeaturizerConfig& featurizer);

  std::size_t num_classes() const { return classes.size(); }
  std::size_t dim() const { return featurizer.hash_dim; }
  double weight(std::size_t k, std::size_t i) const { return weights[k * dim() + i]; }
  double& weight(std::size_t k, std::size_t i) { return weights[k * dim() + i]; }

  /// Throws ValidationError on shape mismatch or non-finite parameters.
  void check() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// bias + W v, accumulated over the nonzeros of v.
std::vector<double> logits(const ModelState& state, const FeatureVector& v);

/// Max-shifted softmax. Throws ValidationError on non-finite input.
std::vector<double> softmax(std::span<const double> z);

/// Class probabilities for raw code.
std::vector<double> predict_proba(const ModelState& state, std::string_view code);

struct DecisionPolicy {
  enum class Kind { argmax, binary_threshold };
  Kind kind = Kind::argmax;
  double theta = 0.5;
  /// A threshold of 1.0 is read as p >= 1 - epsilon.
  double epsilon = 1e-6;
  std::string positive_class = "machine";

  static DecisionPolicy argmax() { return {}; }
  static DecisionPolicy threshold(double theta, double epsilon = 1e-6, std::string positive = "machine") {
    return {Kind::binary_threshold, theta, epsilon, std::move(positive)};
  }
  /// Throws ValidationError on out-of-range theta/epsilon or a scheme mismatch.
  void validate(std::span<const std::string> classes) const;
};

/// Index of the decided class. Argmax ties go to the lowest index.
std::size_t decide_index(std::span<const double> p, std::span<const std::string> classes,
                         const DecisionPolicy& policy);
const std::string& decide(std::span<const double> p, std::span<const std::string> classes,
                          const DecisionPolicy& policy);

/// Binary container: "MCDOK1\n", u64 header length, JSON header (classes,
/// featurizer, format), then little-endian f64 bias[K] and weights[K*D].
void save_model(const ModelState& state, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

}  // namespace mcdok
