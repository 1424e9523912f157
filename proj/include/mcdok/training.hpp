// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdok/corpus.hpp"
#include "mcdok/curation.hpp"
#include "mcdok/features.hpp"
#include "mcdok/model.hpp"

namespace mcdok {

enum class SelectionMetric { macro_f1, loss };

SelectionMetric parse_selection_metric(std::string_view name);
std::string_view selection_metric_name(SelectionMetric m);

struct TrainingConfig {
  double lr_max = 2e-5;
  double warmup_ratio = 0.03;
  std::size_t epochs = 3;
  std::size_t eval_interval = 100;
  SelectionMetric selection_metric = SelectionMetric::macro_f1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_opt = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  /// Published recipe for a subtask: lr 2e-5; A validates every 100 steps on
  /// macro F1, B and C every 1000 steps on loss.
  static TrainingConfig paper(char subtask);
  /// Same schedule with lr_max 0.05, usable for the linear model.
  static TrainingConfig desk(char subtask);
  static TrainingConfig for_profile(std::string_view profile, char subtask);

  void validate() const;
  nlohmann::json to_json() const;
};

/// Per-class loss weights, normalized to mean 1.
struct ClassWeights {
  std::vector<double> values;
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
};

/// Inverse class frequency, rescaled to mean 1. Throws if a class is empty.
ClassWeights class_weights(std::span<const std::string> labels, const LabelScheme& scheme);
ClassWeights uniform_weights(std::size_t num_classes);

/// -w[gold] * ln(max(p[gold], 1e-30)).
double weighted_ce(std::span<const double> p, std::size_t gold, const ClassWeights& w);

/// Gradient of weighted_ce(softmax(logits(state, v))) w.r.t. the parameters.
/// Bias gradient equals dlogits; weight(k, i) = dlogits[k] * v[i].
struct Gradient {
  std::vector<double> dlogits;
  std::vector<std::pair<std::uint32_t, double>> features;
  double loss = 0.0;

  double bias(std::size_t k) const { return dlogits[k]; }
  double weight(std::size_t k, std::uint32_t i) const;
};

Gradient gradient(const ModelState& state, const FeatureVector& v, std::size_t gold, const ClassWeights& w);

/// Linear warmup over ceil(warmup_ratio * total) steps, then half-cosine to 0.
double lr_at(std::size_t step, std::size_t total_steps, const TrainingConfig& cfg);

/// First and second moment estimates, one slot per parameter.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  explicit AdamMoments(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected adaptive-moment update with decoupled weight decay. `step`
/// is 1-based. Throws ValidationError on a non-finite gradient.
void optimizer_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::size_t step, double lr, const TrainingConfig& cfg);

/// optimizer_update restricted to `indices`. Equal to the dense update
/// whenever every other parameter has zero gradient, zero moments and zero value.
void optimizer_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::span<const std::size_t> indices, std::size_t step, double lr, const TrainingConfig& cfg);

struct Checkpoint {
  std::size_t step = 0;
  double score = 0.0;
  ModelState snapshot;
};

struct EvalRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_score = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EvalRecord> evals;
  std::vector<double> step_losses;
  std::size_t total_steps = 0;
  ClassWeights weights;
};

/// Scores a model at a given step. Used to replace validation in tests.
using Validator = std::function<double(const ModelState&, std::size_t step)>;

/// Mean weighted CE or argmax macro F1 of `state` on `val`.
double validate(const ModelState& state, const Corpus& val, SelectionMetric metric, const ClassWeights& w);

/// One optimizer step per training sample, `epochs` passes in seeded order,
/// validation every eval_interval steps and after the last step. Returns the
/// best-scoring checkpoint (earliest on ties).
TrainResult train(const Corpus& train_set, const Corpus& val_set, const TrainingConfig& cfg,
                  const FeaturizerConfig& featurizer, const Validator& validator = {});
TrainResult train(const SplitBundle& bundle, const TrainingConfig& cfg, const FeaturizerConfig& featurizer);

}  // namespace mcdok
