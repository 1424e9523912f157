// SPDX-License-Identifier: Apache-2.0
#include "mcdok/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mcdok/error.hpp"
#include "mcdok/evaluation.hpp"

namespace mcdok {

SelectionMetric parse_selection_metric(std::string_view name) {
  if (name == "macro_f1") return SelectionMetric::macro_f1;
  if (name == "loss") return SelectionMetric::loss;
  throw ValidationError("unknown selection metric '" + std::string(name) + "' (expected macro_f1 or loss)");
}

std::string_view selection_metric_name(SelectionMetric m) {
  return m == SelectionMetric::macro_f1 ? "macro_f1" : "loss";
}

TrainingConfig TrainingConfig::paper(char subtask) {
  LabelScheme::for_subtask(subtask);
  TrainingConfig c;
  const bool binary = subtask == 'A' || subtask == 'a';
  c.eval_interval = binary ? 100 : 1000;
  c.selection_metric = binary ? SelectionMetric::macro_f1 : SelectionMetric::loss;
  return c;
}

TrainingConfig TrainingConfig::desk(char subtask) {
  TrainingConfig c = paper(subtask);
  c.lr_max = 0.05;
  return c;
}

TrainingConfig TrainingConfig::for_profile(std::string_view profile, char subtask) {
  if (profile == "paper") return paper(subtask);
  if (profile == "desk") return desk(subtask);
  throw ValidationError("unknown training profile '" + std::string(profile) + "' (expected paper or desk)");
}

void TrainingConfig::validate() const {
  if (!(lr_max > 0.0) || !std::isfinite(lr_max)) throw ValidationError("lr_max must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ValidationError("warmup_ratio must lie in [0, 1)");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (eval_interval < 1) throw ValidationError("eval_interval must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("optimizer betas must lie in [0, 1)");
  if (!(eps_opt > 0.0)) throw ValidationError("eps_opt must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
}

nlohmann::json TrainingConfig::to_json() const {
  return {{"lr_max", lr_max},
          {"warmup_ratio", warmup_ratio},
          {"epochs", epochs},
          {"eval_interval", eval_interval},
          {"selection_metric", std::string(selection_metric_name(selection_metric))},
          {"beta1", beta1},
          {"beta2", beta2},
          {"eps_opt", eps_opt},
          {"weight_decay", weight_decay},
          {"seed", seed}};
}

ClassWeights class_weights(std::span<const std::string> labels, const LabelScheme& scheme) {
  std::vector<double> counts(scheme.size(), 0.0);
  for (const auto& l : labels) counts[scheme.require_index(l)] += 1.0;
  const double n = static_cast<double>(labels.size());
  std::vector<double> raw(scheme.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0.0)
      throw ValidationError("class '" + scheme.classes()[k] + "' has no training samples; class weights undefined");
    raw[k] = n / counts[k];
  }
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  const double k = static_cast<double>(raw.size());
  ClassWeights w;
  for (double r : raw) w.values.push_back(k * r / sum);
  return w;
}

ClassWeights uniform_weights(std::size_t num_classes) { return ClassWeights{std::vector<double>(num_classes, 1.0)}; }

double weighted_ce(std::span<const double> p, std::size_t gold, const ClassWeights& w) {
  return -w[gold] * std::log(std::max(p[gold], 1e-30));
}

double Gradient::weight(std::size_t k, std::uint32_t i) const {
  auto it = std::lower_bound(features.begin(), features.end(), i,
                             [](const auto& e, std::uint32_t idx) { return e.first < idx; });
  if (it == features.end() || it->first != i) return 0.0;
  return dlogits[k] * it->second;
}

Gradient gradient(const ModelState& state, const FeatureVector& v, std::size_t gold, const ClassWeights& w) {
  if (gold >= state.num_classes()) throw ValidationError("gold class index out of range");
  const auto p = softmax(logits(state, v));
  Gradient g;
  g.loss = weighted_ce(p, gold, w);
  g.dlogits.resize(p.size());
  double rest = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    g.dlogits[k] = w[gold] * p[k];
    if (k != gold) rest += p[k];
  }
  // p[gold] - 1 cancels badly when p[gold] is near 1.
  g.dlogits[gold] = -w[gold] * rest;
  g.features = v.entries;
  return g;
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainingConfig& cfg) {
  if (total_steps < 1) throw ValidationError("lr_at: total_steps must be >= 1");
  if (step > total_steps) throw ValidationError("lr_at: step beyond total_steps");
  const auto warmup = static_cast<std::size_t>(std::ceil(cfg.warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) return cfg.lr_max * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps <= warmup) return cfg.lr_max;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return cfg.lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

inline void adam_one(double& p, double g, double& m, double& v, double lr, double c1, double c2,
                     const TrainingConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double m_hat = m / c1;
  const double v_hat = v / c2;
  p -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps_opt) + cfg.weight_decay * p);
}

void check_shapes(std::span<double> params, std::span<const double> grads, const AdamMoments& moments) {
  if (grads.size() != params.size() || moments.m.size() != params.size() || moments.v.size() != params.size())
    throw ValidationError("optimizer_update: parameter, gradient and moment shapes differ");
}

}  // namespace

void optimizer_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::size_t step, double lr, const TrainingConfig& cfg) {
  check_shapes(params, grads, moments);
  if (step < 1) throw ValidationError("optimizer_update: step is 1-based");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw ValidationError("non-finite gradient at step " + std::to_string(step));
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) adam_one(params[i], grads[i], moments.m[i], moments.v[i], lr, c1, c2, cfg);
}

void optimizer_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::span<const std::size_t> indices, std::size_t step, double lr, const TrainingConfig& cfg) {
  check_shapes(params, grads, moments);
  if (step < 1) throw ValidationError("optimizer_update: step is 1-based");
  for (auto i : indices)
    if (!std::isfinite(grads[i])) throw ValidationError("non-finite gradient at step " + std::to_string(step));
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (auto i : indices) adam_one(params[i], grads[i], moments.m[i], moments.v[i], lr, c1, c2, cfg);
}

namespace {

struct Encoded {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> golds;
};

Encoded encode(const Corpus& corpus, const FeaturizerConfig& featurizer) {
  Encoded e;
  e.features.reserve(corpus.size());
  e.golds.reserve(corpus.size());
  for (const auto& s : corpus) {
    e.features.push_back(featurize(s.code, featurizer));
    e.golds.push_back(corpus.scheme().require_index(s.label));
  }
  return e;
}

double validate_encoded(const ModelState& state, const Encoded& val, SelectionMetric metric, const ClassWeights& w) {
  if (val.features.empty()) throw ValidationError("validation set is empty");
  if (metric == SelectionMetric::loss) {
    double sum = 0.0;
    for (std::size_t i = 0; i < val.features.size(); ++i)
      sum += weighted_ce(softmax(logits(state, val.features[i])), val.golds[i], w);
    return sum / static_cast<double>(val.features.size());
  }
  std::vector<std::size_t> preds;
  preds.reserve(val.features.size());
  const auto policy = DecisionPolicy::argmax();
  for (const auto& v : val.features) preds.push_back(decide_index(softmax(logits(state, v)), state.classes, policy));
  return macro_f1(confusion_indices(val.golds, preds, state.classes));
}

// Epoch order: indices sorted by murmur3(seed, epoch, index).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::pair<Digest, std::size_t>> keyed;
  keyed.reserve(n);
  unsigned char buf[24];
  auto put = [&](int off, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf[off + b] = static_cast<unsigned char>(v >> (8 * b));
  };
  put(0, seed);
  put(8, epoch);
  for (std::size_t i = 0; i < n; ++i) {
    put(16, i);
    keyed.emplace_back(murmur3_128(std::string_view(reinterpret_cast<const char*>(buf), sizeof buf)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order;
  order.reserve(n);
  for (const auto& k : keyed) order.push_back(k.second);
  return order;
}

bool improves(double candidate, double best, SelectionMetric metric) {
  return metric == SelectionMetric::macro_f1 ? candidate > best : candidate < best;
}

}  // namespace

double validate(const ModelState& state, const Corpus& val, SelectionMetric metric, const ClassWeights& w) {
  return validate_encoded(state, encode(val, state.featurizer), metric, w);
}

TrainResult train(const Corpus& train_set, const Corpus& val_set, const TrainingConfig& cfg,
                  const FeaturizerConfig& featurizer, const Validator& validator) {
  cfg.validate();
  featurizer.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");
  const auto& scheme = train_set.scheme();

  std::vector<std::string> labels;
  labels.reserve(train_set.size());
  for (const auto& s : train_set) labels.push_back(s.label);

  TrainResult result;
  result.weights = class_weights(labels, scheme);
  const ClassWeights& w = result.weights;

  const Encoded train_data = encode(train_set, featurizer);
  Encoded val_data;
  if (!validator) {
    if (val_set.empty()) throw ValidationError("validation set is empty");
    val_data = encode(val_set, featurizer);
  }
  auto score_model = [&](const ModelState& m, std::size_t step) {
    return validator ? validator(m, step) : validate_encoded(m, val_data, cfg.selection_metric, w);
  };

  ModelState model = ModelState::zeros(scheme, featurizer);
  const std::size_t K = model.num_classes();
  const std::size_t D = model.dim();
  AdamMoments bias_moments(K);
  AdamMoments weight_moments(K * D);
  std::vector<double> bias_grad(K, 0.0);
  std::vector<double> weight_grad(K * D, 0.0);

  // Columns that have ever seen a nonzero feature. Every other weight has
  // zero value, gradient and moments, so the dense update leaves it at zero.
  std::vector<bool> column_active(D, false);
  std::vector<std::size_t> active;

  const std::size_t n = train_data.features.size();
  const std::size_t total = cfg.epochs * n;
  result.total_steps = total;
  result.step_losses.reserve(total);

  bool have_best = false;
  double window_loss = 0.0;
  std::size_t window_count = 0;
  std::size_t step = 0;

  auto evaluate_now = [&](double lr) {
    const double score = score_model(model, step);
    result.evals.push_back({step, lr, window_count ? window_loss / static_cast<double>(window_count) : 0.0, score});
    window_loss = 0.0;
    window_count = 0;
    if (!have_best || improves(score, result.best.score, cfg.selection_metric)) {
      result.best = Checkpoint{step, score, model};
      have_best = true;
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t idx : epoch_order(n, cfg.seed, epoch)) {
      const FeatureVector& v = train_data.features[idx];
      const double lr = lr_at(step, total, cfg);
      const Gradient g = gradient(model, v, train_data.golds[idx], w);
      if (!std::isfinite(g.loss))
        throw ValidationError("non-finite training loss at step " + std::to_string(step + 1) + " (sample " +
                              train_set[idx].id + ")");

      for (const auto& [i, x] : v.entries) {
        if (!column_active[i]) {
          column_active[i] = true;
          for (std::size_t k = 0; k < K; ++k) active.push_back(k * D + i);
        }
        for (std::size_t k = 0; k < K; ++k) weight_grad[k * D + i] = g.dlogits[k] * x;
      }
      for (std::size_t k = 0; k < K; ++k) bias_grad[k] = g.dlogits[k];

      ++step;
      optimizer_update(model.bias, bias_grad, bias_moments, step, lr, cfg);
      optimizer_update(model.weights, weight_grad, weight_moments, active, step, lr, cfg);
      for (const auto& e : v.entries)
        for (std::size_t k = 0; k < K; ++k) weight_grad[k * D + e.first] = 0.0;

      result.step_losses.push_back(g.loss);
      window_loss += g.loss;
      ++window_count;
      if (step % cfg.eval_interval == 0) evaluate_now(lr);
    }
  }
  if (result.evals.empty() || result.evals.back().step != step) evaluate_now(lr_at(step, total, cfg));
  return result;
}

TrainResult train(const SplitBundle& bundle, const TrainingConfig& cfg, const FeaturizerConfig& featurizer) {
  return train(bundle.train, bundle.validation, cfg, featurizer);
}

}  // namespace mcdok
