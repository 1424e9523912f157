// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdok/corpus.hpp"

namespace mcdok {

/// Rows are gold classes, columns are predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint64_t>> counts;

  explicit ConfusionMatrix(std::vector<std::string> cls = {});
  std::size_t size() const { return classes.size(); }
  std::uint64_t total() const;
  std::uint64_t support(std::size_t gold) const;
  std::uint64_t predicted(std::size_t pred) const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::string> golds, std::span<const std::string> preds,
                          const LabelScheme& scheme);
/// Same, over class indices into `classes`.
ConfusionMatrix confusion_indices(std::span<const std::size_t> golds, std::span<const std::size_t> preds,
                                  std::vector<std::string> classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class precision, recall and F1; every 0/0 is taken as 0.
ClassScores prf(const ConfusionMatrix& matrix, std::size_t cls);
ClassScores prf(const ConfusionMatrix& matrix, std::string_view cls);

enum class ClassSetPolicy {
  /// Classes with gold support or at least one prediction.
  present,
  /// Every class of the scheme.
  full_scheme,
};

/// Unweighted mean of per-class F1 over the policy's class set.
double macro_f1(const ConfusionMatrix& matrix, ClassSetPolicy policy = ClassSetPolicy::present);
/// Support-weighted mean of per-class F1.
double weighted_f1(const ConfusionMatrix& matrix);

struct ClassReport {
  std::string cls;
  ClassScores scores;
  std::uint64_t support = 0;
  std::uint64_t predicted = 0;
};

struct EvaluationReport {
  ConfusionMatrix matrix;
  std::vector<ClassReport> per_class;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  ClassSetPolicy policy = ClassSetPolicy::present;
  /// Scheme classes with no gold samples in this (sub)set.
  std::vector<std::string> missing_gold_classes;
  /// dimension name -> group value -> report, groups in lexicographic order.
  std::map<std::string, std::map<std::string, EvaluationReport>> groups;
  std::optional<std::uint64_t> leakage_removed;

  nlohmann::json to_json() const;
};

EvaluationReport make_report(const ConfusionMatrix& matrix, ClassSetPolicy policy = ClassSetPolicy::present);

/// One evaluated sample: gold and predicted labels plus grouping attributes.
struct EvaluatedSample {
  std::string gold;
  std::string pred;
  std::string language;
  std::string family;
};

EvaluationReport evaluate(std::span<const EvaluatedSample> samples, const LabelScheme& scheme,
                          ClassSetPolicy policy = ClassSetPolicy::present);

/// Partitions by `dim` (language or family) and reports each group.
std::map<std::string, EvaluationReport> breakdown(std::span<const EvaluatedSample> samples, Dimension dim,
                                                  const LabelScheme& scheme,
                                                  ClassSetPolicy policy = ClassSetPolicy::present);

struct LeakageResult {
  Corpus corpus;
  std::size_t removed = 0;
};

/// Drops every sample whose digest is in `reference`.
LeakageResult leakage_filter(const Corpus& test, const std::unordered_set<Digest, DigestHash>& reference);

/// Expected macro F1 of a uniform-random predictor on balanced gold: 1/K.
double random_baseline(std::size_t num_classes);

/// Self-contained SVG bar chart: per group, Macro F1 and Weighted F1 bars.
std::string breakdown_svg(const std::string& title, const std::map<std::string, EvaluationReport>& groups);

/// Header row "gold\pred" followed by one row per gold class.
std::string confusion_csv(const ConfusionMatrix& matrix);

}  // namespace mcdok
