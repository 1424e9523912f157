// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcdok/corpus.hpp"
#include "mcdok/evaluation.hpp"
#include "mcdok/model.hpp"

namespace mcdok {

struct PredictionRow {
  std::string id;
  /// Per-class probabilities in scheme order, when the source had them.
  std::optional<std::vector<double>> probabilities;
  /// Hard label from the source, when it had one.
  std::optional<std::string> label;
};

struct ExternalPredictionSet {
  std::string system_name;
  std::vector<std::string> classes;
  std::vector<PredictionRow> rows;

  bool has_probabilities() const;
  /// Decided label per row. Threshold policies need probabilities; argmax
  /// falls back to the hard label when probabilities are absent.
  std::vector<std::string> decisions(const std::optional<DecisionPolicy>& policy) const;
};

/// Probability rows must sum to 1 within this tolerance and are renormalized.
inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Parses a prediction CSV: an "id" column plus a "label" column and/or
/// "p_<class>" columns naming every scheme class.
ExternalPredictionSet parse_predictions(std::string_view csv, const LabelScheme& scheme, std::string system_name,
                                        const std::string& source = "predictions");
ExternalPredictionSet import_predictions(const std::filesystem::path& path, const LabelScheme& scheme,
                                         std::string system_name = {});

/// CSV with header id,p_<class>...,label.
std::string predictions_csv(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& probs,
                            const std::vector<std::string>& classes, const std::vector<std::string>& labels);

/// Joins predictions onto gold samples by id. Throws when a gold id has no
/// prediction, listing up to 10 of them.
std::vector<EvaluatedSample> join_predictions(const Corpus& gold, const ExternalPredictionSet& set,
                                              const std::optional<DecisionPolicy>& policy);

struct RankedSystem {
  std::string system_name;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

/// Scores each set against `gold`; descending macro F1, ties by name.
std::vector<RankedSystem> compare(const std::vector<ExternalPredictionSet>& sets, const Corpus& gold,
                                  const std::optional<DecisionPolicy>& policy = std::nullopt,
                                  ClassSetPolicy class_set = ClassSetPolicy::present);

std::string ranking_csv(const std::vector<RankedSystem>& ranking);

}  // namespace mcdok
