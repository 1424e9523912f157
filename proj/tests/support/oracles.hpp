// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reference computations written straight from the definitions. They share no
// code with the library paths they check.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcdok/features.hpp"
#include "mcdok/model.hpp"

namespace mcdok::testing {

/// Per class c: TP, FP and FN by scanning the label lists.
struct Tally {
  double tp = 0, fp = 0, fn = 0, support = 0;
};
std::vector<Tally> tally_labels(const std::vector<int>& golds, const std::vector<int>& preds, int k);

double oracle_f1(const Tally& t);
/// Mean F1 over classes that occur in golds or preds (or every class when `full`).
double oracle_macro_f1(const std::vector<int>& golds, const std::vector<int>& preds, int k, bool full = false);
double oracle_weighted_f1(const std::vector<int>& golds, const std::vector<int>& preds, int k);

/// (gold, pred) -> count via std::map.
std::map<std::pair<std::string, std::string>, std::uint64_t> tally_pairs(const std::vector<std::string>& golds,
                                                                          const std::vector<std::string>& preds);

/// Counts every byte n-gram as a string first, then folds the dictionary into
/// hash buckets. Unnormalized counts.
std::map<std::uint32_t, double> ngram_dictionary_oracle(const std::string& code, const FeaturizerConfig& cfg);

/// Line-based normalization written independently of normalize_code.
std::string oracle_normalize(const std::string& code);

/// -w[gold] * log softmax(b + W v)[gold] via log-sum-exp in long double.
long double oracle_weighted_ce(const ModelState& m, const FeatureVector& v, std::size_t gold,
                               const std::vector<double>& w);

/// Row-major dense K x D times x plus b, plain double loop.
std::vector<double> naive_affine(const std::vector<std::vector<double>>& w, const std::vector<double>& b,
                                 const std::vector<double>& x);

}  // namespace mcdok::testing
