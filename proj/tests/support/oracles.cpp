// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "mcdok/features.hpp"

namespace mcdok::testing {

std::vector<Tally> tally_labels(const std::vector<int>& golds, const std::vector<int>& preds, int k) {
  std::vector<Tally> t(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    for (int c = 0; c < k; ++c) {
      const bool g = golds[i] == c;
      const bool p = preds[i] == c;
      auto& tc = t[static_cast<std::size_t>(c)];
      if (g) tc.support += 1;
      if (g && p) tc.tp += 1;
      if (!g && p) tc.fp += 1;
      if (g && !p) tc.fn += 1;
    }
  }
  return t;
}

double oracle_f1(const Tally& t) {
  const double denom = 2 * t.tp + t.fp + t.fn;
  return denom == 0 ? 0.0 : 2 * t.tp / denom;
}

double oracle_macro_f1(const std::vector<int>& golds, const std::vector<int>& preds, int k, bool full) {
  const auto t = tally_labels(golds, preds, k);
  double sum = 0;
  int n = 0;
  for (const auto& tc : t) {
    if (!full && tc.support == 0 && tc.fp == 0) continue;
    sum += oracle_f1(tc);
    ++n;
  }
  return sum / n;
}

double oracle_weighted_f1(const std::vector<int>& golds, const std::vector<int>& preds, int k) {
  const auto t = tally_labels(golds, preds, k);
  double sum = 0;
  for (const auto& tc : t) sum += tc.support * oracle_f1(tc);
  return sum / static_cast<double>(golds.size());
}

std::map<std::pair<std::string, std::string>, std::uint64_t> tally_pairs(const std::vector<std::string>& golds,
                                                                          const std::vector<std::string>& preds) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (std::size_t i = 0; i < golds.size(); ++i) ++out[{golds[i], preds[i]}];
  return out;
}

std::map<std::uint32_t, double> ngram_dictionary_oracle(const std::string& code, const FeaturizerConfig& cfg) {
  const std::string text = code.substr(0, cfg.max_code_bytes);
  std::map<std::string, double> dict;
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n)
    for (std::size_t i = 0; i + n <= text.size(); ++i) dict[text.substr(i, n)] += 1;
  std::map<std::uint32_t, double> folded;
  for (const auto& [gram, count] : dict) folded[ngram_index(gram, cfg.hash_dim)] += count;
  return folded;
}

std::string oracle_normalize(const std::string& code) {
  const std::string unified = std::regex_replace(code, std::regex("\r\n?"), "\n");
  return std::regex_replace(unified, std::regex("[ \t\f\v]+(\n|$)"), "$1");
}

std::vector<double> naive_affine(const std::vector<std::vector<double>>& w, const std::vector<double>& b,
                                 const std::vector<double>& x) {
  std::vector<double> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    double s = b[k];
    for (std::size_t i = 0; i < x.size(); ++i) s += w[k][i] * x[i];
    out[k] = s;
  }
  return out;
}

long double oracle_weighted_ce(const ModelState& m, const FeatureVector& v, std::size_t gold,
                               const std::vector<double>& w) {
  std::vector<long double> z(m.classes.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = m.bias[k];
    for (const auto& [i, x] : v.entries) z[k] += static_cast<long double>(m.weights[k * m.featurizer.hash_dim + i]) * x;
  }
  long double top = z[0];
  for (auto x : z) top = std::max(top, x);
  long double sum = 0;
  for (auto x : z) sum += std::exp(x - top);
  return w[gold] * (top + std::log(sum) - z[gold]);
}

}  // namespace mcdok::testing
