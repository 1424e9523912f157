// SPDX-License-Identifier: Apache-2.0
#include "mcdok/predictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mcdok/error.hpp"
#include "mcdok/io.hpp"

namespace mcdok {

bool ExternalPredictionSet::has_probabilities() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.probabilities.has_value(); });
}

std::vector<std::string> ExternalPredictionSet::decisions(const std::optional<DecisionPolicy>& policy) const {
  const bool threshold = policy && policy->kind == DecisionPolicy::Kind::binary_threshold;
  if (threshold && !has_probabilities())
    throw ValidationError("system '" + system_name + "' has hard labels only; threshold policies need probabilities");
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (policy && r.probabilities)
      out.push_back(decide(*r.probabilities, classes, *policy));
    else if (r.label)
      out.push_back(*r.label);
    else
      out.push_back(decide(*r.probabilities, classes, DecisionPolicy::argmax()));
  }
  return out;
}

namespace {

double parse_real(const std::string& text, const std::string& where) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(x))
    throw ValidationError(where + ": '" + text + "' is not a finite number");
  return x;
}

}  // namespace

ExternalPredictionSet parse_predictions(std::string_view csv, const LabelScheme& scheme, std::string system_name,
                                        const std::string& source) {
  const auto table = parse_csv(csv);
  if (table.empty()) throw ValidationError(source + ": empty prediction file");
  const auto& header = table.front();

  std::optional<std::size_t> id_col;
  std::optional<std::size_t> label_col;
  std::vector<std::optional<std::size_t>> prob_cols(scheme.size());
  bool any_prob = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == "id") {
      id_col = c;
    } else if (name == "label") {
      label_col = c;
    } else if (name.rfind("p_", 0) == 0) {
      const auto k = scheme.index_of(name.substr(2));
      if (!k) throw ValidationError(source + ": probability column '" + name + "' names an unknown class");
      prob_cols[*k] = c;
      any_prob = true;
    }
  }
  if (!id_col) throw ValidationError(source + ": missing 'id' column");
  if (any_prob) {
    for (std::size_t k = 0; k < prob_cols.size(); ++k)
      if (!prob_cols[k]) throw ValidationError(source + ": missing probability column 'p_" + scheme.classes()[k] + "'");
  }
  if (!any_prob && !label_col) throw ValidationError(source + ": need a 'label' column or p_<class> columns");

  ExternalPredictionSet set;
  set.system_name = std::move(system_name);
  set.classes = scheme.classes();
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& row = table[r];
    const std::string where = source + " row " + std::to_string(r + 1);
    if (row.size() != header.size()) throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
    PredictionRow pr;
    pr.id = row[*id_col];
    if (!seen.insert(pr.id).second) throw ValidationError(source + ": duplicate id '" + pr.id + "'");
    if (label_col) {
      scheme.require_index(row[*label_col]);
      pr.label = row[*label_col];
    }
    if (any_prob) {
      std::vector<double> p(scheme.size());
      double sum = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = parse_real(row[*prob_cols[k]], where);
        if (p[k] < 0.0) throw ValidationError(where + ": negative probability");
        sum += p[k];
      }
      if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
        throw ValidationError(where + ": probabilities sum to " + format_double(sum) + ", not 1");
      for (double& x : p) x /= sum;
      pr.probabilities = std::move(p);
    }
    set.rows.push_back(std::move(pr));
  }
  return set;
}

ExternalPredictionSet import_predictions(const std::filesystem::path& path, const LabelScheme& scheme,
                                         std::string system_name) {
  if (system_name.empty()) system_name = path.stem().string();
  return parse_predictions(read_file(path), scheme, std::move(system_name), path.string());
}

std::string predictions_csv(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& probs,
                            const std::vector<std::string>& classes, const std::vector<std::string>& labels) {
  std::vector<std::string> header{"id"};
  for (const auto& c : classes) header.push_back("p_" + c);
  header.push_back("label");
  std::string out = csv_row(header);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::string> row{ids[i]};
    for (double p : probs[i]) row.push_back(format_double(p));
    row.push_back(labels[i]);
    out += csv_row(row);
  }
  return out;
}

std::vector<EvaluatedSample> join_predictions(const Corpus& gold, const ExternalPredictionSet& set,
                                              const std::optional<DecisionPolicy>& policy) {
  if (set.classes != gold.scheme().classes())
    throw ValidationError("system '" + set.system_name + "' uses a different class list than the gold corpus");
  const auto decided = set.decisions(policy);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < set.rows.size(); ++i) by_id.emplace(set.rows[i].id, i);

  std::vector<EvaluatedSample> out;
  out.reserve(gold.size());
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (const auto& s : gold) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      if (missing.size() < 10) missing.push_back(s.id);
      ++missing_count;
      continue;
    }
    out.push_back({s.label, decided[it->second], s.language, s.family});
  }
  if (missing_count) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("system '" + set.system_name + "' has no prediction for " + std::to_string(missing_count) +
                          " gold id(s): " + list + (missing_count > missing.size() ? ", ..." : ""));
  }
  return out;
}

std::vector<RankedSystem> compare(const std::vector<ExternalPredictionSet>& sets, const Corpus& gold,
                                  const std::optional<DecisionPolicy>& policy, ClassSetPolicy class_set) {
  std::vector<RankedSystem> out;
  for (const auto& set : sets) {
    const auto joined = join_predictions(gold, set, policy);
    const auto report = evaluate(joined, gold.scheme(), class_set);
    out.push_back({set.system_name, report.macro_f1, report.weighted_f1});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedSystem& a, const RankedSystem& b) {
    if (a.macro_f1 != b.macro_f1) return a.macro_f1 > b.macro_f1;
    return a.system_name < b.system_name;
  });
  return out;
}

std::string ranking_csv(const std::vector<RankedSystem>& ranking) {
  std::string out = csv_row({"rank", "system", "macro_f1", "weighted_f1"});
  for (std::size_t i = 0; i < ranking.size(); ++i)
    out += csv_row({std::to_string(i + 1), ranking[i].system_name, format_double(ranking[i].macro_f1),
                    format_double(ranking[i].weighted_f1)});
  return out;
}

}  // namespace mcdok
