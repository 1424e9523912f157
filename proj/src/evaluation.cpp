// SPDX-License-Identifier: Apache-2.0
#include "mcdok/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "mcdok/error.hpp"
#include "mcdok/io.hpp"

namespace mcdok {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> cls)
    : classes(std::move(cls)), counts(classes.size(), std::vector<std::uint64_t>(classes.size(), 0)) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::support(std::size_t gold) const {
  std::uint64_t n = 0;
  for (auto c : counts[gold]) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::predicted(std::size_t pred) const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row[pred];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) throw ValidationError("cannot add confusion matrices over different classes");
  for (std::size_t g = 0; g < size(); ++g)
    for (std::size_t p = 0; p < size(); ++p) counts[g][p] += other.counts[g][p];
  return *this;
}

ConfusionMatrix confusion(std::span<const std::string> golds, std::span<const std::string> preds,
                          const LabelScheme& scheme) {
  if (golds.size() != preds.size())
    throw ValidationError("gold and prediction lists differ in length (" + std::to_string(golds.size()) + " vs " +
                          std::to_string(preds.size()) + ")");
  ConfusionMatrix m(scheme.classes());
  for (std::size_t i = 0; i < golds.size(); ++i) ++m.counts[scheme.require_index(golds[i])][scheme.require_index(preds[i])];
  return m;
}

ConfusionMatrix confusion_indices(std::span<const std::size_t> golds, std::span<const std::size_t> preds,
                                  std::vector<std::string> classes) {
  if (golds.size() != preds.size()) throw ValidationError("gold and prediction lists differ in length");
  ConfusionMatrix m(std::move(classes));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] >= m.size() || preds[i] >= m.size()) throw ValidationError("class index out of range");
    ++m.counts[golds[i]][preds[i]];
  }
  return m;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

ClassScores prf(const ConfusionMatrix& matrix, std::size_t cls) {
  if (cls >= matrix.size()) throw ValidationError("class index out of range");
  const double tp = static_cast<double>(matrix.counts[cls][cls]);
  const double pred = static_cast<double>(matrix.predicted(cls));
  const double gold = static_cast<double>(matrix.support(cls));
  ClassScores s;
  s.precision = ratio(tp, pred);
  s.recall = ratio(tp, gold);
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

ClassScores prf(const ConfusionMatrix& matrix, std::string_view cls) {
  auto it = std::find(matrix.classes.begin(), matrix.classes.end(), cls);
  if (it == matrix.classes.end()) throw ValidationError("unknown class '" + std::string(cls) + "'");
  return prf(matrix, static_cast<std::size_t>(it - matrix.classes.begin()));
}

double macro_f1(const ConfusionMatrix& matrix, ClassSetPolicy policy) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    if (policy == ClassSetPolicy::present && matrix.support(c) == 0 && matrix.predicted(c) == 0) continue;
    sum += prf(matrix, c).f1;
    ++n;
  }
  if (n == 0) throw ValidationError("macro F1 over an empty class set");
  return sum / static_cast<double>(n);
}

double weighted_f1(const ConfusionMatrix& matrix) {
  const auto total = matrix.total();
  if (total == 0) throw ValidationError("weighted F1 needs at least one gold sample");
  double sum = 0.0;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    const auto support = matrix.support(c);
    if (support) sum += static_cast<double>(support) * prf(matrix, c).f1;
  }
  return sum / static_cast<double>(total);
}

EvaluationReport make_report(const ConfusionMatrix& matrix, ClassSetPolicy policy) {
  EvaluationReport r;
  r.matrix = matrix;
  r.policy = policy;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    r.per_class.push_back({matrix.classes[c], prf(matrix, c), matrix.support(c), matrix.predicted(c)});
    if (matrix.support(c) == 0) r.missing_gold_classes.push_back(matrix.classes[c]);
  }
  r.macro_f1 = macro_f1(matrix, policy);
  r.weighted_f1 = weighted_f1(matrix);
  return r;
}

namespace {

ConfusionMatrix tally(std::span<const EvaluatedSample> samples, const LabelScheme& scheme) {
  ConfusionMatrix m(scheme.classes());
  for (const auto& s : samples) ++m.counts[scheme.require_index(s.gold)][scheme.require_index(s.pred)];
  return m;
}

const char* policy_name(ClassSetPolicy p) { return p == ClassSetPolicy::present ? "present" : "full_scheme"; }

}  // namespace

EvaluationReport evaluate(std::span<const EvaluatedSample> samples, const LabelScheme& scheme, ClassSetPolicy policy) {
  return make_report(tally(samples, scheme), policy);
}

std::map<std::string, EvaluationReport> breakdown(std::span<const EvaluatedSample> samples, Dimension dim,
                                                  const LabelScheme& scheme, ClassSetPolicy policy) {
  if (dim == Dimension::generator) throw ValidationError("breakdown supports language or family");
  std::map<std::string, std::vector<EvaluatedSample>> parts;
  for (const auto& s : samples) parts[dim == Dimension::language ? s.language : s.family].push_back(s);
  std::map<std::string, EvaluationReport> out;
  for (const auto& [key, members] : parts) out.emplace(key, evaluate(members, scheme, policy));
  return out;
}

LeakageResult leakage_filter(const Corpus& test, const std::unordered_set<Digest, DigestHash>& reference) {
  std::vector<std::size_t> keep;
  keep.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!reference.count(test[i].digest)) keep.push_back(i);
  const std::size_t removed = test.size() - keep.size();
  return {test.select(keep, test.provenance() + " | leakage-filtered"), removed};
}

double random_baseline(std::size_t num_classes) {
  if (num_classes < 2) throw ValidationError("random baseline needs at least 2 classes");
  return 1.0 / static_cast<double>(num_classes);
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : per_class)
    per.push_back({{"class", c.cls},
                   {"precision", c.scores.precision},
                   {"recall", c.scores.recall},
                   {"f1", c.scores.f1},
                   {"support", c.support},
                   {"predicted", c.predicted}});
  nlohmann::json j = {{"classes", matrix.classes},
                      {"confusion", matrix.counts},
                      {"samples", matrix.total()},
                      {"per_class", per},
                      {"macro_f1", macro_f1},
                      {"weighted_f1", weighted_f1},
                      {"class_set_policy", policy_name(policy)},
                      {"missing_gold_classes", missing_gold_classes}};
  if (!groups.empty()) {
    nlohmann::json g = nlohmann::json::object();
    for (const auto& [dim, reports] : groups) {
      nlohmann::json d = nlohmann::json::object();
      for (const auto& [key, rep] : reports) d[key] = rep.to_json();
      g[dim] = d;
    }
    j["groups"] = g;
  }
  if (leakage_removed) j["leakage"] = {{"removed", *leakage_removed}};
  return j;
}

std::string confusion_csv(const ConfusionMatrix& matrix) {
  std::vector<std::string> header{"gold\\pred"};
  header.insert(header.end(), matrix.classes.begin(), matrix.classes.end());
  std::string out = csv_row(header);
  for (std::size_t g = 0; g < matrix.size(); ++g) {
    std::vector<std::string> row{matrix.classes[g]};
    for (auto c : matrix.counts[g]) row.push_back(std::to_string(c));
    out += csv_row(row);
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fixed(double x, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

std::string breakdown_svg(const std::string& title, const std::map<std::string, EvaluationReport>& groups) {
  constexpr int kBar = 18;
  constexpr int kGap = 14;
  constexpr int kPlotH = 240;
  constexpr int kLeft = 50;
  constexpr int kTop = 40;
  const int group_w = 2 * kBar + kGap;
  const int width = kLeft + static_cast<int>(groups.size()) * group_w + 140;
  const int height = kTop + kPlotH + 90;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    const int y = kTop + kPlotH - static_cast<int>(v * kPlotH);
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << width - 140 << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
  }
  int x = kLeft + kGap / 2;
  for (const auto& [key, rep] : groups) {
    const double vals[2] = {rep.macro_f1, rep.weighted_f1};
    const char* colors[2] = {"#4c72b0", "#dd8452"};
    for (int b = 0; b < 2; ++b) {
      const int h = static_cast<int>(vals[b] * kPlotH + 0.5);
      svg << "<rect x=\"" << x + b * kBar << "\" y=\"" << kTop + kPlotH - h << "\" width=\"" << kBar - 2
          << "\" height=\"" << h << "\" fill=\"" << colors[b] << "\"><title>" << xml_escape(key) << ' '
          << (b == 0 ? "Macro" : "Weighted") << " F1 " << fixed(vals[b], 4) << "</title></rect>\n";
    }
    const int lx = x + kBar;
    const int ly = kTop + kPlotH + 12;
    svg << "<text x=\"" << lx << "\" y=\"" << ly << "\" text-anchor=\"end\" transform=\"rotate(-45 " << lx << ' '
        << ly << ")\">" << xml_escape(key) << "</text>\n";
    x += group_w;
  }
  const int legend_x = width - 125;
  svg << "<rect x=\"" << legend_x << "\" y=\"" << kTop << "\" width=\"12\" height=\"12\" fill=\"#4c72b0\"/>\n";
  svg << "<text x=\"" << legend_x + 18 << "\" y=\"" << kTop + 10 << "\">Macro F1</text>\n";
  svg << "<rect x=\"" << legend_x << "\" y=\"" << kTop + 20 << "\" width=\"12\" height=\"12\" fill=\"#dd8452\"/>\n";
  svg << "<text x=\"" << legend_x + 18 << "\" y=\"" << kTop + 30 << "\">Weighted F1</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mcdok
