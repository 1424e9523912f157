// SPDX-License-Identifier: Apache-2.0
#include "mcdok/config.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mcdok/error.hpp"
#include "mcdok/io.hpp"

namespace mcdok {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

// Strips a trailing "# comment" that sits outside quotes.
std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ValidationError("config " + key + ": '" + v + "' is not a number");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ValidationError("config " + key + ": '" + v + "' is not a non-negative integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config " + key + ": '" + v + "' is not a boolean");
}

const std::set<std::string> kKnownKeys = {
    "featurizer.ngram_min",   "featurizer.ngram_max",     "featurizer.hash_dim",   "featurizer.max_code_bytes",
    "featurizer.l2_normalize", "training.profile",        "training.lr_max",       "training.warmup_ratio",
    "training.epochs",        "training.eval_interval",   "training.selection_metric", "training.beta1",
    "training.beta2",         "training.eps_opt",         "training.weight_decay", "training.seed",
    "decision.theta",         "decision.epsilon",         "decision.positive_class", "curation.seed"};

}  // namespace

ConfigValues ConfigValues::parse(std::string_view text, const std::string& source) {
  ConfigValues cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = source + " line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = unquote(trim(std::string_view(line).substr(0, eq)));
    if (key.empty()) throw ValidationError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    cfg.set(full, unquote(trim(std::string_view(line).substr(eq + 1))));
  }
  return cfg;
}

ConfigValues ConfigValues::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

void ConfigValues::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ValidationError("expected section.key=value, got '" + std::string(assignment) + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) throw ValidationError("config key '" + key + "' needs a section prefix");
  set(key, unquote(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> ConfigValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

RunConfig RunConfig::resolve(const ConfigValues& values, char subtask, std::optional<std::string> profile_flag) {
  for (const auto& [key, value] : values.values()) {
    const bool free_form = key.rfind("families.", 0) == 0 || key.rfind("paths.", 0) == 0;
    if (!free_form && !kKnownKeys.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }

  RunConfig rc;
  rc.profile = profile_flag ? *profile_flag : values.get("training.profile").value_or("paper");
  rc.training = TrainingConfig::for_profile(rc.profile, subtask);

  auto real = [&](const char* key, double& field) {
    if (auto v = values.get(key)) field = to_real(key, *v);
  };
  auto count = [&](const char* key, std::size_t& field) {
    if (auto v = values.get(key)) field = static_cast<std::size_t>(to_uint(key, *v));
  };

  count("featurizer.ngram_min", rc.featurizer.ngram_min);
  count("featurizer.ngram_max", rc.featurizer.ngram_max);
  count("featurizer.hash_dim", rc.featurizer.hash_dim);
  count("featurizer.max_code_bytes", rc.featurizer.max_code_bytes);
  if (auto v = values.get("featurizer.l2_normalize")) rc.featurizer.l2_normalize = to_bool("featurizer.l2_normalize", *v);

  real("training.lr_max", rc.training.lr_max);
  real("training.warmup_ratio", rc.training.warmup_ratio);
  count("training.epochs", rc.training.epochs);
  count("training.eval_interval", rc.training.eval_interval);
  if (auto v = values.get("training.selection_metric")) rc.training.selection_metric = parse_selection_metric(*v);
  real("training.beta1", rc.training.beta1);
  real("training.beta2", rc.training.beta2);
  real("training.eps_opt", rc.training.eps_opt);
  real("training.weight_decay", rc.training.weight_decay);
  if (auto v = values.get("training.seed")) rc.training.seed = to_uint("training.seed", *v);

  if (auto v = values.get("decision.theta")) rc.theta = to_real("decision.theta", *v);
  real("decision.epsilon", rc.epsilon);
  if (auto v = values.get("decision.positive_class")) rc.positive_class = *v;
  if (auto v = values.get("curation.seed")) rc.curation_seed = to_uint("curation.seed", *v);

  for (const auto& [key, value] : values.values()) {
    if (key.rfind("families.", 0) == 0) rc.families[key.substr(9)] = value;
    if (key.rfind("paths.", 0) == 0) rc.paths[key.substr(6)] = value;
  }

  rc.featurizer.validate();
  rc.training.validate();
  return rc;
}

std::optional<DecisionPolicy> RunConfig::decision_policy() const {
  if (!theta) return std::nullopt;
  return DecisionPolicy::threshold(*theta, epsilon, positive_class);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"featurizer", featurizer.to_json()},
                      {"profile", profile},
                      {"training", training.to_json()},
                      {"decision", {{"kind", theta ? "binary_threshold" : "argmax"},
                                    {"epsilon", epsilon},
                                    {"positive_class", positive_class}}},
                      {"curation", {{"seed", curation_seed}}},
                      {"families", families},
                      {"paths", paths}};
  if (theta) j["decision"]["theta"] = *theta;
  return j;
}

}  // namespace mcdok
