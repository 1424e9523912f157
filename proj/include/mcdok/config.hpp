// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mcdok/features.hpp"
#include "mcdok/model.hpp"
#include "mcdok/training.hpp"

namespace mcdok {

/// Flat "section.key" -> raw value map read from a config file.
///
///   # comment
///   [featurizer]
///   hash_dim = 65536
///   [training]
///   profile = "desk"
///   [families]
///   gpt-4o = openai
class ConfigValues {
 public:
  static ConfigValues parse(std::string_view text, const std::string& source = "config");
  static ConfigValues load(const std::filesystem::path& path);

  /// Applies "section.key=value".
  void set(std::string_view assignment);
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Every module's settings, resolved from defaults, the config file and flags.
struct RunConfig {
  FeaturizerConfig featurizer;
  std::string profile = "paper";
  TrainingConfig training;
  /// Threshold policy when set; argmax otherwise.
  std::optional<double> theta;
  double epsilon = 1e-6;
  std::string positive_class = "machine";
  std::uint64_t curation_seed = 0;
  std::map<std::string, std::string> families;
  std::map<std::string, std::string> paths;

  /// Defaults, then the profile for `subtask`, then `values`.
  static RunConfig resolve(const ConfigValues& values, char subtask, std::optional<std::string> profile_flag = {});

  std::optional<DecisionPolicy> decision_policy() const;
  nlohmann::json to_json() const;
};

}  // namespace mcdok
