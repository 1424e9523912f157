// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdok/hash.hpp"

namespace mcdok {

/// The three label schemes. Class order is fixed; a class's index is its
/// position in the list and "human" is always index 0.
///
///   binary   : human, machine
///   family11 : human, 01-ai, bigcode, deepseek-ai, google, ibm-granite,
///              meta-llama, microsoft, mistralai, openai, qwen
///   hybrid4  : human, machine, hybrid, adversarial
class LabelScheme {
 public:
  enum class Kind { binary, family11, hybrid4 };

  static LabelScheme binary();
  static LabelScheme family11();
  static LabelScheme hybrid4();
  static LabelScheme from_kind(Kind kind);
  /// Accepts "binary", "family11", "hybrid4".
  static LabelScheme from_name(std::string_view name);
  /// Subtask A/B/C to binary/family11/hybrid4.
  static LabelScheme for_subtask(char subtask);

  Kind kind() const { return kind_; }
  std::string_view name() const;
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  std::optional<std::size_t> index_of(std::string_view cls) const;
  /// index_of or ValidationError.
  std::size_t require_index(std::string_view cls) const;

  friend bool operator==(const LabelScheme& a, const LabelScheme& b) { return a.kind_ == b.kind_; }

 private:
  LabelScheme(Kind kind, std::vector<std::string> classes) : kind_(kind), classes_(std::move(classes)) {}
  Kind kind_;
  std::vector<std::string> classes_;
};

struct CodeSample {
  std::string id;
  std::string code;
  std::string language;
  std::string generator;
  std::string family;
  std::string label;
  std::string domain;
  Digest digest;
  /// Unrecognized keys from the input record, written back verbatim.
  nlohmann::json extra = nlohmann::json::object();
};

/// Immutable, ordered collection of samples under one scheme.
class Corpus {
 public:
  Corpus(LabelScheme scheme, std::vector<CodeSample> samples, std::string provenance = {});

  const LabelScheme& scheme() const { return scheme_; }
  std::span<const CodeSample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const CodeSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::string& provenance() const { return provenance_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// New corpus holding the samples at `indices`, in the given order.
  Corpus select(std::span<const std::size_t> indices, std::string provenance) const;

 private:
  LabelScheme scheme_;
  std::vector<CodeSample> samples_;
  std::string provenance_;
};

struct LoadOptions {
  /// When false, "label", "language" and "generator" may be absent (inference inputs).
  bool require_labels = true;
  /// generator -> family, used when a record has no "family" key.
  std::map<std::string, std::string> family_map;
};

/// Parses JSONL records. `source` names the stream in error messages.
Corpus parse_corpus(std::istream& in, const LabelScheme& scheme, const std::string& source,
                    const LoadOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const LabelScheme& scheme,
                   const LoadOptions& options = {});

nlohmann::json sample_to_json(const CodeSample& sample);
/// One compact JSON object per line, keys sorted.
void write_corpus(std::ostream& out, const Corpus& corpus);
std::string serialize_corpus(const Corpus& corpus);

enum class Dimension { language, generator, family };

Dimension parse_dimension(std::string_view name);
std::string_view dimension_name(Dimension dim);
std::vector<Dimension> parse_dimensions(std::span<const std::string> names);

using StratumKey = std::vector<std::string>;

/// Values of `sample` for each of `dims`, in order.
StratumKey stratum_key(const CodeSample& sample, std::span<const Dimension> dims);
/// Convenience overload that validates dimension names.
StratumKey stratum_key(const CodeSample& sample, std::span<const std::string> dims);
/// "a|b|c" rendering used in reports.
std::string join_key(const StratumKey& key);

}  // namespace mcdok
