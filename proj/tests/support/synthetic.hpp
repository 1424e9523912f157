// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mcdok/corpus.hpp"

namespace mcdok::testing {

enum class Style { human, machine };

/// A small program in `language` ("Python", "C++" or "Java"). Machine style
/// uses descriptive identifiers, explanatory comments and 4-space indents;
/// human style uses terse names, no comments and tabs or 2-space indents.
/// `unique` is embedded so distinct calls yield distinct programs.
std::string synthetic_program(Style style, const std::string& language, std::uint64_t unique, std::mt19937_64& rng);

struct SyntheticSpec {
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
  /// Fraction of samples labelled machine (binary scheme).
  double machine_fraction = 0.5;
  /// Probability that a sample is written in the other class's style.
  double style_noise = 0.0;
  std::vector<std::string> languages = {"Python", "C++", "Java"};
  std::vector<std::string> machine_generators = {"gpt-4o", "qwen2.5-coder-7b", "llama-3.1-8b"};
};

/// Binary-scheme samples with a planted stylistic signal in the machine class.
std::vector<CodeSample> synthetic_binary(const SyntheticSpec& spec);

/// One JSONL line per sample in the corpus input schema.
void write_jsonl(const std::filesystem::path& path, const std::vector<CodeSample>& samples);

/// Builds a corpus in memory (digests computed) from raw samples.
Corpus make_corpus(const LabelScheme& scheme, std::vector<CodeSample> samples, std::string provenance = "fixture");

/// A sample with the given labels and code; digest computed.
CodeSample make_sample(std::string id, std::string code, std::string label, std::string language = "Python",
                       std::string generator = "human", std::string family = {});

/// Same text with every LF written as CRLF.
std::string to_crlf(std::string_view text);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace mcdok::testing
