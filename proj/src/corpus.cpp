// SPDX-License-Identifier: Apache-2.0
#include "mcdok/corpus.hpp"

#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "mcdok/error.hpp"

namespace mcdok {

LabelScheme LabelScheme::binary() { return {Kind::binary, {"human", "machine"}}; }

LabelScheme LabelScheme::family11() {
  return {Kind::family11,
          {"human", "01-ai", "bigcode", "deepseek-ai", "google", "ibm-granite", "meta-llama",
           "microsoft", "mistralai", "openai", "qwen"}};
}

LabelScheme LabelScheme::hybrid4() { return {Kind::hybrid4, {"human", "machine", "hybrid", "adversarial"}}; }

LabelScheme LabelScheme::from_kind(Kind kind) {
  switch (kind) {
    case Kind::binary: return binary();
    case Kind::family11: return family11();
    case Kind::hybrid4: return hybrid4();
  }
  throw ValidationError("unknown label scheme");
}

LabelScheme LabelScheme::from_name(std::string_view name) {
  if (name == "binary") return binary();
  if (name == "family11") return family11();
  if (name == "hybrid4") return hybrid4();
  throw ValidationError("unknown label scheme '" + std::string(name) + "'");
}

LabelScheme LabelScheme::for_subtask(char subtask) {
  switch (subtask) {
    case 'A': case 'a': return binary();
    case 'B': case 'b': return family11();
    case 'C': case 'c': return hybrid4();
    default: throw ValidationError(std::string("unknown subtask '") + subtask + "' (expected A, B or C)");
  }
}

std::string_view LabelScheme::name() const {
  switch (kind_) {
    case Kind::binary: return "binary";
    case Kind::family11: return "family11";
    case Kind::hybrid4: return "hybrid4";
  }
  return "?";
}

std::optional<std::size_t> LabelScheme::index_of(std::string_view cls) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == cls) return i;
  return std::nullopt;
}

std::size_t LabelScheme::require_index(std::string_view cls) const {
  if (auto i = index_of(cls)) return *i;
  throw ValidationError("label '" + std::string(cls) + "' is not a class of the " + std::string(name()) +
                        " scheme");
}

Corpus::Corpus(LabelScheme scheme, std::vector<CodeSample> samples, std::string provenance)
    : scheme_(std::move(scheme)), samples_(std::move(samples)), provenance_(std::move(provenance)) {}

Corpus Corpus::select(std::span<const std::size_t> indices, std::string provenance) const {
  std::vector<CodeSample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i));
  return Corpus(scheme_, std::move(out), std::move(provenance));
}

namespace {

const std::unordered_set<std::string> kKnownKeys = {"id", "code", "language", "generator",
                                                    "label", "family", "domain"};

std::string required_string(const nlohmann::json& rec, const char* key, const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end()) throw ValidationError(where + ": missing required field \"" + key + "\"");
  if (!it->is_string()) throw ValidationError(where + ": field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

std::string optional_string(const nlohmann::json& rec, const char* key, const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(where + ": field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

Corpus parse_corpus(std::istream& in, const LabelScheme& scheme, const std::string& source,
                    const LoadOptions& options) {
  std::vector<CodeSample> samples;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + " line " + std::to_string(line_no);

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + ": malformed JSON record (" + e.what() + ")");
    }
    if (!rec.is_object()) throw ValidationError(where + ": record is not a JSON object");

    CodeSample s;
    s.id = required_string(rec, "id", where);
    s.code = required_string(rec, "code", where);
    if (options.require_labels) {
      s.language = required_string(rec, "language", where);
      s.generator = required_string(rec, "generator", where);
      s.label = required_string(rec, "label", where);
    } else {
      s.language = optional_string(rec, "language", where);
      s.generator = optional_string(rec, "generator", where);
      s.label = optional_string(rec, "label", where);
    }
    s.family = optional_string(rec, "family", where);
    s.domain = optional_string(rec, "domain", where);

    if (s.id.empty()) throw ValidationError(where + ": empty id");
    if (s.code.empty()) throw ValidationError(where + ": empty code");
    if (!s.label.empty() || options.require_labels) {
      if (!scheme.index_of(s.label))
        throw ValidationError(where + ": label '" + s.label + "' is not a class of the " +
                              std::string(scheme.name()) + " scheme");
    }
    if (!ids.insert(s.id).second) throw ValidationError(where + ": duplicate id '" + s.id + "'");
    if (s.family.empty()) {
      auto it = options.family_map.find(s.generator);
      s.family = it != options.family_map.end() ? it->second : s.generator;
    }
    for (auto& [key, value] : rec.items())
      if (!kKnownKeys.count(key)) s.extra[key] = value;
    s.digest = content_digest(s.code);
    samples.push_back(std::move(s));
  }
  if (in.bad()) throw IoError("read error on " + source);
  return Corpus(scheme, std::move(samples), source);
}

Corpus load_corpus(const std::filesystem::path& path, const LabelScheme& scheme, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return parse_corpus(in, scheme, path.string(), options);
}

nlohmann::json sample_to_json(const CodeSample& s) {
  nlohmann::json rec = s.extra;
  rec["id"] = s.id;
  rec["code"] = s.code;
  rec["language"] = s.language;
  rec["generator"] = s.generator;
  rec["family"] = s.family;
  rec["label"] = s.label;
  if (!s.domain.empty()) rec["domain"] = s.domain;
  return rec;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus) out << sample_to_json(s).dump() << '\n';
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  write_corpus(out, corpus);
  return out.str();
}

Dimension parse_dimension(std::string_view name) {
  if (name == "language") return Dimension::language;
  if (name == "generator") return Dimension::generator;
  if (name == "family") return Dimension::family;
  throw ValidationError("unknown stratum dimension '" + std::string(name) +
                        "' (expected language, generator or family)");
}

std::string_view dimension_name(Dimension dim) {
  switch (dim) {
    case Dimension::language: return "language";
    case Dimension::generator: return "generator";
    case Dimension::family: return "family";
  }
  return "?";
}

std::vector<Dimension> parse_dimensions(std::span<const std::string> names) {
  std::vector<Dimension> dims;
  dims.reserve(names.size());
  for (const auto& n : names) dims.push_back(parse_dimension(n));
  return dims;
}

StratumKey stratum_key(const CodeSample& sample, std::span<const Dimension> dims) {
  StratumKey key;
  key.reserve(dims.size());
  for (auto d : dims) {
    switch (d) {
      case Dimension::language: key.push_back(sample.language); break;
      case Dimension::generator: key.push_back(sample.generator); break;
      case Dimension::family: key.push_back(sample.family); break;
    }
  }
  return key;
}

StratumKey stratum_key(const CodeSample& sample, std::span<const std::string> dims) {
  const auto parsed = parse_dimensions(dims);
  return stratum_key(sample, parsed);
}

std::string join_key(const StratumKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += '|';
    out += key[i];
  }
  return out;
}

}  // namespace mcdok
