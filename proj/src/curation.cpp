// SPDX-License-Identifier: Apache-2.0
#include "mcdok/curation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_set>

#include "mcdok/error.hpp"

namespace mcdok {

void CurationRecipe::validate() const {
  if (train_stratum_cap < 1 || train_class_cap < 1 || val_stratum_cap < 1 || val_class_cap < 1)
    throw ValidationError("curation caps must be >= 1");
}

namespace {

nlohmann::json dims_json(std::span<const Dimension> dims) {
  auto arr = nlohmann::json::array();
  for (auto d : dims) arr.push_back(std::string(dimension_name(d)));
  return arr;
}

}  // namespace

nlohmann::json CurationRecipe::to_json() const {
  return {{"train", {{"stratum_dims", dims_json(train_stratum_dims)},
                     {"stratum_cap", train_stratum_cap},
                     {"class_cap", train_class_cap}}},
          {"validation", {{"stratum_dims", dims_json(val_stratum_dims)},
                          {"stratum_cap", val_stratum_cap},
                          {"class_cap", val_class_cap}}},
          {"seed", seed}};
}

CurationRecipe preset_recipe(char subtask) {
  using D = Dimension;
  switch (subtask) {
    case 'A': case 'a':
      return {{D::language, D::generator}, 10000, 20000, {D::language, D::generator}, 1000, 1000, 0};
    case 'B': case 'b':
      return {{D::generator}, 10000, 2000, {D::generator}, 1000, 500, 0};
    case 'C': case 'c':
      return {{D::generator, D::language}, 10000, 10000, {D::generator, D::language}, 1000, 500, 0};
    default:
      throw ValidationError(std::string("unknown subtask '") + subtask + "' (expected A, B or C)");
  }
}

Corpus deduplicate(const Corpus& corpus) {
  std::unordered_set<Digest, DigestHash> seen;
  std::vector<std::size_t> keep;
  keep.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (seen.insert(corpus[i].digest).second) keep.push_back(i);
  return corpus.select(keep, corpus.provenance() + " | dedup");
}

Digest selection_key(std::uint64_t seed, const Digest& digest) {
  unsigned char buf[24];
  auto put = [&](int offset, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf[offset + i] = static_cast<unsigned char>(v >> (8 * i));
  };
  put(0, seed);
  put(8, digest.hi);
  put(16, digest.lo);
  return murmur3_128(std::string_view(reinterpret_cast<const char*>(buf), sizeof buf));
}

namespace {

template <typename KeyFn>
std::vector<std::size_t> capped_indices(const Corpus& corpus, std::size_t cap, std::uint64_t seed, KeyFn key_of) {
  if (cap < 1) throw ValidationError("cap must be >= 1");
  std::map<StratumKey, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[key_of(corpus[i])].push_back(i);

  std::vector<std::size_t> keep;
  for (auto& [key, members] : strata) {
    if (members.size() > cap) {
      std::vector<std::pair<Digest, std::size_t>> ranked;
      ranked.reserve(members.size());
      for (auto i : members) ranked.emplace_back(selection_key(seed, corpus[i].digest), i);
      std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(cap), ranked.end());
      ranked.resize(cap);
      members.clear();
      for (auto& r : ranked) members.push_back(r.second);
    }
    keep.insert(keep.end(), members.begin(), members.end());
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

Corpus cap_per_stratum(const Corpus& corpus, std::span<const Dimension> dims, std::size_t cap, std::uint64_t seed) {
  const std::vector<Dimension> d(dims.begin(), dims.end());
  auto keep = capped_indices(corpus, cap, seed, [&](const CodeSample& s) { return stratum_key(s, d); });
  return corpus.select(keep, corpus.provenance() + " | stratum-cap " + std::to_string(cap));
}

Corpus cap_per_class(const Corpus& corpus, std::size_t cap, std::uint64_t seed) {
  auto keep = capped_indices(corpus, cap, seed, [](const CodeSample& s) { return StratumKey{s.label}; });
  return corpus.select(keep, corpus.provenance() + " | class-cap " + std::to_string(cap));
}

namespace {

nlohmann::json stage_counts(const std::string& stage, const Corpus& c, std::span<const Dimension> dims) {
  nlohmann::json by_class = nlohmann::json::object();
  for (const auto& cls : c.scheme().classes()) by_class[cls] = 0;
  std::map<std::string, std::size_t> by_stratum;
  for (const auto& s : c) {
    by_class[s.label] = by_class[s.label].get<std::size_t>() + 1;
    ++by_stratum[join_key(stratum_key(s, dims))];
  }
  return {{"stage", stage}, {"total", c.size()}, {"by_class", by_class}, {"by_stratum", by_stratum}};
}

void require_same_scheme(const Corpus& a, const Corpus& b) {
  if (!(a.scheme() == b.scheme()))
    throw ValidationError("corpora use different label schemes: " + std::string(a.scheme().name()) + " vs " +
                          std::string(b.scheme().name()));
}

}  // namespace

SplitBundle apply_recipe(const Corpus& train_source, std::span<const Corpus> val_sources,
                         const CurationRecipe& recipe) {
  recipe.validate();
  const auto& scheme = train_source.scheme();

  std::vector<CodeSample> pooled;
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& v : val_sources) {
    require_same_scheme(train_source, v);
    sources.push_back({{"provenance", v.provenance()}, {"total", v.size()}});
    pooled.insert(pooled.end(), v.begin(), v.end());
  }
  Corpus val_pool(scheme, std::move(pooled), "validation pool");

  nlohmann::json val_stages = nlohmann::json::array();
  val_stages.push_back(stage_counts("concatenate", val_pool, recipe.val_stratum_dims));
  Corpus val = deduplicate(val_pool);
  val_stages.push_back(stage_counts("deduplicate", val, recipe.val_stratum_dims));
  val = cap_per_stratum(val, recipe.val_stratum_dims, recipe.val_stratum_cap, recipe.seed);
  val_stages.push_back(stage_counts("stratum_cap", val, recipe.val_stratum_dims));
  val = cap_per_class(val, recipe.val_class_cap, recipe.seed);
  val_stages.push_back(stage_counts("class_cap", val, recipe.val_stratum_dims));

  nlohmann::json train_stages = nlohmann::json::array();
  train_stages.push_back(stage_counts("input", train_source, recipe.train_stratum_dims));
  Corpus train = deduplicate(train_source);
  train_stages.push_back(stage_counts("deduplicate", train, recipe.train_stratum_dims));
  train = cap_per_stratum(train, recipe.train_stratum_dims, recipe.train_stratum_cap, recipe.seed);
  train_stages.push_back(stage_counts("stratum_cap", train, recipe.train_stratum_dims));
  train = cap_per_class(train, recipe.train_class_cap, recipe.seed);
  train_stages.push_back(stage_counts("class_cap", train, recipe.train_stratum_dims));

  std::unordered_set<Digest, DigestHash> val_digests;
  for (const auto& s : val) val_digests.insert(s.digest);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (!val_digests.count(train[i].digest)) keep.push_back(i);
  const std::size_t overlap = train.size() - keep.size();
  train = train.select(keep, train.provenance() + " | minus validation");
  train_stages.push_back(stage_counts("remove_validation_overlap", train, recipe.train_stratum_dims));

  std::vector<std::string> empty_classes;
  {
    std::vector<std::size_t> counts(scheme.size(), 0);
    for (const auto& s : train) ++counts[scheme.require_index(s.label)];
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (counts[k] == 0) empty_classes.push_back(scheme.classes()[k]);
  }
  if (!empty_classes.empty()) {
    std::string names;
    for (const auto& n : empty_classes) names += (names.empty() ? "" : ", ") + n;
    throw ValidationError("curated train split has no samples for class(es): " + names);
  }

  nlohmann::json report = {
      {"scheme", std::string(scheme.name())},
      {"recipe", recipe.to_json()},
      {"digest_normalization", "CRLF/CR->LF, trailing whitespace stripped per line; murmur3 x64 128"},
      {"validation", {{"sources", sources}, {"stages", val_stages}}},
      {"train", {{"source", {{"provenance", train_source.provenance()}, {"total", train_source.size()}}},
                 {"stages", train_stages},
                 {"validation_overlap_removed", overlap}}},
  };
  return SplitBundle{std::move(train), std::move(val), recipe, std::move(report)};
}

}  // namespace mcdok
