// SPDX-License-Identifier: Apache-2.0
#include "mcdok/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mcdok/error.hpp"
#include "mcdok/io.hpp"

namespace mcdok {

ModelState ModelState::zeros(const LabelScheme& scheme, const FeaturizerConfig& featurizer) {
  featurizer.validate();
  ModelState m;
  m.classes = scheme.classes();
  m.featurizer = featurizer;
  m.bias.assign(scheme.size(), 0.0);
  m.weights.assign(scheme.size() * featurizer.hash_dim, 0.0);
  return m;
}

void ModelState::check() const {
  if (classes.size() < 2) throw ValidationError("model needs at least two classes");
  if (bias.size() != classes.size() || weights.size() != classes.size() * dim())
    throw ValidationError("model parameter shapes do not match class count and hash_dim");
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(bias.begin(), bias.end(), finite) || !std::all_of(weights.begin(), weights.end(), finite))
    throw ValidationError("model contains non-finite parameters");
}

std::vector<double> logits(const ModelState& state, const FeatureVector& v) {
  if (v.dim != state.dim())
    throw ValidationError("feature dimension " + std::to_string(v.dim) + " does not match model dimension " +
                          std::to_string(state.dim()));
  std::vector<double> z(state.bias);
  const std::size_t dim = state.dim();
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double* row = state.weights.data() + k * dim;
    double acc = z[k];
    for (const auto& [i, x] : v.entries) acc += row[i] * x;
    z[k] = acc;
  }
  return z;
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw ValidationError("softmax of an empty vector");
  for (double x : z)
    if (!std::isfinite(x)) throw ValidationError("softmax: non-finite logit");
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - m);
    denom += p[k];
  }
  for (double& x : p) x /= denom;
  return p;
}

std::vector<double> predict_proba(const ModelState& state, std::string_view code) {
  return softmax(logits(state, featurize(code, state.featurizer)));
}

void DecisionPolicy::validate(std::span<const std::string> classes) const {
  if (kind == Kind::argmax) return;
  if (classes.size() != 2) throw ValidationError("binary threshold policy requires a 2-class scheme");
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon < 0.01)) throw ValidationError("epsilon must lie in [0, 0.01)");
  if (std::find(classes.begin(), classes.end(), positive_class) == classes.end())
    throw ValidationError("positive class '" + positive_class + "' is not a model class");
}

std::size_t decide_index(std::span<const double> p, std::span<const std::string> classes,
                         const DecisionPolicy& policy) {
  if (p.size() != classes.size()) throw ValidationError("probability vector length does not match class count");
  policy.validate(classes);
  if (policy.kind == DecisionPolicy::Kind::argmax) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k)
      if (p[k] > p[best]) best = k;
    return best;
  }
  const auto pos = static_cast<std::size_t>(
      std::find(classes.begin(), classes.end(), policy.positive_class) - classes.begin());
  return p[pos] >= policy.theta - policy.epsilon ? pos : 1 - pos;
}

const std::string& decide(std::span<const double> p, std::span<const std::string> classes,
                          const DecisionPolicy& policy) {
  return classes[decide_index(p, classes, policy)];
}

namespace {

constexpr char kMagic[] = "MCDOK1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

}  // namespace

void save_model(const ModelState& state, const std::filesystem::path& path) {
  state.check();
  const nlohmann::json header = {{"format", "MCDOK1"},
                                 {"classes", state.classes},
                                 {"featurizer", state.featurizer.to_json()},
                                 {"layout", "f64le bias[K] then weights[K][D] class-major"}};
  const std::string head = header.dump();
  std::string blob;
  blob.reserve(kMagicLen + 8 + head.size() + 8 * (state.bias.size() + state.weights.size()));
  blob.append(kMagic, kMagicLen);
  put_u64(blob, head.size());
  blob += head;
  for (double x : state.bias) put_u64(blob, std::bit_cast<std::uint64_t>(x));
  for (double x : state.weights) put_u64(blob, std::bit_cast<std::uint64_t>(x));
  write_file_atomic(path, blob);
}

ModelState load_model(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < kMagicLen + 8 || blob.compare(0, kMagicLen, kMagic) != 0)
    throw ValidationError(path.string() + " is not an MCDOK1 model file");
  const std::uint64_t head_len = get_u64(blob.data() + kMagicLen);
  const std::size_t body = kMagicLen + 8 + head_len;
  if (head_len > blob.size() || body > blob.size()) throw ValidationError(path.string() + ": truncated model header");

  ModelState m;
  try {
    const auto header = nlohmann::json::parse(blob.substr(kMagicLen + 8, head_len));
    m.classes = header.at("classes").get<std::vector<std::string>>();
    m.featurizer = FeaturizerConfig::from_json(header.at("featurizer"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": bad model header (" + e.what() + ")");
  }
  const std::size_t k = m.classes.size();
  const std::size_t count = k + k * m.featurizer.hash_dim;
  if (blob.size() != body + 8 * count) throw ValidationError(path.string() + ": model payload has the wrong size");
  const char* p = blob.data() + body;
  m.bias.resize(k);
  for (auto& x : m.bias) {
    x = std::bit_cast<double>(get_u64(p));
    p += 8;
  }
  m.weights.resize(k * m.featurizer.hash_dim);
  for (auto& x : m.weights) {
    x = std::bit_cast<double>(get_u64(p));
    p += 8;
  }
  m.check();
  return m;
}

}  // namespace mcdok
