// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "mcdok/error.hpp"
#include "mcdok/evaluation.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace mcdok;

namespace {

const LabelScheme kBinary = LabelScheme::binary();

ConfusionMatrix worked_example() {
  const std::vector<std::string> golds{"human", "human", "machine"};
  const std::vector<std::string> preds{"human", "machine", "machine"};
  return confusion(golds, preds, kBinary);
}

std::vector<EvaluatedSample> to_samples(const std::vector<int>& g, const std::vector<int>& p, const LabelScheme& s,
                                        const std::string& lang = "Python") {
  std::vector<EvaluatedSample> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    out.push_back({s.classes()[std::size_t(g[i])], s.classes()[std::size_t(p[i])], lang, "fam"});
  return out;
}

}  // namespace

TEST_CASE("confusion counts") {
  const auto m = worked_example();
  CHECK(m.counts[0] == std::vector<std::uint64_t>{1, 1});
  CHECK(m.counts[1] == std::vector<std::uint64_t>{0, 1});
  CHECK(m.total() == 3);

  const auto h4 = LabelScheme::hybrid4();
  const std::vector<std::string> same{"human", "hybrid", "adversarial", "hybrid"};
  const auto d = confusion(same, same, h4);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t p = 0; p < 4; ++p)
      if (g != p) CHECK(d.counts[g][p] == 0);

  const std::vector<std::string> one{"human"};
  const std::vector<std::string> two{"human", "machine"};
  CHECK_THROWS_AS(confusion(one, two, kBinary), ValidationError);
  const std::vector<std::string> alien{"alien"};
  CHECK_THROWS_AS(confusion(alien, one, kBinary), ValidationError);
}

TEST_CASE("confusion matches a dictionary tally on 1000 random pairs") {
  const auto scheme = LabelScheme::family11();
  std::mt19937_64 rng(13);
  std::vector<std::string> golds, preds;
  for (int i = 0; i < 1000; ++i) {
    golds.push_back(scheme.classes()[std::uniform_int_distribution<std::size_t>(0, 10)(rng)]);
    preds.push_back(scheme.classes()[std::uniform_int_distribution<std::size_t>(0, 10)(rng)]);
  }
  const auto m = confusion(golds, preds, scheme);
  const auto oracle = testing::tally_pairs(golds, preds);
  for (std::size_t g = 0; g < 11; ++g)
    for (std::size_t p = 0; p < 11; ++p) {
      auto it = oracle.find({scheme.classes()[g], scheme.classes()[p]});
      CHECK(m.counts[g][p] == (it == oracle.end() ? 0 : it->second));
    }
}

TEST_CASE("precision, recall and F1 of the worked example") {
  const auto m = worked_example();
  const auto machine = prf(m, "machine");
  CHECK(machine.precision == 0.5);
  CHECK(machine.recall == 1.0);
  CHECK(std::abs(machine.f1 - 2.0 / 3.0) < 1e-15);
  const auto human = prf(m, "human");
  CHECK(human.precision == 1.0);
  CHECK(human.recall == 0.5);
  CHECK(std::abs(human.f1 - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(macro_f1(m) - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(weighted_f1(m) - 2.0 / 3.0) < 1e-15);
}

TEST_CASE("zero-division and degenerate cases") {
  const auto h4 = LabelScheme::hybrid4();
  const std::vector<std::string> g{"human", "machine"};
  const auto m = confusion(g, g, h4);
  const auto hybrid = prf(m, "hybrid");
  CHECK(hybrid.precision == 0.0);
  CHECK(hybrid.recall == 0.0);
  CHECK(hybrid.f1 == 0.0);
  CHECK(prf(m, "human").f1 == 1.0);
  CHECK(macro_f1(m) == 1.0);
  CHECK(macro_f1(m, ClassSetPolicy::full_scheme) == 0.5);
  CHECK(macro_f1(ConfusionMatrix(kBinary.classes()), ClassSetPolicy::full_scheme) == 0.0);
  CHECK_THROWS_AS(macro_f1(ConfusionMatrix(kBinary.classes())), ValidationError);
  CHECK_THROWS_AS(weighted_f1(ConfusionMatrix(kBinary.classes())), ValidationError);
  CHECK_THROWS_AS(prf(m, "robot"), ValidationError);
}

TEST_CASE("weighted F1 tracks the dominant class") {
  std::vector<int> golds(1000, 0), preds(1000, 0);
  for (int i = 0; i < 10; ++i) golds[std::size_t(i)] = 1;
  const auto report = evaluate(to_samples(golds, preds, kBinary), kBinary);
  CHECK(report.weighted_f1 > report.macro_f1 + 0.3);

  std::vector<int> bg{0, 0, 1, 1}, bp{0, 1, 1, 0};
  const auto balanced = evaluate(to_samples(bg, bp, kBinary), kBinary);
  CHECK(balanced.weighted_f1 == doctest::Approx(balanced.macro_f1).epsilon(1e-15));
}

TEST_CASE("metrics match the from-definitions oracle and are permutation invariant") {
  std::mt19937_64 rng(19);
  for (int k : {2, 4, 11}) {
    const auto scheme = k == 2 ? LabelScheme::binary() : k == 4 ? LabelScheme::hybrid4() : LabelScheme::family11();
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
      std::vector<int> g(n), p(n);
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::uniform_int_distribution<int>(0, k - 1)(rng);
        p[i] = std::uniform_int_distribution<int>(0, k - 1)(rng);
      }
      const auto r = evaluate(to_samples(g, p, scheme), scheme);
      REQUIRE(std::abs(r.macro_f1 - testing::oracle_macro_f1(g, p, k)) <= 1e-12);
      REQUIRE(std::abs(r.weighted_f1 - testing::oracle_weighted_f1(g, p, k)) <= 1e-12);
      const auto full = evaluate(to_samples(g, p, scheme), scheme, ClassSetPolicy::full_scheme);
      REQUIRE(std::abs(full.macro_f1 - testing::oracle_macro_f1(g, p, k, true)) <= 1e-12);
      for (const auto& c : r.per_class) {
        REQUIRE(c.scores.precision >= 0.0);
        REQUIRE(c.scores.precision <= 1.0);
        REQUIRE(c.scores.recall <= 1.0);
        REQUIRE(c.scores.f1 <= 1.0);
      }

      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<int> g2(n), p2(n);
      for (std::size_t i = 0; i < n; ++i) {
        g2[i] = g[perm[i]];
        p2[i] = p[perm[i]];
      }
      const auto r2 = evaluate(to_samples(g2, p2, scheme), scheme);
      REQUIRE(r2.macro_f1 == r.macro_f1);
      REQUIRE(r2.weighted_f1 == r.weighted_f1);
    }
  }
}

TEST_CASE("uniform-random predictor on balanced 11-class gold") {
  const auto scheme = LabelScheme::family11();
  std::mt19937_64 rng(2026);
  std::vector<int> g, p;
  for (int i = 0; i < 22000; ++i) {
    g.push_back(i % 11);
    p.push_back(std::uniform_int_distribution<int>(0, 10)(rng));
  }
  const auto r = evaluate(to_samples(g, p, scheme), scheme);
  CHECK(std::abs(r.macro_f1 - 0.09091) <= 0.02);
}

TEST_CASE("breakdown") {
  SUBCASE("single language equals the global report") {
    const std::vector<int> g{0, 1, 1, 0}, p{0, 1, 0, 0};
    const auto samples = to_samples(g, p, kBinary);
    const auto groups = breakdown(samples, Dimension::language, kBinary);
    REQUIRE(groups.size() == 1);
    CHECK(groups.at("Python").matrix == evaluate(samples, kBinary).matrix);
    CHECK(groups.at("Python").macro_f1 == evaluate(samples, kBinary).macro_f1);
  }
  SUBCASE("two languages match per-partition oracles and sum to the global matrix") {
    const std::vector<int> g1{0, 0, 1, 1, 1}, p1{0, 0, 1, 1, 1};
    const std::vector<int> g2{0, 1, 0, 1}, p2{1, 0, 1, 1};
    auto samples = to_samples(g1, p1, kBinary, "Go");
    auto other = to_samples(g2, p2, kBinary, "Rust");
    samples.insert(samples.end(), other.begin(), other.end());
    const auto groups = breakdown(samples, Dimension::language, kBinary);
    CHECK(groups.at("Go").macro_f1 == doctest::Approx(testing::oracle_macro_f1(g1, p1, 2)));
    CHECK(groups.at("Rust").macro_f1 == doctest::Approx(testing::oracle_macro_f1(g2, p2, 2)));
    ConfusionMatrix sum(kBinary.classes());
    for (const auto& [k, r] : groups) sum += r.matrix;
    CHECK(sum == evaluate(samples, kBinary).matrix);
  }
  SUBCASE("groups missing gold classes are depressed under the full-scheme policy") {
    const auto h4 = LabelScheme::hybrid4();
    const std::vector<int> g{0, 0, 1, 1}, p{0, 0, 1, 1};
    const auto samples = to_samples(g, p, h4, "PHP");
    const auto present = breakdown(samples, Dimension::language, h4).at("PHP");
    const auto full = breakdown(samples, Dimension::language, h4, ClassSetPolicy::full_scheme).at("PHP");
    CHECK(present.macro_f1 == 1.0);
    CHECK(full.macro_f1 == 0.5);
    CHECK(full.missing_gold_classes == std::vector<std::string>{"hybrid", "adversarial"});
  }
}

TEST_CASE("leakage_filter") {
  std::vector<CodeSample> samples;
  for (int i = 0; i < 1000; ++i)
    samples.push_back(testing::make_sample("t" + std::to_string(i), "x = " + std::to_string(i) + "\n", "human"));
  const Corpus test(kBinary, samples);

  CHECK(leakage_filter(test, {}).removed == 0);
  CHECK(leakage_filter(test, {}).corpus.size() == 1000);

  std::unordered_set<Digest, DigestHash> all;
  for (const auto& s : test) all.insert(s.digest);
  CHECK(leakage_filter(test, all).corpus.empty());

  std::mt19937_64 rng(137);
  std::vector<std::size_t> idx(1000);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::unordered_set<Digest, DigestHash> planted;
  std::set<std::string> planted_ids;
  for (std::size_t i = 0; i < 137; ++i) {
    planted.insert(content_digest(testing::to_crlf(samples[idx[i]].code)));
    planted_ids.insert(samples[idx[i]].id);
  }
  planted.insert(content_digest("never seen\n"));
  const auto result = leakage_filter(test, planted);
  CHECK(result.removed == 137);
  CHECK(result.corpus.size() == 863);
  for (const auto& s : result.corpus) CHECK_FALSE(planted_ids.count(s.id));
}

TEST_CASE("random_baseline") {
  CHECK(random_baseline(2) == 0.5);
  CHECK(std::abs(random_baseline(11) - 0.09091) < 5e-6);
  CHECK(random_baseline(4) == 0.25);
  CHECK_THROWS_AS(random_baseline(1), ValidationError);
}

TEST_CASE("report serialization and chart") {
  const std::vector<int> g{0, 1, 1, 0}, p{0, 1, 0, 0};
  auto samples = to_samples(g, p, kBinary, "C#");
  auto report = evaluate(samples, kBinary);
  report.groups["language"] = breakdown(samples, Dimension::language, kBinary);
  report.leakage_removed = 3;
  const auto j = report.to_json();
  CHECK(j["samples"] == 4);
  CHECK(j["leakage"]["removed"] == 3);
  CHECK(j["groups"]["language"].contains("C#"));
  CHECK(j["per_class"].size() == 2);

  const auto svg = breakdown_svg("Per-language <F1>", report.groups["language"]);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("&lt;F1&gt;") != std::string::npos);
  CHECK(svg.find("Macro F1") != std::string::npos);
  CHECK(svg.find("Weighted F1") != std::string::npos);

  const auto csv = confusion_csv(report.matrix);
  CHECK(csv.rfind("gold\\pred,human,machine\n", 0) == 0);
}
