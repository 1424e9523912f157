// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "mcdok/cli.hpp"
#include "mcdok/io.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mcdok;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_command(args, out, err);
  return {status, out.str(), err.str()};
}

void write_fixture(const fs::path& dir, std::size_t n_train, std::size_t n_val, std::size_t n_test) {
  testing::SyntheticSpec spec;
  spec.count = n_train;
  spec.seed = 101;
  spec.id_prefix = "tr";
  testing::write_jsonl(dir / "train_src.jsonl", testing::synthetic_binary(spec));
  spec.count = n_val;
  spec.seed = 102;
  spec.id_prefix = "va";
  testing::write_jsonl(dir / "val_src.jsonl", testing::synthetic_binary(spec));
  spec.count = n_test;
  spec.seed = 103;
  spec.id_prefix = "te";
  testing::write_jsonl(dir / "test.jsonl", testing::synthetic_binary(spec));
}

}  // namespace

TEST_CASE("baseline prints the random-baseline macro F1") {
  const auto dir = testing::temp_dir("cli_baseline");
  const auto manifest = (dir / "m.jsonl").string();
  CHECK(run({"baseline", "--classes", "11", "--manifest", manifest}).out == "0.09091\n");
  CHECK(run({"baseline", "--classes", "2", "--manifest", manifest}).out == "0.50000\n");
  CHECK(run({"baseline", "--classes", "4", "--manifest", manifest}).out == "0.25000\n");
  CHECK(run({"baseline", "--classes", "1", "--manifest", manifest}).status == 1);
}

TEST_CASE("usage errors exit 1, missing files exit 2") {
  const auto unknown = run({"frobnicate"});
  CHECK(unknown.status == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({}).status == 1);
  CHECK(run({"curate", "--train", "x.jsonl"}).status == 1);
  const auto dir = testing::temp_dir("cli_errors");
  CHECK(run({"curate", "--train", (dir / "missing.jsonl").string(), "--val", "v", "--out-dir", dir.string()}).status == 2);
  CHECK(run({"evaluate", "--gold", "g", "--pred", "p", "--subtask", "Q"}).status == 1);
}

TEST_CASE("curate -> train -> predict -> evaluate smoke run") {
  const auto dir = testing::temp_dir("cli_pipeline");
  write_fixture(dir, 400, 120, 150);
  const std::string bundle = (dir / "bundle").string();
  const std::vector<std::string> fast{"--set", "featurizer.hash_dim=65536"};

  auto r = run({"curate", "--subtask", "A", "--train", (dir / "train_src.jsonl").string(), "--val",
                (dir / "val_src.jsonl").string(), "--seed", "5", "--out-dir", bundle});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  for (const char* f : {"train.jsonl", "val.jsonl", "curation_report.json", "digests.txt", "manifest.jsonl"})
    CHECK(fs::exists(fs::path(bundle) / f));

  std::vector<std::string> train_args{"train", "--bundle", bundle, "--subtask", "A", "--profile", "desk",
                                      "--seed", "3", "--out", (dir / "model" / "m.bin").string()};
  train_args.insert(train_args.end(), fast.begin(), fast.end());
  r = run(train_args);
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(fs::exists(dir / "model" / "training_log.jsonl"));
  const auto log = read_file(dir / "model" / "training_log.jsonl");
  CHECK(log.find("\"val_score\"") != std::string::npos);

  r = run({"predict", "--model", (dir / "model" / "m.bin").string(), "--in", (dir / "test.jsonl").string(),
           "--theta", "1.0", "--out", (dir / "pred.csv").string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(read_file(dir / "pred.csv").rfind("id,p_human,p_machine,label\n", 0) == 0);

  r = run({"predict", "--model", (dir / "model" / "m.bin").string(), "--in", (dir / "test.jsonl").string(), "--out",
           (dir / "pred_argmax.csv").string()});
  REQUIRE(r.status == 0);

  r = run({"evaluate", "--gold", (dir / "test.jsonl").string(), "--pred", (dir / "pred_argmax.csv").string(), "--by",
           "language", "--by", "family", "--filter-digests", (fs::path(bundle) / "digests.txt").string(), "--out",
           (dir / "eval" / "report.json").string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  for (const char* f : {"report.json", "confusion_matrix.csv", "bar_chart_language.svg", "bar_chart_family.svg"})
    CHECK(fs::exists(dir / "eval" / f));
  const auto report = nlohmann::json::parse(read_file(dir / "eval" / "report.json"));
  CHECK(report["macro_f1"].get<double>() >= 0.9);
  CHECK(report["groups"]["language"].size() == 3);
  CHECK(report.contains("leakage"));

  r = run({"compare", "--gold", (dir / "test.jsonl").string(), "--pred",
           "th1=" + (dir / "pred.csv").string(), "--pred", "argmax=" + (dir / "pred_argmax.csv").string(), "--manifest", (dir / "m.jsonl").string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(r.out.rfind("rank,system,macro_f1,weighted_f1\n", 0) == 0);

  // hard-label systems cannot take a threshold
  write_file_atomic(dir / "hard.csv", "id,label\n");
  r = run({"compare", "--gold", (dir / "test.jsonl").string(), "--pred", (dir / "hard.csv").string(), "--theta", "0.5",
           "--manifest", (dir / "m.jsonl").string()});
  CHECK(r.status == 1);
}

TEST_CASE("manifest records enough to rerun curate bit-identically") {
  const auto dir = testing::temp_dir("cli_manifest");
  write_fixture(dir, 300, 80, 0);
  const std::string out1 = (dir / "b1").string();
  auto r = run({"curate", "--subtask", "A", "--train", (dir / "train_src.jsonl").string(), "--val",
                (dir / "val_src.jsonl").string(), "--seed", "17", "--out-dir", out1});
  REQUIRE(r.status == 0);
  const auto manifest = nlohmann::json::parse(read_file(fs::path(out1) / "manifest.jsonl"));
  CHECK(manifest["seeds"]["curation"] == 17);
  CHECK(manifest["inputs"].size() == 2);
  for (const auto& in : manifest["inputs"]) CHECK(in["digest"] == file_digest(in["path"].get<std::string>()));

  auto argv = manifest["argv"].get<std::vector<std::string>>();
  const std::string out2 = (dir / "b2").string();
  for (auto& a : argv)
    if (a == out1) a = out2;
  REQUIRE(run(argv).status == 0);
  for (const char* f : {"train.jsonl", "val.jsonl", "curation_report.json", "digests.txt"})
    CHECK(read_file(fs::path(out1) / f) == read_file(fs::path(out2) / f));
}

TEST_CASE("CLI flag beats config file beats default") {
  const auto dir = testing::temp_dir("cli_precedence");
  write_fixture(dir, 200, 60, 0);
  const std::string bundle = (dir / "bundle").string();
  REQUIRE(run({"curate", "--train", (dir / "train_src.jsonl").string(), "--val", (dir / "val_src.jsonl").string(),
               "--out-dir", bundle})
              .status == 0);
  write_file_atomic(dir / "exp.toml", "[featurizer]\nhash_dim = 65536\n[training]\nprofile = desk\neval_interval = 40\n");

  auto config_of = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"train", "--bundle", bundle, "--out", (dir / name / "m.bin").string(), "--epochs", "1"};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    REQUIRE_MESSAGE(r.status == 0, r.err);
    return nlohmann::json::parse(read_file(dir / name / "manifest.jsonl"))["config"];
  };

  const auto file_only = config_of("file", {"--config", (dir / "exp.toml").string()});
  CHECK(file_only["featurizer"]["hash_dim"] == 65536);
  CHECK(file_only["training"]["eval_interval"] == 40);
  CHECK(file_only["training"]["lr_max"] == 0.05);

  const auto flags = config_of("flags", {"--config", (dir / "exp.toml").string(), "--eval-interval", "7", "--set",
                                         "featurizer.hash_dim=16384", "--profile", "paper"});
  CHECK(flags["featurizer"]["hash_dim"] == 16384);
  CHECK(flags["training"]["eval_interval"] == 7);
  CHECK(flags["training"]["lr_max"] == 2e-5);

  ::setenv("MCDOK_CONFIG", (dir / "exp.toml").string().c_str(), 1);
  const auto env = config_of("env", {});
  ::unsetenv("MCDOK_CONFIG");
  CHECK(env["training"]["eval_interval"] == 40);

  const auto defaults = config_of("defaults", {"--set", "featurizer.hash_dim=65536"});
  CHECK(defaults["training"]["eval_interval"] == 100);
  CHECK(defaults["training"]["lr_max"] == 2e-5);
  CHECK(defaults["training"]["warmup_ratio"] == 0.03);
}
