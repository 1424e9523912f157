// SPDX-License-Identifier: Apache-2.0
#include "mcdok/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "CLI11.hpp"
#include "mcdok/config.hpp"
#include "mcdok/corpus.hpp"
#include "mcdok/curation.hpp"
#include "mcdok/error.hpp"
#include "mcdok/evaluation.hpp"
#include "mcdok/io.hpp"
#include "mcdok/model.hpp"
#include "mcdok/predictions.hpp"
#include "mcdok/training.hpp"

namespace fs = std::filesystem;

namespace mcdok {
namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string manifest_path;
};

char subtask_char(const std::string& s) {
  if (s.size() != 1) throw ValidationError("unknown subtask '" + s + "' (expected A, B or C)");
  LabelScheme::for_subtask(s[0]);
  return static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
}

ConfigValues load_config_values(const CommonOptions& common) {
  ConfigValues values;
  std::string path = common.config_path;
  if (path.empty())
    if (const char* env = std::getenv("MCDOK_CONFIG"); env && *env) path = env;
  if (!path.empty()) values = ConfigValues::load(path);
  for (const auto& s : common.sets) values.set(s);
  return values;
}

/// Appends one JSON line describing the run next to its outputs.
class Manifest {
 public:
  Manifest(std::string command, std::span<const std::string> args) : command_(std::move(command)) {
    record_ = {{"tool", "mcdok"}, {"version", kVersion}, {"command", command_},
               {"argv", std::vector<std::string>(args.begin(), args.end())},
               {"inputs", nlohmann::json::array()}, {"outputs", nlohmann::json::array()},
               {"seeds", nlohmann::json::object()}};
  }
  void input(const fs::path& p) { record_["inputs"].push_back({{"path", p.string()}, {"digest", file_digest(p)}}); }
  void output(const fs::path& p) { record_["outputs"].push_back({{"path", p.string()}, {"digest", file_digest(p)}}); }
  void seed(const std::string& name, std::uint64_t v) { record_["seeds"][name] = v; }
  void set(const std::string& key, nlohmann::json v) { record_[key] = std::move(v); }
  void write(const std::string& override_path, const fs::path& default_dir) const {
    const fs::path path = override_path.empty() ? default_dir / "manifest.jsonl" : fs::path(override_path);
    append_line(path, record_.dump());
  }

 private:
  std::string command_;
  nlohmann::json record_;
};

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

std::string pretty(const nlohmann::json& j) { return j.dump(2) + "\n"; }

LabelScheme scheme_for_classes(const std::vector<std::string>& classes) {
  for (auto kind : {LabelScheme::Kind::binary, LabelScheme::Kind::family11, LabelScheme::Kind::hybrid4}) {
    auto s = LabelScheme::from_kind(kind);
    if (s.classes() == classes) return s;
  }
  throw ValidationError("model classes do not match any label scheme");
}

std::unordered_set<Digest, DigestHash> load_digest_reference(const fs::path& path, const LabelScheme& scheme) {
  std::unordered_set<Digest, DigestHash> ref;
  if (path.extension() == ".jsonl") {
    LoadOptions opts;
    opts.require_labels = false;
    for (const auto& s : load_corpus(path, scheme, opts)) ref.insert(s.digest);
    return ref;
  }
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    ref.insert(Digest::from_hex(line));
  }
  return ref;
}

// ---------------------------------------------------------------- curate

struct CurateArgs {
  std::string subtask = "A";
  std::string train;
  std::vector<std::string> val;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int do_curate(const CurateArgs& a, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const char st = subtask_char(a.subtask);
  const RunConfig rc = RunConfig::resolve(load_config_values(common), st);
  const LabelScheme scheme = LabelScheme::for_subtask(st);
  LoadOptions opts;
  opts.family_map = rc.families;

  CurationRecipe recipe = preset_recipe(st);
  recipe.seed = a.seed.value_or(rc.curation_seed);

  Manifest manifest("curate", argv);
  const Corpus train_source = load_corpus(a.train, scheme, opts);
  manifest.input(a.train);
  std::vector<Corpus> val_sources;
  for (const auto& v : a.val) {
    val_sources.push_back(load_corpus(v, scheme, opts));
    manifest.input(v);
  }
  const SplitBundle bundle = apply_recipe(train_source, val_sources, recipe);

  const fs::path dir(a.out_dir);
  const auto train_path = dir / "train.jsonl";
  const auto val_path = dir / "val.jsonl";
  const auto report_path = dir / "curation_report.json";
  const auto digests_path = dir / "digests.txt";
  write_file_atomic(train_path, serialize_corpus(bundle.train));
  write_file_atomic(val_path, serialize_corpus(bundle.validation));
  write_file_atomic(report_path, pretty(bundle.report));
  std::set<Digest> digests;
  for (const auto& s : bundle.train) digests.insert(s.digest);
  for (const auto& s : bundle.validation) digests.insert(s.digest);
  std::string digest_text;
  for (const auto& d : digests) digest_text += d.hex() + "\n";
  write_file_atomic(digests_path, digest_text);

  for (const auto& p : {train_path, val_path, report_path, digests_path}) manifest.output(p);
  manifest.seed("curation", recipe.seed);
  manifest.set("subtask", std::string(1, st));
  manifest.set("recipe", recipe.to_json());
  manifest.write(common.manifest_path, dir);

  out << "curated subtask " << st << ": train " << bundle.train.size() << ", validation " << bundle.validation.size()
      << " -> " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string bundle;
  std::string subtask = "A";
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> eval_interval;
  std::optional<double> lr;
  std::string out;
};

int do_train(const TrainArgs& a, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const char st = subtask_char(a.subtask);
  RunConfig rc = RunConfig::resolve(load_config_values(common), st, a.profile);
  if (a.seed) rc.training.seed = *a.seed;
  if (a.epochs) rc.training.epochs = *a.epochs;
  if (a.eval_interval) rc.training.eval_interval = *a.eval_interval;
  if (a.lr) rc.training.lr_max = *a.lr;
  rc.training.validate();

  const LabelScheme scheme = LabelScheme::for_subtask(st);
  LoadOptions opts;
  opts.family_map = rc.families;
  const fs::path bundle_dir(a.bundle);
  const auto train_path = bundle_dir / "train.jsonl";
  const auto val_path = bundle_dir / "val.jsonl";
  const Corpus train_set = load_corpus(train_path, scheme, opts);
  const Corpus val_set = load_corpus(val_path, scheme, opts);

  const TrainResult result = train(train_set, val_set, rc.training, rc.featurizer);

  const fs::path model_path(a.out);
  save_model(result.best.snapshot, model_path);
  const fs::path log_path = dir_of(model_path) / "training_log.jsonl";
  std::string log;
  for (const auto& e : result.evals)
    log += nlohmann::json{{"step", e.step}, {"lr", e.lr}, {"loss", e.train_loss}, {"val_score", e.val_score},
                          {"metric", std::string(selection_metric_name(rc.training.selection_metric))},
                          {"best", e.step == result.best.step}}
               .dump() +
           "\n";
  write_file_atomic(log_path, log);

  Manifest manifest("train", argv);
  manifest.input(train_path);
  manifest.input(val_path);
  manifest.output(model_path);
  manifest.output(log_path);
  manifest.seed("training", rc.training.seed);
  manifest.set("subtask", std::string(1, st));
  manifest.set("config", rc.to_json());
  manifest.set("class_weights", result.weights.values);
  manifest.set("total_steps", result.total_steps);
  manifest.set("best_step", result.best.step);
  manifest.write(common.manifest_path, dir_of(model_path));

  out << "trained " << result.total_steps << " steps; best " << selection_metric_name(rc.training.selection_metric)
      << " " << format_double(result.best.score) << " at step " << result.best.step << " -> " << model_path.string()
      << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  std::string in;
  std::optional<double> theta;
  std::optional<double> epsilon;
  std::string out;
};

int do_predict(const PredictArgs& a, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const ModelState model = load_model(a.model);
  const LabelScheme scheme = scheme_for_classes(model.classes);
  const char st = scheme.kind() == LabelScheme::Kind::binary ? 'A' : scheme.kind() == LabelScheme::Kind::family11 ? 'B' : 'C';
  RunConfig rc = RunConfig::resolve(load_config_values(common), st);
  if (a.theta) rc.theta = *a.theta;
  if (a.epsilon) rc.epsilon = *a.epsilon;
  const auto policy = rc.decision_policy().value_or(DecisionPolicy::argmax());
  policy.validate(model.classes);

  LoadOptions opts;
  opts.require_labels = false;
  opts.family_map = rc.families;
  const Corpus input = load_corpus(a.in, scheme, opts);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> probs;
  std::vector<std::string> labels;
  for (const auto& s : input) {
    ids.push_back(s.id);
    probs.push_back(predict_proba(model, s.code));
    labels.push_back(decide(probs.back(), model.classes, policy));
  }
  const std::string csv = predictions_csv(ids, probs, model.classes, labels);

  Manifest manifest("predict", argv);
  manifest.input(a.model);
  manifest.input(a.in);
  manifest.set("decision", rc.to_json()["decision"]);
  if (a.out.empty()) {
    out << csv;
    manifest.write(common.manifest_path, ".");
  } else {
    write_file_atomic(a.out, csv);
    manifest.output(a.out);
    manifest.write(common.manifest_path, dir_of(a.out));
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gold;
  std::string pred;
  std::string subtask = "A";
  std::vector<std::string> by;
  std::vector<std::string> filter;
  std::string out = "report.json";
  bool full_scheme = false;
  bool no_chart = false;
  std::optional<double> theta;
};

int do_evaluate(const EvaluateArgs& a, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const char st = subtask_char(a.subtask);
  RunConfig rc = RunConfig::resolve(load_config_values(common), st);
  if (a.theta) rc.theta = *a.theta;
  const LabelScheme scheme = LabelScheme::for_subtask(st);
  const ClassSetPolicy class_set = a.full_scheme ? ClassSetPolicy::full_scheme : ClassSetPolicy::present;
  std::vector<Dimension> dims;
  for (const auto& b : a.by) {
    const auto d = parse_dimension(b);
    if (d == Dimension::generator) throw ValidationError("--by accepts language or family");
    dims.push_back(d);
  }

  Manifest manifest("evaluate", argv);
  LoadOptions opts;
  opts.family_map = rc.families;
  Corpus gold = load_corpus(a.gold, scheme, opts);
  manifest.input(a.gold);

  std::optional<std::uint64_t> removed;
  if (!a.filter.empty()) {
    std::unordered_set<Digest, DigestHash> reference;
    for (const auto& f : a.filter) {
      auto part = load_digest_reference(f, scheme);
      reference.insert(part.begin(), part.end());
      manifest.input(f);
    }
    auto filtered = leakage_filter(gold, reference);
    removed = filtered.removed;
    gold = std::move(filtered.corpus);
  }
  if (gold.empty()) throw ValidationError("no gold samples left to evaluate");

  const auto preds = import_predictions(a.pred, scheme);
  manifest.input(a.pred);
  const auto joined = join_predictions(gold, preds, rc.decision_policy());

  EvaluationReport report = evaluate(joined, scheme, class_set);
  report.leakage_removed = removed;
  for (auto d : dims) report.groups[std::string(dimension_name(d))] = breakdown(joined, d, scheme, class_set);

  const fs::path report_path(a.out);
  const fs::path dir = dir_of(report_path);
  write_file_atomic(report_path, pretty(report.to_json()));
  manifest.output(report_path);
  const auto cm_path = dir / "confusion_matrix.csv";
  write_file_atomic(cm_path, confusion_csv(report.matrix));
  manifest.output(cm_path);
  if (!a.no_chart) {
    for (const auto& [dim, groups] : report.groups) {
      const auto svg_path = dir / ("bar_chart_" + dim + ".svg");
      write_file_atomic(svg_path, breakdown_svg("Per-" + dim + " performance", groups));
      manifest.output(svg_path);
    }
  }
  manifest.set("decision", rc.to_json()["decision"]);
  manifest.write(common.manifest_path, dir);

  out << "macro F1 " << format_double(report.macro_f1) << ", weighted F1 " << format_double(report.weighted_f1)
      << " over " << report.matrix.total() << " samples";
  if (removed) out << " (" << *removed << " removed by leakage filter)";
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string gold;
  std::vector<std::string> preds;
  std::string subtask = "A";
  std::optional<double> theta;
  bool full_scheme = false;
  std::string out;
};

int do_compare(const CompareArgs& a, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const char st = subtask_char(a.subtask);
  RunConfig rc = RunConfig::resolve(load_config_values(common), st);
  if (a.theta) rc.theta = *a.theta;
  const LabelScheme scheme = LabelScheme::for_subtask(st);
  LoadOptions opts;
  opts.family_map = rc.families;

  Manifest manifest("compare", argv);
  const Corpus gold = load_corpus(a.gold, scheme, opts);
  manifest.input(a.gold);
  std::vector<ExternalPredictionSet> sets;
  for (const auto& spec : a.preds) {
    std::string name;
    std::string path = spec;
    if (auto eq = spec.find('='); eq != std::string::npos) {
      name = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    sets.push_back(import_predictions(path, scheme, name));
    manifest.input(path);
  }
  const auto ranking = compare(sets, gold, rc.decision_policy(),
                               a.full_scheme ? ClassSetPolicy::full_scheme : ClassSetPolicy::present);
  const std::string csv = ranking_csv(ranking);
  if (a.out.empty()) {
    out << csv;
    manifest.write(common.manifest_path, ".");
  } else {
    write_file_atomic(a.out, csv);
    manifest.output(a.out);
    manifest.write(common.manifest_path, dir_of(a.out));
  }
  return 0;
}

// ---------------------------------------------------------------- baseline

int do_baseline(std::size_t classes, const CommonOptions& common, std::span<const std::string> argv, std::ostream& out) {
  const double value = random_baseline(classes);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", value);
  out << buf << "\n";
  Manifest manifest("baseline", argv);
  manifest.set("classes", classes);
  manifest.set("value", value);
  manifest.write(common.manifest_path, ".");
  return 0;
}

void add_common(CLI::App* app, CommonOptions& common) {
  app->add_option("--config", common.config_path, "Config file (default: $MCDOK_CONFIG)");
  app->add_option("--set", common.sets, "Override a config value, section.key=value")->take_all();
  app->add_option("--manifest", common.manifest_path, "Manifest file to append to");
}

}  // namespace

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mcdok: machine-generated code detection pipeline", "mcdok"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;

  CurateArgs curate;
  auto* c = app.add_subcommand("curate", "Deduplicate and subsample corpora into train/validation splits");
  c->add_option("--subtask", curate.subtask, "A, B or C")->capture_default_str();
  c->add_option("--train", curate.train, "Training source JSONL")->required();
  c->add_option("--val", curate.val, "Validation source JSONL (repeatable, concatenated in order)")->required();
  c->add_option("--seed", curate.seed, "Sampling seed");
  c->add_option("--out-dir", curate.out_dir, "Output directory")->required();
  add_common(c, common);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the classifier on a curated bundle");
  t->add_option("--bundle", tr.bundle, "Directory with train.jsonl and val.jsonl")->required();
  t->add_option("--subtask", tr.subtask, "A, B or C")->capture_default_str();
  t->add_option("--profile", tr.profile, "paper or desk");
  t->add_option("--seed", tr.seed, "Shuffle seed");
  t->add_option("--epochs", tr.epochs, "Number of epochs");
  t->add_option("--eval-interval", tr.eval_interval, "Steps between validations");
  t->add_option("--lr", tr.lr, "Peak learning rate");
  t->add_option("--out", tr.out, "Model file to write")->required();
  add_common(t, common);

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Score a JSONL corpus and write per-class probabilities");
  p->add_option("--model", pr.model, "Model file")->required();
  p->add_option("--in", pr.in, "Input JSONL")->required();
  p->add_option("--theta", pr.theta, "Binary decision threshold on the positive class");
  p->add_option("--epsilon", pr.epsilon, "Threshold slack");
  p->add_option("--out", pr.out, "Output CSV (default: stdout)");
  add_common(p, common);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions against gold labels");
  e->add_option("--gold", ev.gold, "Gold JSONL")->required();
  e->add_option("--pred", ev.pred, "Prediction CSV")->required();
  e->add_option("--subtask", ev.subtask, "A, B or C")->capture_default_str();
  e->add_option("--by", ev.by, "Breakdown dimension: language or family (repeatable)");
  e->add_option("--filter-digests", ev.filter, "Digest list or JSONL corpus to remove from gold (repeatable)");
  e->add_option("--out", ev.out, "Report JSON path")->capture_default_str();
  e->add_flag("--full-scheme", ev.full_scheme, "Average macro F1 over every scheme class");
  e->add_flag("--no-chart", ev.no_chart, "Skip SVG charts");
  e->add_option("--theta", ev.theta, "Re-decide from probabilities with this threshold");
  add_common(e, common);

  CompareArgs cmp;
  auto* m = app.add_subcommand("compare", "Rank several systems' predictions by macro F1");
  m->add_option("--gold", cmp.gold, "Gold JSONL")->required();
  m->add_option("--pred", cmp.preds, "Prediction CSV, optionally name=path (repeatable)")->required();
  m->add_option("--subtask", cmp.subtask, "A, B or C")->capture_default_str();
  m->add_option("--theta", cmp.theta, "Binary threshold applied to probability files");
  m->add_flag("--full-scheme", cmp.full_scheme, "Average macro F1 over every scheme class");
  m->add_option("--out", cmp.out, "Ranking CSV (default: stdout)");
  add_common(m, common);

  std::size_t baseline_classes = 2;
  auto* b = app.add_subcommand("baseline", "Print the random-baseline macro F1 for K classes");
  b->add_option("--classes", baseline_classes, "Number of classes")->required();
  add_common(b, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = ex.get_exit_code();
    if (code == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << ex.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*c) return do_curate(curate, common, args, out);
    if (*t) return do_train(tr, common, args, out);
    if (*p) return do_predict(pr, common, args, out);
    if (*e) return do_evaluate(ev, common, args, out);
    if (*m) return do_compare(cmp, common, args, out);
    if (*b) return do_baseline(baseline_classes, common, args, out);
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

int run_command(const std::vector<std::string>& args) { return run_command(args, std::cout, std::cerr); }

}  // namespace mcdok
