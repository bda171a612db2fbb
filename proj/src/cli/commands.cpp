/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "sms/analysis.hpp"
#include "sms/attnviz.hpp"
#include "sms/cli.hpp"
#include "sms/verify.hpp"

namespace sms::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Options that feed RunConfig keys. Values given on the command line are
// collected as overrides after parsing.
struct ConfigArgs {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::pair<CLI::Option*, std::string>> direct;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "named preset (tacred-lstm, semeval-lstm, tacred-frozen, semeval-frozen)");
    app->add_option("--config", config, "key = value config file");
    app->add_option("--set", sets, "override: key=value (repeatable)");
    flag(app, "--data", "train", "training data");
    flag(app, "--dev", "dev", "dev data");
    flag(app, "--test", "test", "test data");
    flag(app, "--out", "out", "output directory");
    flag(app, "--format", "format", "data format: auto, tacred, semeval");
    flag(app, "--protocol", "protocol", "tacred-micro or semeval-macro");
    flag(app, "--seed", "seed", "random seed");
    flag(app, "--seeds", "seeds", "comma-separated seeds for multi-run commands");
    flag(app, "--epochs", "epochs", "training epochs");
    flag(app, "--lr", "lr", "learning rate");
    flag(app, "--batch-size", "batch_size", "batch size");
    flag(app, "--features", "features", "all, sentence, mention, segment or a '+' mix");
    flag(app, "--kernel-sizes", "kernel_sizes", "comma-separated kernel sizes");
    flag(app, "--word-vectors", "word_vectors", "pretrained word-vector file");
    flag(app, "--representations", "representations", "precomputed representation file");
  }

  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    auto* opt = app->add_option(name, values[key], help);
    direct.emplace_back(opt, key);
  }

  RunConfig resolve() const {
    KeyValues overrides;
    for (const auto& [opt, key] : direct) {
      if (opt->count() > 0) overrides.emplace_back(key, values.at(key));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return resolve_config(preset, config, overrides);
  }
};

data::VocabOptions vocab_options(const RunConfig& cfg) {
  data::VocabOptions vo;
  vo.min_freq = cfg.min_freq;
  if (cfg.train.protocol == eval::Protocol::kSemevalMacro) {
    vo.relation_labels.push_back("Other");
    for (const auto& name : eval::semeval_relation_names()) {
      vo.relation_labels.push_back(name + "(e1,e2)");
      vo.relation_labels.push_back(name + "(e2,e1)");
    }
  } else {
    vo.relation_labels.push_back(eval::kTacredNegative);
  }
  return vo;
}

eval::Experiment build_experiment(const RunConfig& cfg, bool need_test) {
  if (cfg.train_path.empty()) throw UsageError("training data is required (--data or train = ...)");
  if (cfg.dev_path.empty()) throw UsageError("dev data is required (--dev or dev = ...)");
  if (need_test && cfg.test_path.empty()) throw UsageError("test data is required (--test or test = ...)");
  eval::Experiment exp;
  exp.model = cfg.model;
  exp.train = cfg.train;
  exp.train_set = load_dataset(cfg.train_path, cfg.format);
  exp.dev_set = load_dataset(cfg.dev_path, cfg.format);
  if (!cfg.test_path.empty()) exp.test_set = load_dataset(cfg.test_path, cfg.format);
  exp.vocab = data::build_vocab(exp.train_set, vocab_options(cfg));
  exp.seeds = cfg.seeds;
  exp.threads = eval::worker_threads();
  if (!cfg.word_vectors.empty()) {
    exp.word_vectors = std::make_shared<data::WordVectors>(
        data::read_word_vectors(cfg.word_vectors, cfg.model.channels.word_dim, &exp.vocab.words));
  }
  if (!cfg.representations.empty()) {
    exp.representations =
        std::make_shared<enc::RepresentationFile>(enc::RepresentationFile::load(cfg.representations));
  }
  return exp;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  out << s;
}

int cmd_train(const ConfigArgs& args, std::ostream& out) {
  const RunConfig cfg = args.resolve();
  if (cfg.out_dir.empty()) throw UsageError("an output directory is required (--out)");
  auto exp = build_experiment(cfg, false);
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "config.toml", cfg.to_text());

  RelationModel<float> model(cfg.model, exp.vocab, cfg.train.seed);
  json info = json::object();
  if (exp.word_vectors) info["pretrained_coverage"] = model.load_pretrained(*exp.word_vectors);
  if (exp.representations) model.set_representations(exp.representations);
  const auto train_set = model.prepare(exp.train_set);
  const auto dev_set = model.prepare(exp.dev_set);

  train::TrainOptions opts;
  opts.out_dir = cfg.out_dir;
  opts.on_epoch = [&](const train::EpochMetrics& m) { out << m.to_json().dump() << "\n" << std::flush; };
  const auto result = train::train(model, train_set, dev_set, cfg.train, opts);
  info["best_epoch"] = result.best_epoch;
  info["best_dev_F1"] = result.best_f1;

  if (!exp.test_set.empty()) {
    const auto test_set = model.prepare(exp.test_set);
    const auto pred = train::predict_labels(model, test_set);
    const auto report = eval::score(cfg.train.protocol, train::gold_labels(model, test_set), pred);
    eval::write_labels((fs::path(cfg.out_dir) / "test_predictions.txt").string(), pred);
    write_text(fs::path(cfg.out_dir) / "test_report.json", report.to_json().dump(2) + "\n");
    write_text(fs::path(cfg.out_dir) / "test_report.txt", report.to_text());
    info["test"] = report.to_json();
  }
  write_text(fs::path(cfg.out_dir) / "summary.json", info.dump(2) + "\n");
  return kOk;
}

struct CheckpointArgs {
  std::string checkpoint, data, format = "auto", protocol, representations;
};

RelationModel<float> open_model(const CheckpointArgs& a) {
  if (a.checkpoint.empty()) throw UsageError("--checkpoint is required");
  auto model = RelationModel<float>::load(a.checkpoint);
  if (!a.representations.empty()) {
    model.set_representations(
        std::make_shared<enc::RepresentationFile>(enc::RepresentationFile::load(a.representations)));
  }
  return model;
}

eval::Protocol checkpoint_protocol(const CheckpointArgs& a) {
  if (!a.protocol.empty()) return eval::parse_protocol(a.protocol);
  const auto meta = json::parse(ad::read_checkpoint_metadata(a.checkpoint));
  if (meta.contains("train") && meta["train"].contains("protocol")) {
    return eval::parse_protocol(meta["train"]["protocol"].get<std::string>());
  }
  return eval::Protocol::kTacredMicro;
}

int cmd_eval(const CheckpointArgs& a, bool text, const std::string& predictions, std::ostream& out) {
  if (a.data.empty()) throw UsageError("--data is required");
  auto model = open_model(a);
  const auto set = model.prepare(load_dataset(a.data, a.format));
  if (set.empty()) throw UsageError("evaluation set is empty");
  const auto pred = train::predict_labels(model, set);
  const auto report = eval::score(checkpoint_protocol(a), train::gold_labels(model, set), pred);
  if (!predictions.empty()) eval::write_labels(predictions, pred);
  out << (text ? report.to_text() : report.to_json().dump(2) + "\n");
  return kOk;
}

int cmd_predict(const CheckpointArgs& a, const std::string& out_path, std::ostream& out) {
  if (a.data.empty()) throw UsageError("--data is required");
  auto model = open_model(a);
  const auto instances = load_dataset(a.data, a.format);
  std::vector<data::RelationInstance> unlabeled = instances;
  for (auto& inst : unlabeled) inst.relation.clear();
  const auto set = model.prepare(unlabeled);
  const auto pred = train::predict_labels(model, set);
  if (out_path.empty()) {
    for (const auto& p : pred) out << p << "\n";
  } else {
    eval::write_labels(out_path, pred);
  }
  return kOk;
}

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t n_train = 2000, n_dev = 200, n_test = 500;
  std::string out, spec;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.out.empty()) throw UsageError("--out is required");
  data::SynthSpec spec = data::SynthSpec::default_spec();
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw DataError("cannot open " + a.spec);
    try {
      spec = data::SynthSpec::from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw ParseError(a.spec + ": " + e.what());
    }
  }
  auto corpus = data::synth_generate(a.seed, a.n_train + a.n_dev, a.n_test, spec);
  std::vector<data::RelationInstance> dev(corpus.train.begin() + static_cast<std::ptrdiff_t>(a.n_train),
                                          corpus.train.end());
  std::vector<data::TriggerAnnotation> dev_trig(corpus.train_triggers.begin() + static_cast<std::ptrdiff_t>(a.n_train),
                                                corpus.train_triggers.end());
  corpus.train.resize(a.n_train);
  corpus.train_triggers.resize(a.n_train);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  data::write_tacred_json((dir / "train.json").string(), corpus.train);
  data::write_tacred_json((dir / "dev.json").string(), dev);
  data::write_tacred_json((dir / "test.json").string(), corpus.test);
  write_text(dir / "triggers.json", json{{"train", data::triggers_to_json(corpus.train_triggers)},
                                         {"dev", data::triggers_to_json(dev_trig)},
                                         {"test", data::triggers_to_json(corpus.test_triggers)}}
                                        .dump() + "\n");
  write_text(dir / "spec.json", spec.to_json().dump(2) + "\n");
  out << "wrote " << corpus.train.size() << " train, " << dev.size() << " dev, " << corpus.test.size()
      << " test instances to " << a.out << "\n";
  return kOk;
}

struct GradArgs {
  std::size_t d = 8, n = 7, classes = 4, seeds = 1;
  std::uint64_t seed = 1;
  double eps = 1e-4, tol = 1e-4;
  std::string features = "all";
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  json runs = json::array();
  bool ok = true;
  double worst = 0;
  for (std::size_t k = 0; k < std::max<std::size_t>(a.seeds, 1); ++k) {
    ModelCheckSpec spec{a.d, a.n, a.classes, a.seed + k, head::FeatureToggles::parse(a.features)};
    ad::GradCheckOptions opt;
    opt.eps = a.eps;
    opt.tol = a.tol;
    const auto rep = check_model_gradients(spec, opt);
    ok = ok && rep.passed();
    worst = std::max(worst, rep.max_rel_error);
    json fails = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(rep.failures.size(), 10); ++i) {
      const auto& f = rep.failures[i];
      fails.push_back({{"param", f.param}, {"index", f.index}, {"analytic", f.analytic},
                       {"numeric", f.numeric}, {"rel_error", f.rel_error}});
    }
    runs.push_back({{"seed", spec.seed}, {"checked", rep.checked}, {"max_rel_error", rep.max_rel_error},
                    {"passed", rep.passed()}, {"failures", fails}});
  }
  out << json{{"passed", ok}, {"max_rel_error", worst}, {"tol", a.tol}, {"eps", a.eps}, {"runs", runs}}.dump(2)
      << "\n";
  return ok ? kOk : kNumeric;
}

std::vector<head::FeatureToggles> parse_rows(const std::string& rows) {
  std::vector<head::FeatureToggles> out;
  std::stringstream ss(rows);
  std::string r;
  while (std::getline(ss, r, ',')) {
    if (!r.empty()) out.push_back(head::FeatureToggles::parse(r));
  }
  if (out.empty()) throw UsageError("--rows lists no feature sets");
  return out;
}

int cmd_ablate(const ConfigArgs& args, const std::string& rows, std::ostream& out) {
  const RunConfig cfg = args.resolve();
  auto exp = build_experiment(cfg, true);
  auto toggles = parse_rows(rows);
  for (auto& t : toggles) t.kernel_sizes = cfg.model.head.toggles.kernel_sizes;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.toml", cfg.to_text());
    exp.out_dir = cfg.out_dir;
  }
  const auto result = eval::ablation_run(exp, toggles);
  const auto text = eval::ablation_to_text(result);
  if (!cfg.out_dir.empty()) {
    write_text(fs::path(cfg.out_dir) / "ablation.json", eval::ablation_to_json(result).dump(2) + "\n");
    write_text(fs::path(cfg.out_dir) / "ablation.txt", text);
  }
  out << text;
  return kOk;
}

int cmd_sweep(const ConfigArgs& args, const std::string& max_n, std::ostream& out) {
  const RunConfig cfg = args.resolve();
  auto exp = build_experiment(cfg, true);
  std::vector<std::size_t> ns;
  std::stringstream ss(max_n);
  std::string s;
  while (std::getline(ss, s, ',')) {
    try {
      if (!s.empty()) ns.push_back(std::stoul(s));
    } catch (const std::exception&) {
      throw UsageError("--max-n expects integers, got '" + s + "'");
    }
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.toml", cfg.to_text());
    exp.out_dir = cfg.out_dir;
  }
  const auto rows = eval::ngram_sweep(exp, ns);
  const auto text = eval::sweep_to_text(rows);
  if (!cfg.out_dir.empty()) {
    write_text(fs::path(cfg.out_dir) / "sweep.json", eval::sweep_to_json(rows).dump(2) + "\n");
    write_text(fs::path(cfg.out_dir) / "sweep.txt", text);
  }
  out << text;
  return kOk;
}

struct VizArgs {
  std::string render = "terminal", out, id;
  double threshold = -1;
  bool no_color = false, correct_only = false;
  std::size_t limit = 1, top_k = 0;
};

int cmd_viz(const CheckpointArgs& a, const VizArgs& v, std::ostream& out) {
  if (a.data.empty()) throw UsageError("--data is required");
  if (v.render != "terminal" && v.render != "html") throw UsageError("--render must be terminal or html");
  auto model = open_model(a);
  const auto set = model.prepare(load_dataset(a.data, a.format));
  std::vector<viz::AttentionTrace> traces;
  for (const auto& ex : set) {
    if (!v.id.empty() && ex.id != v.id) continue;
    auto tr = viz::trace_prediction(model, ex);
    if (v.correct_only && tr.predicted != tr.gold) continue;
    traces.push_back(std::move(tr));
    if (v.top_k == 0 && v.id.empty() && traces.size() >= v.limit) break;
  }
  if (traces.empty()) throw DataError(v.id.empty() ? "no instances to visualize" : "no instance with id " + v.id);

  viz::HeatmapOptions opts;
  opts.format = v.render == "html" ? viz::Format::kHtml : viz::Format::kTerminal;
  opts.threshold = v.threshold;
  opts.color = !v.no_color;
  if (!v.out.empty()) fs::create_directories(v.out);
  const std::size_t shown = v.id.empty() ? std::min(v.limit, traces.size()) : traces.size();
  for (std::size_t i = 0; i < shown; ++i) {
    const auto doc = viz::emit_heatmap(traces[i], opts);
    if (opts.format == viz::Format::kHtml && !v.out.empty()) {
      write_text(fs::path(v.out) / (traces[i].id + ".html"), doc);
    } else {
      out << doc << "\n";
    }
  }
  if (v.top_k > 0) {
    const auto report = viz::top_k_report(traces, v.top_k);
    out << viz::top_k_to_text(report);
    if (!v.out.empty()) write_text(fs::path(v.out) / "top_k.json", viz::top_k_to_json(report).dump(2) + "\n");
  }
  return kOk;
}

void add_checkpoint_args(CLI::App* app, CheckpointArgs& a, bool need_protocol) {
  app->add_option("--checkpoint", a.checkpoint, "model checkpoint")->required();
  app->add_option("--data", a.data, "instances to process")->required();
  app->add_option("--format", a.format, "data format: auto, tacred, semeval");
  app->add_option("--representations", a.representations, "precomputed representation file");
  if (need_protocol) app->add_option("--protocol", a.protocol, "tacred-micro or semeval-macro");
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kUsage: return kUsage;
    case ErrorKind::kData: return kData;
    case ErrorKind::kNumeric: return kNumeric;
  }
  return kUsage;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relation extraction with sentence, mention and segment level attention features", "sms"};
  app.require_subcommand(1);

  ConfigArgs train_args, ablate_args, sweep_args;
  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoint and metrics log");
  train_args.attach(train_cmd);

  CheckpointArgs eval_args;
  bool eval_text = false;
  std::string eval_predictions;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint; prints a report as JSON");
  add_checkpoint_args(eval_cmd, eval_args, true);
  eval_cmd->add_flag("--text", eval_text, "aligned-column text instead of JSON");
  eval_cmd->add_option("--predictions", eval_predictions, "also write predicted labels here");

  CheckpointArgs predict_args;
  std::string predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "write one predicted label per line");
  add_checkpoint_args(predict_cmd, predict_args, false);
  predict_cmd->add_option("--out", predict_out, "output file (default: standard output)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-pattern corpus");
  synth_cmd->add_option("--seed", synth_args.seed, "generator seed");
  synth_cmd->add_option("--train", synth_args.n_train, "training instances");
  synth_cmd->add_option("--dev", synth_args.n_dev, "dev instances (training distribution)");
  synth_cmd->add_option("--test", synth_args.n_test, "compositional test instances");
  synth_cmd->add_option("--spec", synth_args.spec, "generator spec JSON");
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();

  GradArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of encoder + head + loss");
  grad_cmd->add_option("--d", grad_args.d, "head width (even)");
  grad_cmd->add_option("--n", grad_args.n, "tokens");
  grad_cmd->add_option("--classes", grad_args.classes, "relation classes");
  grad_cmd->add_option("--seed", grad_args.seed, "first seed");
  grad_cmd->add_option("--seeds", grad_args.seeds, "number of consecutive seeds");
  grad_cmd->add_option("--eps", grad_args.eps, "finite-difference step");
  grad_cmd->add_option("--tol", grad_args.tol, "relative tolerance");
  grad_cmd->add_option("--features", grad_args.features, "feature groups");

  std::string ablate_rows = "sentence,mention,segment,all";
  auto* ablate_cmd = app.add_subcommand("ablate", "feature ablation over several seeds");
  ablate_args.attach(ablate_cmd);
  ablate_cmd->add_option("--rows", ablate_rows, "comma-separated feature sets");

  std::string sweep_n = "1,2,3,4,5";
  auto* sweep_cmd = app.add_subcommand("sweep", "n-gram kernel-size sweep");
  sweep_args.attach(sweep_cmd);
  sweep_cmd->add_option("--max-n", sweep_n, "comma-separated largest kernel sizes");

  CheckpointArgs viz_args;
  VizArgs viz_opts;
  auto* viz_cmd = app.add_subcommand("viz", "attention heatmaps and most-attended segments");
  add_checkpoint_args(viz_cmd, viz_args, false);
  viz_cmd->add_option("--render", viz_opts.render, "terminal or html");
  viz_cmd->add_option("--out", viz_opts.out, "directory for HTML files and reports");
  viz_cmd->add_option("--id", viz_opts.id, "only this instance");
  viz_cmd->add_option("--limit", viz_opts.limit, "instances to render");
  viz_cmd->add_option("--threshold", viz_opts.threshold, "minimum weight to colour (default 1.5/n)");
  viz_cmd->add_flag("--no-color", viz_opts.no_color, "plain-text terminal output");
  viz_cmd->add_flag("--correct-only", viz_opts.correct_only, "skip misclassified instances");
  viz_cmd->add_option("--top-k", viz_opts.top_k, "print a top-k attention report over all instances");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, eval_text, eval_predictions, out);
    if (*predict_cmd) return cmd_predict(predict_args, predict_out, out);
    if (*synth_cmd) return cmd_synth(synth_args, out);
    if (*grad_cmd) return cmd_gradcheck(grad_args, out);
    if (*ablate_cmd) return cmd_ablate(ablate_args, ablate_rows, out);
    if (*sweep_cmd) return cmd_sweep(sweep_args, sweep_n, out);
    if (*viz_cmd) return cmd_viz(viz_args, viz_opts, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  err << app.help();
  return kUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace sms::cli
