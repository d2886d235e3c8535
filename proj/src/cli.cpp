// Copyright 2026 The STDT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stdt/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "stdt/config_io.hpp"
#include "stdt/error.hpp"
#include "stdt/evaluator.hpp"
#include "stdt/format.hpp"
#include "stdt/ingest.hpp"
#include "stdt/synth.hpp"
#include "stdt/trainer.hpp"

#ifndef STDT_GIT_HASH
#define STDT_GIT_HASH "unknown"
#endif

namespace stdt {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t parse_seed(const std::string& text, const char* source) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::kUsage, std::string("bad seed '") + text + "' from " + source);
}

struct Common {
  std::string seed;
  int jobs = 1;

  // --seed wins over STDT_SEED; nullopt when neither is set.
  std::optional<std::uint64_t> seed_value() const {
    if (!seed.empty()) return parse_seed(seed, "--seed");
    if (const char* env = std::getenv("STDT_SEED"); env && *env) return parse_seed(env, "STDT_SEED");
    return std::nullopt;
  }
};

struct Experiment {
  std::string manifest;
  std::string std_config;
  std::string vit_config;
  std::string train_config;
  std::string generator;
  int bags = 1;
};

struct Configs {
  StdConfig std_cfg;
  VitConfig vit_cfg;
  TrainConfig train_cfg;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Seed (falls back to STDT_SEED, then the config)");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

void add_experiment(CLI::App* app, Experiment& e) {
  app->add_option("--manifest", e.manifest, "Clip manifest (JSONL)")->required();
  app->add_option("--std-config", e.std_config, "Sampling config JSON");
  app->add_option("--vit-config", e.vit_config, "Model config JSON");
  app->add_option("--train-config", e.train_config, "Training config JSON");
  app->add_option("--generator", e.generator, "Only use clips with this generator tag");
  app->add_option("--bags", e.bags, "Bags averaged per clip at test time")
      ->check(CLI::PositiveNumber);
}

json file_or_empty(const std::string& path) {
  return path.empty() ? json::object() : load_json(path);
}

// Loads and validates every config before any data is touched.
Configs load_configs(const Experiment& e, const Common& c) {
  Configs cfg;
  cfg.std_cfg = validate_config(std_config_from_json(file_or_empty(e.std_config)));
  cfg.vit_cfg = vit_config_from_json(file_or_empty(e.vit_config), cfg.std_cfg);
  cfg.train_cfg = train_config_from_json(file_or_empty(e.train_config));
  if (const auto s = c.seed_value()) cfg.train_cfg.seed = *s;
  cfg.train_cfg.jobs = c.jobs;
  return cfg;
}

std::vector<ClipData> load_all(const std::string& manifest) {
  return load_clips(read_manifest(manifest));
}

EvalOptions eval_options(const Experiment& e, const Configs& cfg) {
  EvalOptions o;
  o.bags = e.bags;
  o.seed = cfg.train_cfg.seed;
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

json metrics_json(const EvalReport& r) {
  return {{"acc", r.metrics.acc}, {"auc", r.auc},  {"rec", r.metrics.rec},
          {"pre", r.metrics.pre}, {"f1", r.metrics.f1}, {"clips", r.clips.size()}};
}

int cmd_synth(const std::string& out, int clips, const std::string& generators,
              const std::string& synth_config, const std::string& splits, const Common& c) {
  SynthConfig cfg = synth_config_from_json(file_or_empty(synth_config));
  std::vector<std::string> tags;
  std::stringstream ss(generators);
  for (std::string t; std::getline(ss, t, ',');) {
    if (!t.empty()) tags.push_back(t);
  }
  if (tags.empty()) throw Error(ErrorKind::kUsage, "--generator is empty");
  for (const auto& t : tags) {
    SynthConfig probe = cfg;
    probe.generator_tag = t;
    validate_synth_config(probe);
  }
  const int per_class = clips / (2 * static_cast<int>(tags.size()));
  if (per_class < 1) throw Error(ErrorKind::kUsage, "--clips too small for the generator list");
  const auto summary =
      build_corpus(per_class, cfg, tags, c.seed_value().value_or(0), out, parse_fraction_list(splits));
  std::cout << json{{"manifest", summary.manifest.string()}, {"clips", summary.clip_ids.size()}}.dump()
            << '\n';
  return 0;
}

int cmd_ingest(const std::string& frames, const std::string& out, int face_size,
               const std::string& fallback, const std::string& splits, const std::vector<int>& box,
               const Common& c) {
  IngestOptions o;
  o.face_size = face_size;
  o.fallback = parse_fallback(fallback);
  o.fractions = parse_fraction_list(splits);
  o.seed = c.seed_value().value_or(0);
  std::vector<ClipManifestEntry> entries;
  if (box.empty()) {
    entries = ingest_directory(frames, out, NullDetector{}, o);
  } else {
    if (box.size() != 4) throw Error(ErrorKind::kUsage, "--box takes x,y,w,h");
    entries = ingest_directory(frames, out, FixedBoxDetector({box[0], box[1], box[2], box[3]}), o);
  }
  std::cout << json{{"manifest", out}, {"clips", entries.size()}}.dump() << '\n';
  return 0;
}

void write_trace(const TrainResult& r, const fs::path& dir) {
  std::ostringstream trace;
  trace << "step,epoch,loss,lr\n";
  for (const auto& t : r.trace) {
    trace << t.step << ',' << t.epoch << ',' << format_double(t.loss) << ','
          << format_double(t.lr) << '\n';
  }
  write_text(dir / "loss_trace.csv", trace.str());
  std::ostringstream epochs;
  epochs << "epoch,mean_loss,val_auc\n";
  for (const auto& e : r.epochs) {
    epochs << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.val_auc) << '\n';
  }
  write_text(dir / "epochs.csv", epochs.str());
}

int cmd_train(const Experiment& e, const std::string& out, const std::string& variant_name_in,
              const Common& c) {
  const Configs cfg = load_configs(e, c);
  const DropoutVariant variant = parse_variant(variant_name_in);
  const SamplingPlan plan = make_plan(cfg.std_cfg, variant);
  const ExperimentData data = split_clips(load_all(e.manifest), e.generator);

  const TrainResult r = train(data.train, data.val, plan, cfg.vit_cfg, cfg.train_cfg,
                              [](const EpochRow& row) {
                                std::cerr << "epoch " << row.epoch << " loss "
                                          << format_double(row.mean_loss) << " val_auc "
                                          << format_double(row.val_auc) << '\n';
                                return true;
                              });
  const fs::path dir(out);
  fs::create_directories(dir);
  save_checkpoint(dir / "model.ckpt", cfg.vit_cfg, r.best);
  save_checkpoint(dir / "last.ckpt", cfg.vit_cfg, r.last);
  write_trace(r, dir);

  json run;
  run["manifest"] = fs::relative(fs::absolute(e.manifest), fs::absolute(dir)).generic_string();
  run["generator"] = e.generator;
  run["variant"] = variant_name(variant);
  run["seed"] = cfg.train_cfg.seed;
  run["std"] = to_json(cfg.std_cfg);
  run["vit"] = to_json(cfg.vit_cfg);
  run["train"] = to_json(cfg.train_cfg);
  run["git_hash"] = STDT_GIT_HASH;
  run["best_epoch"] = r.best_epoch;
  run["best_val_auc"] = r.best_val_auc;
  run["aborted"] = r.aborted;
  if (r.aborted) run["fault"] = r.fault;
  save_json(run, dir / "run.json");
  if (r.aborted) throw Error(ErrorKind::kNumericalFault, r.fault + " (last good params saved)");
  std::cout << json{{"run", dir.string()}, {"best_epoch", r.best_epoch},
                    {"best_val_auc", r.best_val_auc}}.dump()
            << '\n';
  return 0;
}

struct Run {
  fs::path dir;
  json meta;
  Configs cfg;
  SamplingPlan plan;
  Checkpoint ck;
  fs::path manifest;
};

Run load_run(const std::string& dir_text) {
  Run run;
  run.dir = dir_text;
  run.meta = load_json(run.dir / "run.json");
  run.cfg.std_cfg = validate_config(std_config_from_json(run.meta.at("std")));
  run.cfg.vit_cfg = vit_config_from_json(run.meta.at("vit"), run.cfg.std_cfg);
  run.cfg.train_cfg = train_config_from_json(run.meta.at("train"));
  run.plan = make_plan(run.cfg.std_cfg, parse_variant(run.meta.at("variant").get<std::string>()));
  run.ck = load_checkpoint(run.dir / "model.ckpt");
  if (!(run.ck.config == run.cfg.vit_cfg)) {
    throw Error(ErrorKind::kShapeMismatch, "checkpoint config differs from run.json");
  }
  run.manifest = run.dir / run.meta.at("manifest").get<std::string>();
  return run;
}

std::vector<ClipData> run_split(const Run& run, const std::string& split) {
  auto clips = load_clips(read_manifest(run.manifest), split);
  const std::string tag = run.meta.value("generator", std::string());
  if (!tag.empty()) {
    std::erase_if(clips, [&](const ClipData& c) { return c.entry.generator_tag != tag; });
  }
  if (clips.empty()) throw Error(ErrorKind::kEmptyCorpus, "split '" + split + "' is empty");
  return clips;
}

int cmd_eval(const std::string& run_dir, const std::string& split, const std::string& perturb_list,
             int bags, const std::string& out, const Common& c) {
  const Run run = load_run(run_dir);
  EvalOptions o;
  o.bags = bags;
  o.seed = c.seed_value().value_or(run.cfg.train_cfg.seed);
  if (!perturb_list.empty()) o.perturbations = parse_perturbations(perturb_list);
  const auto clips = run_split(run, split);
  json snap = run.meta;
  snap["split"] = split;
  const EvalReport report = evaluate(clips, run.ck.params, run.cfg.vit_cfg, run.plan, o, snap);

  fs::path json_path = out;
  if (json_path.empty()) {
    std::string stem = "eval_" + split;
    for (auto p : o.perturbations) stem += "_" + perturbation_name(p);
    json_path = run.dir / (stem + ".json");
  }
  fs::path csv_path = json_path;
  csv_path.replace_extension();
  csv_path += "_roc.csv";
  write_report(report, json_path);
  write_roc_csv(report, csv_path);
  json summary = metrics_json(report);
  summary["report"] = json_path.string();
  summary["unreachable_compressions"] = report.unreachable_compressions;
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_export(const std::string& run_dir, const std::string& split, const std::string& out,
               const Common& c) {
  const Run run = load_run(run_dir);
  const auto clips = run_split(run, split);
  json snap = run.meta;
  snap["split"] = split;
  export_embeddings(clips, run.ck.params, run.cfg.vit_cfg, run.plan,
                    c.seed_value().value_or(run.cfg.train_cfg.seed), out, config_hash(snap));
  std::cout << json{{"embeddings", out}, {"clips", clips.size()}}.dump() << '\n';
  return 0;
}

int cmd_ablate(const Experiment& e, const std::string& variants_text, bool allow_large,
               const std::string& out, const Common& c) {
  const Configs cfg = load_configs(e, c);
  std::vector<DropoutVariant> variants;
  std::stringstream ss(variants_text);
  for (std::string v; std::getline(ss, v, ',');) {
    if (!v.empty()) variants.push_back(parse_variant(v));
  }
  for (auto v : variants) {
    const SamplingPlan plan = make_plan(cfg.std_cfg, v);
    if (v == DropoutVariant::kNone && plan.tokens() > kMaxNoneTokens && !allow_large) {
      throw Error(ErrorKind::kInvalidConfig, "variant none needs " + std::to_string(plan.tokens()) +
                                                 " tokens; pass --allow-large to run it");
    }
  }
  const auto data = split_clips(load_all(e.manifest), e.generator);
  const auto rows = run_ablation(data, cfg.std_cfg, cfg.vit_cfg, cfg.train_cfg, variants,
                                 eval_options(e, cfg), allow_large);
  json snap = {{"std", to_json(cfg.std_cfg)},
               {"vit", to_json(cfg.vit_cfg)},
               {"train", to_json(cfg.train_cfg)},
               {"variants", variants_text},
               {"generator", e.generator}};
  write_ablation_csv(rows, out, config_hash(snap));
  json summary = json::array();
  for (const auto& r : rows) {
    json m = metrics_json(r.report);
    m["variant"] = variant_name(r.variant);
    m["tokens"] = r.tokens;
    summary.push_back(m);
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_sweep(const Experiment& e, const std::string& axis_text, const std::string& values_text,
              const std::string& out, const Common& c) {
  const Configs cfg = load_configs(e, c);
  const SweepAxis axis = parse_axis(axis_text);
  const auto values = parse_fraction_list(values_text);
  plan_rate_sweep(axis, values, cfg.std_cfg);  // reject a bad base before loading data
  const auto data = split_clips(load_all(e.manifest), e.generator);
  const auto rows =
      run_rate_sweep(axis, values, data, cfg.std_cfg, cfg.vit_cfg, cfg.train_cfg, eval_options(e, cfg));
  json snap = {{"std", to_json(cfg.std_cfg)},
               {"vit", to_json(cfg.vit_cfg)},
               {"train", to_json(cfg.train_cfg)},
               {"axis", axis_text},
               {"values", values_text},
               {"generator", e.generator}};
  write_sweep_csv(rows, out, config_hash(snap));
  int feasible = 0;
  for (const auto& r : rows) feasible += r.point.feasible ? 1 : 0;
  std::cout << json{{"table", out}, {"rows", rows.size()}, {"feasible", feasible}}.dump() << '\n';
  return 0;
}

int cmd_crosseval(const Experiment& e, const std::string& train_gen, const std::string& test_gen,
                  int permutations, const std::string& out, const Common& c) {
  const Configs cfg = load_configs(e, c);
  make_plan(cfg.std_cfg, DropoutVariant::kSpatiotemporal);
  const auto clips = load_all(e.manifest);
  const auto r = run_crosseval(clips, train_gen, test_gen, cfg.std_cfg, cfg.vit_cfg, cfg.train_cfg,
                               eval_options(e, cfg), permutations);
  json j = report_to_json(r.report);
  j["train_tag"] = r.train_tag;
  j["test_tag"] = r.test_tag;
  j["null"] = {{"mean", r.null.mean}, {"stddev", r.null.stddev}, {"permutations", r.null.permutations}};
  j["above_null"] = r.above_null;
  write_text(out, j.dump(2) + "\n");
  std::cout << json{{"report", out},
                    {"auc", r.report.auc},
                    {"null_stddev", r.null.stddev},
                    {"above_null", r.above_null}}
                   .dump()
            << '\n';
  return 0;
}

void print_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Spatiotemporal-dropout bag-of-patches deepfake detector"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and manifest");
  std::string synth_out, synth_gen = "jitterA", synth_cfg, synth_split = "0.8,0.1,0.1";
  int synth_clips = 40;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--clips", synth_clips, "Total clip count, split over classes and generators");
  synth->add_option("--generator", synth_gen, "Generator tags, comma separated (jitterA,blendB)");
  synth->add_option("--synth-config", synth_cfg, "Synthesis config JSON");
  synth->add_option("--split", synth_split, "train,val,test fractions");
  add_common(synth, common);

  auto* ingest = app.add_subcommand("ingest", "Align frame directories into a manifest");
  std::string ing_frames, ing_out, ing_fallback = "center", ing_split = "0.8,0.1,0.1";
  int ing_face = 384;
  std::vector<int> ing_box;
  ingest->add_option("--frames", ing_frames, "Root with <clip>/%06d.png and labels.csv")->required();
  ingest->add_option("--out", ing_out, "Manifest path")->required();
  ingest->add_option("--face-size", ing_face, "Aligned face side in pixels");
  ingest->add_option("--fallback", ing_fallback, "center|skip when no face is found");
  ingest->add_option("--split", ing_split, "train,val,test fractions");
  ingest->add_option("--box", ing_box, "Fixed face box x,y,w,h")->delimiter(',')->expected(4);
  add_common(ingest, common);

  auto* trn = app.add_subcommand("train", "Train a detector");
  Experiment trn_e;
  std::string trn_out, trn_variant = "ST";
  add_experiment(trn, trn_e);
  trn->add_option("--out", trn_out, "Run directory")->required();
  trn->add_option("--variant", trn_variant, "Dropout variant: none|S|T|ST");
  add_common(trn, common);

  auto* ev = app.add_subcommand("eval", "Evaluate a trained run");
  std::string ev_run, ev_split = "test", ev_perturb, ev_out;
  int ev_bags = 1;
  ev->add_option("--run", ev_run, "Run directory")->required();
  ev->add_option("--split", ev_split, "Manifest split");
  ev->add_option("--perturb", ev_perturb, "Perturbations: flip,blur,bright,compress,noise");
  ev->add_option("--bags", ev_bags, "Bags averaged per clip")->check(CLI::PositiveNumber);
  ev->add_option("--out", ev_out, "Report JSON path (ROC CSV goes next to it)");
  add_common(ev, common);

  auto* abl = app.add_subcommand("ablate", "Train and evaluate each dropout variant");
  Experiment abl_e;
  std::string abl_variants = "none,S,T,ST", abl_out;
  bool abl_large = false;
  add_experiment(abl, abl_e);
  abl->add_option("--variants", abl_variants, "Variants, comma separated");
  abl->add_flag("--allow-large", abl_large, "Allow the none variant above 256 tokens");
  abl->add_option("--out", abl_out, "Variant table CSV")->required();
  add_common(abl, common);

  auto* sw = app.add_subcommand("sweep", "Sweep the temporal or spatial drop rate");
  Experiment sw_e;
  std::string sw_axis, sw_values, sw_out;
  add_experiment(sw, sw_e);
  sw->add_option("--axis", sw_axis, "alpha|beta (beta values are beta' = 1 - beta)")->required();
  sw->add_option("--values", sw_values, "Rates, comma separated, e.g. 1/2,1/4")->required();
  sw->add_option("--out", sw_out, "Sweep table CSV")->required();
  add_common(sw, common);

  auto* ce = app.add_subcommand("crosseval", "Train on one generator, test on another");
  Experiment ce_e;
  std::string ce_train = "jitterA", ce_test = "blendB", ce_out;
  int ce_perm = 1000;
  add_experiment(ce, ce_e);
  ce->add_option("--train-gen", ce_train, "Training generator tag");
  ce->add_option("--test-gen", ce_test, "Test generator tag");
  ce->add_option("--permutations", ce_perm, "Label permutations for the null")
      ->check(CLI::PositiveNumber);
  ce->add_option("--out", ce_out, "Report JSON")->required();
  add_common(ce, common);

  auto* ex = app.add_subcommand("export-embeddings", "Write class-token embeddings as CSV");
  std::string ex_run, ex_out, ex_split = "test";
  ex->add_option("--run", ex_run, "Run directory")->required();
  ex->add_option("--out", ex_out, "Output CSV")->required();
  ex->add_option("--split", ex_split, "Manifest split");
  add_common(ex, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) return app.exit(ex);
    print_error(kind_name(ErrorKind::kUsage), ex.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth(synth_out, synth_clips, synth_gen, synth_cfg, synth_split, common);
    if (*ingest) {
      return cmd_ingest(ing_frames, ing_out, ing_face, ing_fallback, ing_split, ing_box, common);
    }
    if (*trn) return cmd_train(trn_e, trn_out, trn_variant, common);
    if (*ev) return cmd_eval(ev_run, ev_split, ev_perturb, ev_bags, ev_out, common);
    if (*abl) return cmd_ablate(abl_e, abl_variants, abl_large, abl_out, common);
    if (*sw) return cmd_sweep(sw_e, sw_axis, sw_values, sw_out, common);
    if (*ce) return cmd_crosseval(ce_e, ce_train, ce_test, ce_perm, ce_out, common);
    if (*ex) return cmd_export(ex_run, ex_split, ex_out, common);
  } catch (const Error& err) {
    print_error(kind_name(err.kind()), err.what());
    return err.kind() == ErrorKind::kUsage ? 2 : 1;
  } catch (const std::exception& err) {
    print_error("InternalError", err.what());
    return 1;
  }
  return 2;
}

}  // namespace stdt
