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

#include "stdt/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stdt/config_io.hpp"
#include "stdt/error.hpp"
#include "stdt/format.hpp"

namespace stdt {
namespace {

using nlohmann::json;

bool near_int(double x) { return std::abs(x - std::round(x)) < 1e-9; }

std::string fraction_text(double x) {
  for (int den = 1; den <= 1000; ++den) {
    const double num = x * den;
    if (near_int(num)) {
      const long n = std::lround(num);
      return den == 1 ? std::to_string(n) : std::to_string(n) + "/" + std::to_string(den);
    }
  }
  return format_double(x);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

FaceSequence windowed(const FaceSequence& seq, int n, Rng& rng) {
  if (static_cast<int>(seq.frames.size()) == n) return seq;
  return {seq.clip_id, window_frames(seq.frames, n, rng), seq.label, seq.generator_tag};
}

double score_bag(const BagOfPatches& bag, const VitParams& params, const VitConfig& vit_cfg) {
  return sigmoid(forward(patch_embed(bag, params, vit_cfg), params, vit_cfg, Mode::kEval));
}

json base_snapshot(const StdConfig& std_cfg, const VitConfig& vit_cfg,
                   const TrainConfig& train_cfg) {
  json j;
  j["std"] = to_json(std_cfg);
  j["vit"] = to_json(vit_cfg);
  j["train"] = to_json(train_cfg);
  return j;
}

TrainResult checked_train(const ExperimentData& data, const SamplingPlan& plan,
                          const VitConfig& vit_cfg, const TrainConfig& train_cfg) {
  TrainResult r = train(data.train, data.val, plan, vit_cfg, train_cfg);
  if (r.aborted) throw Error(ErrorKind::kNumericalFault, r.fault);
  return r;
}

}  // namespace

double predict(const FaceSequence& seq, const VitParams& params, const VitConfig& vit_cfg,
               const SamplingPlan& plan, int bags, Rng& rng) {
  if (bags < 1) throw Error(ErrorKind::kInvalidConfig, "bags must be >= 1");
  double sum = 0.0;
  for (int b = 0; b < bags; ++b) {
    const FaceSequence w = windowed(seq, plan.base.n, rng);
    sum += score_bag(sample_patches(w, plan, rng), params, vit_cfg);
  }
  return sum / bags;
}

std::string config_hash(const json& snapshot) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(snapshot.dump())));
  return buf;
}

EvalReport evaluate(const std::vector<ClipData>& clips, const VitParams& params,
                    const VitConfig& vit_cfg, const SamplingPlan& plan,
                    const EvalOptions& options, const json& snapshot) {
  if (clips.empty()) throw Error(ErrorKind::kEmptyInput, "no clips to evaluate");
  EvalReport report;
  report.config = snapshot.is_null() ? json::object() : snapshot;
  json eval;
  eval["bags"] = options.bags;
  eval["seed"] = options.seed;
  eval["threshold"] = options.threshold;
  eval["kept_frames"] = plan.kept_frames;
  eval["patches_per_frame"] = plan.patches_per_frame;
  json names = json::array();
  for (auto p : options.perturbations) names.push_back(perturbation_name(p));
  eval["perturbations"] = names;
  report.config["eval"] = eval;
  report.config_hash = config_hash(report.config);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& clip : clips) {
    const std::uint64_t id = fnv1a(clip.entry.clip_id);
    FaceSequence seq = to_sequence(clip);
    for (std::size_t i = 0; i < options.perturbations.size(); ++i) {
      const Perturbation p = options.perturbations[i];
      if (p == Perturbation::kCompress) {
        for (auto& frame : seq.frames) {
          CompressResult c = compress(frame);
          if (c.unreachable) ++report.unreachable_compressions;
          frame = std::move(c.image);
        }
      } else {
        Rng prng = make_rng(options.seed, {kTagPerturb, id, i});
        seq = perturb(seq, p, prng);
      }
    }
    Rng rng = make_rng(options.seed, {kTagEval, id});
    const double s = predict(seq, params, vit_cfg, plan, options.bags, rng);
    report.clips.push_back({clip.entry.clip_id, s, clip.entry.label, clip.entry.generator_tag});
    scores.push_back(s);
    labels.push_back(clip.entry.label);
  }
  report.metrics = classify(scores, labels, options.threshold);
  report.auc = auc(scores, labels);
  report.roc = roc(scores, labels);
  return report;
}

json report_to_json(const EvalReport& report) {
  json j;
  j["config_hash"] = report.config_hash;
  j["config"] = report.config;
  const auto& m = report.metrics;
  j["metrics"] = {{"acc", m.acc},
                  {"auc", report.auc},
                  {"rec", m.rec},
                  {"pre", m.pre},
                  {"f1", m.f1},
                  {"precision_undefined", m.precision_undefined},
                  {"tp", m.tp},
                  {"fp", m.fp},
                  {"tn", m.tn},
                  {"fn", m.fn}};
  j["unreachable_compressions"] = report.unreachable_compressions;
  json clips = json::array();
  for (const auto& c : report.clips) {
    clips.push_back({{"clip_id", c.clip_id},
                     {"score", c.score},
                     {"label", c.label},
                     {"generator_tag", c.generator_tag}});
  }
  j["clips"] = clips;
  json points = json::array();
  for (const auto& p : report.roc) {
    json pt = {{"fpr", p.fpr}, {"tpr", p.tpr}};
    if (std::isinf(p.threshold)) {
      pt["threshold"] = nullptr;
    } else {
      pt["threshold"] = p.threshold;
    }
    points.push_back(pt);
  }
  j["roc"] = points;
  return j;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << report_to_json(report).dump(2) << '\n';
}

void write_roc_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "fpr,tpr,threshold,config_hash\n";
  for (const auto& p : report.roc) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << format_double(p.threshold) << ',' << report.config_hash << '\n';
  }
}

void export_embeddings(const std::vector<ClipData>& clips, const VitParams& params,
                       const VitConfig& vit_cfg, const SamplingPlan& plan, std::uint64_t seed,
                       const std::filesystem::path& path, const std::string& hash) {
  auto out = open_out(path);
  out << "clip_id,label,generator_tag,config_hash";
  for (int d = 0; d < vit_cfg.embed_dim; ++d) out << ",e" << d;
  out << '\n';
  for (const auto& clip : clips) {
    Rng rng = make_rng(seed, {kTagEmbed, fnv1a(clip.entry.clip_id)});
    const FaceSequence seq = clip_window(clip, plan.base.n, rng);
    const BagOfPatches bag = sample_patches(seq, plan, rng);
    const ForwardTrace tr =
        forward_trace(patch_embed(bag, params, vit_cfg), params, vit_cfg, Mode::kEval);
    out << clip.entry.clip_id << ',' << clip.entry.label << ',' << clip.entry.generator_tag << ','
        << hash;
    for (Eigen::Index d = 0; d < tr.cls_repr.size(); ++d) out << ',' << format_double(tr.cls_repr[d]);
    out << '\n';
  }
}

ExperimentData split_clips(std::vector<ClipData> clips, const std::string& tag) {
  ExperimentData data;
  for (auto& c : clips) {
    if (!tag.empty() && c.entry.generator_tag != tag) continue;
    if (c.entry.split == "train") {
      data.train.push_back(std::move(c));
    } else if (c.entry.split == "val") {
      data.val.push_back(std::move(c));
    } else if (c.entry.split == "test") {
      data.test.push_back(std::move(c));
    }
  }
  return data;
}

std::vector<VariantResult> run_ablation(const ExperimentData& data, const StdConfig& std_cfg,
                                        const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                                        const std::vector<DropoutVariant>& variants,
                                        const EvalOptions& eval, bool allow_large) {
  std::vector<SamplingPlan> plans;
  for (auto v : variants) {
    plans.push_back(make_plan(std_cfg, v));
    if (v == DropoutVariant::kNone && plans.back().tokens() > kMaxNoneTokens && !allow_large) {
      throw Error(ErrorKind::kInvalidConfig,
                  "variant none needs " + std::to_string(plans.back().tokens()) +
                      " tokens; pass --allow-large to run it");
    }
  }
  std::vector<VariantResult> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const TrainResult tr = checked_train(data, plans[i], vit_cfg, train_cfg);
    json snap = base_snapshot(std_cfg, vit_cfg, train_cfg);
    snap["variant"] = variant_name(variants[i]);
    rows.push_back({variants[i], plans[i].tokens(),
                    evaluate(data.test, tr.best, vit_cfg, plans[i], eval, snap)});
  }
  return rows;
}

void write_ablation_csv(const std::vector<VariantResult>& rows, const std::filesystem::path& path,
                        const std::string& hash) {
  auto out = open_out(path);
  out << "variant,tokens,acc,auc,rec,pre,f1,config_hash\n";
  for (const auto& r : rows) {
    const auto& m = r.report.metrics;
    out << variant_name(r.variant) << ',' << r.tokens << ',' << format_double(m.acc) << ','
        << format_double(r.report.auc) << ',' << format_double(m.rec) << ','
        << format_double(m.pre) << ',' << format_double(m.f1) << ',' << hash << '\n';
  }
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "beta") return SweepAxis::kBeta;
  throw Error(ErrorKind::kUsage, "unknown sweep axis '" + name + "' (alpha|beta)");
}

std::vector<SweepPoint> plan_rate_sweep(SweepAxis axis, const std::vector<double>& values,
                                        const StdConfig& base) {
  validate_config(base);
  const int m = base.num_patches();
  std::vector<SweepPoint> points;
  for (double value : values) {
    SweepPoint pt;
    pt.axis = axis;
    pt.value = value;
    pt.config = base;
    std::ostringstream why;
    if (!(value > 0.0 && value < 1.0)) {
      why << "rate " << fraction_text(value) << " outside (0,1)";
      pt.reason = why.str();
      points.push_back(pt);
      continue;
    }
    if (axis == SweepAxis::kAlpha) {
      const double alpha = value;
      // Kept frame counts d must divide m; the window is n' = d / (1 - alpha).
      int best_n = -1, best_d = -1;
      for (int d = 1; d <= m; ++d) {
        if (m % d != 0) continue;
        const double n_prime = d / (1.0 - alpha);
        if (!near_int(n_prime)) continue;
        const int np = static_cast<int>(std::lround(n_prime));
        if (np <= d) continue;
        if (best_n < 0 || std::abs(np - base.n) < std::abs(best_n - base.n) ||
            (std::abs(np - base.n) == std::abs(best_n - base.n) && np < best_n)) {
          best_n = np;
          best_d = d;
        }
      }
      if (best_n < 0) {
        const double drop = alpha * base.n;
        why << "non-integral or incompatible drop: alpha*n = " << format_double(drop)
            << " at n=" << base.n;
        int nearest = base.n;
        while (!near_int(alpha * nearest)) ++nearest;
        if (nearest != base.n) {
          const int kept = static_cast<int>(std::lround((1.0 - alpha) * nearest));
          why << "; integral drop needs n=" << nearest << ", whose " << kept
              << " kept frames do not divide m=" << m;
        } else {
          why << "; (1-alpha)*n = " << std::lround((1.0 - alpha) * base.n)
              << " does not divide m=" << m;
        }
        why << "; no window n' with (1-alpha)*n' dividing m exists";
        pt.reason = why.str();
      } else {
        pt.config.n = best_n;
        pt.config.alpha = alpha;
        pt.config.beta = 1.0 - 1.0 / best_d;
        pt.feasible = true;
        why << "beta=" << fraction_text(pt.config.beta);
        if (best_n != base.n) why << "; n adjusted to " << best_n;
        pt.reason = why.str();
      }
    } else {
      const double block = value * m;
      if (!near_int(block) || std::lround(block) < 1) {
        why << "non-integral block: beta'*m = " << format_double(block) << " at m=" << m;
        pt.reason = why.str();
      } else if (m % std::lround(block) != 0) {
        why << "block " << std::lround(block) << " does not divide m=" << m;
        pt.reason = why.str();
      } else {
        const int b = static_cast<int>(std::lround(block));
        const int kept = m / b;
        pt.config.beta = 1.0 - static_cast<double>(b) / m;
        if (kept <= base.n) {
          pt.config.alpha = 1.0 - static_cast<double>(kept) / base.n;
          pt.feasible = true;
          why << "alpha=" << fraction_text(pt.config.alpha);
        } else {
          const double n_prime = kept / (1.0 - base.alpha);
          if (near_int(n_prime)) {
            pt.config.n = static_cast<int>(std::lround(n_prime));
            pt.feasible = true;
            why << "n adjusted to " << pt.config.n << " at alpha=" << fraction_text(base.alpha);
          } else {
            why << kept << " kept frames need n' = " << format_double(n_prime)
                << ", which is non-integral at alpha=" << fraction_text(base.alpha);
          }
        }
        pt.reason = why.str();
      }
    }
    if (pt.feasible) validate_config(pt.config);
    points.push_back(pt);
  }
  return points;
}

std::vector<SweepRow> run_rate_sweep(SweepAxis axis, const std::vector<double>& values,
                                     const ExperimentData& data, const StdConfig& base,
                                     const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                                     const EvalOptions& eval) {
  std::vector<SweepRow> rows;
  for (auto& pt : plan_rate_sweep(axis, values, base)) {
    SweepRow row{pt, std::nullopt};
    if (pt.feasible) {
      const SamplingPlan plan = make_plan(pt.config, DropoutVariant::kSpatiotemporal);
      const TrainResult tr = checked_train(data, plan, vit_cfg, train_cfg);
      json snap = base_snapshot(pt.config, vit_cfg, train_cfg);
      row.report = evaluate(data.test, tr.best, vit_cfg, plan, eval, snap);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                     const std::string& hash) {
  auto out = open_out(path);
  out << "axis,value,feasible,n,alpha,beta,acc,auc,reason,config_hash\n";
  for (const auto& r : rows) {
    const auto& p = r.point;
    out << (p.axis == SweepAxis::kAlpha ? "alpha" : "beta") << ',' << fraction_text(p.value) << ','
        << (p.feasible ? 1 : 0) << ',';
    if (p.feasible) {
      out << p.config.n << ',' << fraction_text(p.config.alpha) << ','
          << fraction_text(p.config.beta) << ',';
    } else {
      out << ",,,";
    }
    if (r.report) {
      out << format_double(r.report->metrics.acc) << ',' << format_double(r.report->auc);
    } else {
      out << ',';
    }
    std::string reason = p.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << ',' << '"' << reason << '"' << ',' << hash << '\n';
  }
}

CrossEvalResult run_crosseval(const std::vector<ClipData>& clips, const std::string& train_tag,
                              const std::string& test_tag, const StdConfig& std_cfg,
                              const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                              const EvalOptions& eval, int permutations) {
  const ExperimentData source = split_clips(clips, train_tag);
  const ExperimentData target = split_clips(clips, test_tag);
  if (source.train.empty()) throw Error(ErrorKind::kEmptyCorpus, "no train clips tagged " + train_tag);
  if (target.test.empty()) throw Error(ErrorKind::kEmptyCorpus, "no test clips tagged " + test_tag);
  const SamplingPlan plan = make_plan(std_cfg, DropoutVariant::kSpatiotemporal);
  const TrainResult tr = checked_train(source, plan, vit_cfg, train_cfg);
  json snap = base_snapshot(std_cfg, vit_cfg, train_cfg);
  snap["train_tag"] = train_tag;
  snap["test_tag"] = test_tag;

  CrossEvalResult res;
  res.train_tag = train_tag;
  res.test_tag = test_tag;
  res.report = evaluate(target.test, tr.best, vit_cfg, plan, eval, snap);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& c : res.report.clips) {
    scores.push_back(c.score);
    labels.push_back(c.label);
  }
  Rng rng = make_rng(eval.seed, {kTagNull});
  res.null = permutation_null(scores, labels, permutations, rng);
  res.above_null = res.report.auc > 0.5 + 3.0 * res.null.stddev;
  return res;
}

}  // namespace stdt
