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

#include "stdt/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stdt/error.hpp"

namespace stdt {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfig, std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorKind::kInvalidConfig,
                  std::string("unknown key '") + key + "' in " + what + " config");
    }
  }
}

double rate(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_fraction(v.get<std::string>());
  throw Error(ErrorKind::kInvalidConfig, "rate must be a number or a \"p/q\" string");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kInvalidConfig, std::string("bad value for '") + key + "': " + ex.what());
  }
}

}  // namespace

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kInvalidConfig, path.string() + ": " + ex.what());
  }
}

void save_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    const std::string num_s = text.substr(0, slash);
    const std::string den_s = text.substr(slash + 1);
    const double num = std::stod(num_s, &used);
    if (used != num_s.size()) throw std::invalid_argument(text);
    const double den = std::stod(den_s, &used);
    if (used != den_s.size() || den == 0.0) throw std::invalid_argument(text);
    return num / den;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::kInvalidConfig, "cannot parse rate '" + text + "'");
  }
}

std::vector<double> parse_fraction_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_fraction(item));
  }
  return out;
}

json to_json(const StdConfig& cfg) {
  json j;
  j["n"] = cfg.n;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["rows"] = cfg.rows;
  j["cols"] = cfg.cols;
  j["face_size"] = cfg.face_size;
  return j;
}

StdConfig std_config_from_json(const json& j) {
  check_keys(j, {"n", "alpha", "beta", "rows", "cols", "face_size"}, "std");
  StdConfig cfg;
  read(j, "n", cfg.n);
  if (j.contains("alpha")) cfg.alpha = rate(j["alpha"]);
  if (j.contains("beta")) cfg.beta = rate(j["beta"]);
  read(j, "rows", cfg.rows);
  read(j, "cols", cfg.cols);
  read(j, "face_size", cfg.face_size);
  return cfg;
}

json to_json(const VitConfig& cfg) {
  json j;
  j["preset"] = cfg.preset;
  j["embed_dim"] = cfg.embed_dim;
  j["depth"] = cfg.depth;
  j["heads"] = cfg.heads;
  j["mlp_dim"] = cfg.mlp_dim;
  j["dropout_rate"] = cfg.dropout_rate;
  j["attn_dropout_rate"] = cfg.attn_dropout_rate;
  j["patch_pixels"] = cfg.patch_pixels;
  j["num_patches"] = cfg.num_patches;
  j["norm_eps"] = cfg.norm_eps;
  return j;
}

VitConfig vit_config_from_json(const json& j, const StdConfig& std_cfg) {
  check_keys(j,
             {"preset", "embed_dim", "depth", "heads", "mlp_dim", "dropout_rate",
              "attn_dropout_rate", "patch_pixels", "num_patches", "norm_eps"},
             "vit");
  if (std_cfg.rows <= 0 || std_cfg.cols <= 0 ||
      std_cfg.face_size % std_cfg.rows != 0 || std_cfg.face_size % std_cfg.cols != 0 ||
      std_cfg.patch_height() != std_cfg.patch_width()) {
    throw Error(ErrorKind::kGridMismatch, "the ViT needs square bag patches (face_size/rows == face_size/cols)");
  }
  std::string preset = "toy";
  read(j, "preset", preset);
  VitConfig cfg = vit_preset(preset, std_cfg.num_patches(), std_cfg.patch_height());
  read(j, "embed_dim", cfg.embed_dim);
  read(j, "depth", cfg.depth);
  read(j, "heads", cfg.heads);
  read(j, "mlp_dim", cfg.mlp_dim);
  read(j, "dropout_rate", cfg.dropout_rate);
  read(j, "attn_dropout_rate", cfg.attn_dropout_rate);
  read(j, "norm_eps", cfg.norm_eps);
  int pp = cfg.patch_pixels, np = cfg.num_patches;
  read(j, "patch_pixels", pp);
  read(j, "num_patches", np);
  if (pp != cfg.patch_pixels || np != cfg.num_patches) {
    throw Error(ErrorKind::kGridMismatch,
                "vit patch_pixels/num_patches disagree with the sampling grid");
  }
  validate_vit_config(cfg);
  return cfg;
}

json to_json(const TrainConfig& cfg) {
  json j;
  j["max_lr"] = cfg.max_lr;
  j["weight_decay"] = cfg.weight_decay;
  j["momentum"] = cfg.momentum;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["bags_per_video_per_epoch"] = cfg.bags_per_video_per_epoch;
  j["seed"] = cfg.seed;
  j["warmup_fraction"] = cfg.warmup_fraction;
  j["final_divisor"] = cfg.final_divisor;
  j["decoupled_weight_decay"] = cfg.decoupled_weight_decay;
  j["val_bags"] = cfg.val_bags;
  j["jobs"] = cfg.jobs;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j,
             {"max_lr", "weight_decay", "momentum", "epochs", "batch_size",
              "bags_per_video_per_epoch", "seed", "warmup_fraction", "final_divisor",
              "decoupled_weight_decay", "val_bags", "jobs"},
             "train");
  TrainConfig cfg;
  read(j, "max_lr", cfg.max_lr);
  read(j, "weight_decay", cfg.weight_decay);
  read(j, "momentum", cfg.momentum);
  read(j, "epochs", cfg.epochs);
  read(j, "batch_size", cfg.batch_size);
  read(j, "bags_per_video_per_epoch", cfg.bags_per_video_per_epoch);
  read(j, "seed", cfg.seed);
  read(j, "warmup_fraction", cfg.warmup_fraction);
  read(j, "final_divisor", cfg.final_divisor);
  read(j, "decoupled_weight_decay", cfg.decoupled_weight_decay);
  read(j, "val_bags", cfg.val_bags);
  read(j, "jobs", cfg.jobs);
  validate_train_config(cfg);
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  json j;
  j["face_size"] = cfg.face_size;
  j["n_frames"] = cfg.n_frames;
  j["rows"] = cfg.rows;
  j["cols"] = cfg.cols;
  j["components"] = cfg.components;
  j["min_wavelength"] = cfg.min_wavelength;
  j["max_wavelength"] = cfg.max_wavelength;
  j["contrast"] = cfg.contrast;
  j["noise_amplitude"] = cfg.noise_amplitude;
  j["noise_cell"] = cfg.noise_cell;
  j["drift_speed"] = cfg.drift_speed;
  j["brightness_variation"] = cfg.brightness_variation;
  j["brightness_period"] = cfg.brightness_period;
  j["layout_contrast"] = cfg.layout_contrast;
  j["layout_period"] = cfg.layout_period;
  j["generator_tag"] = cfg.generator_tag;
  j["region_rows"] = cfg.region_rows;
  j["region_cols"] = cfg.region_cols;
  j["amplitude"] = cfg.amplitude;
  j["blend_strength"] = cfg.blend_strength;
  j["flicker_period"] = cfg.flicker_period;
  j["seam_width"] = cfg.seam_width;
  return j;
}

SynthConfig synth_config_from_json(const json& j) {
  check_keys(j,
             {"face_size", "n_frames", "rows", "cols", "components", "min_wavelength",
              "max_wavelength", "contrast", "noise_amplitude", "noise_cell", "drift_speed",
              "brightness_variation", "brightness_period", "layout_contrast", "layout_period",
              "generator_tag", "region_rows",
              "region_cols", "amplitude", "blend_strength", "flicker_period", "seam_width"},
             "synth");
  SynthConfig cfg;
  read(j, "face_size", cfg.face_size);
  read(j, "n_frames", cfg.n_frames);
  read(j, "rows", cfg.rows);
  read(j, "cols", cfg.cols);
  read(j, "components", cfg.components);
  read(j, "min_wavelength", cfg.min_wavelength);
  read(j, "max_wavelength", cfg.max_wavelength);
  read(j, "contrast", cfg.contrast);
  read(j, "noise_amplitude", cfg.noise_amplitude);
  read(j, "noise_cell", cfg.noise_cell);
  read(j, "drift_speed", cfg.drift_speed);
  read(j, "brightness_variation", cfg.brightness_variation);
  read(j, "brightness_period", cfg.brightness_period);
  read(j, "layout_contrast", cfg.layout_contrast);
  read(j, "layout_period", cfg.layout_period);
  read(j, "generator_tag", cfg.generator_tag);
  read(j, "region_rows", cfg.region_rows);
  read(j, "region_cols", cfg.region_cols);
  read(j, "amplitude", cfg.amplitude);
  read(j, "blend_strength", cfg.blend_strength);
  read(j, "flicker_period", cfg.flicker_period);
  read(j, "seam_width", cfg.seam_width);
  validate_synth_config(cfg);
  return cfg;
}

}  // namespace stdt
