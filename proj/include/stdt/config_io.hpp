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

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stdt/sampler.hpp"
#include "stdt/synth.hpp"
#include "stdt/trainer.hpp"
#include "stdt/vit.hpp"

namespace stdt {

// Config files are JSON objects with a strict schema: unknown keys are
// InvalidConfig errors, missing keys keep their defaults. Rates accept a
// number or a "p/q" fraction string.

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

double parse_fraction(const std::string& text);
std::vector<double> parse_fraction_list(const std::string& csv);

nlohmann::json to_json(const StdConfig& cfg);
StdConfig std_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VitConfig& cfg);
// Starts from the named preset (default toy) with geometry taken from the
// sampling config; explicit num_patches/patch_pixels must agree with it.
VitConfig vit_config_from_json(const nlohmann::json& j, const StdConfig& std_cfg);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace stdt
