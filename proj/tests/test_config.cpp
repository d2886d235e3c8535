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

#include <gtest/gtest.h>

#include <fstream>
#include <functional>

#include "stdt/config_io.hpp"
#include "stdt/error.hpp"
#include "support.hpp"

namespace stdt {
namespace {

using nlohmann::json;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::kUsage;
}

TEST(Fractions, Parse) {
  EXPECT_DOUBLE_EQ(parse_fraction("17/18"), 17.0 / 18.0);
  EXPECT_DOUBLE_EQ(parse_fraction("0.25"), 0.25);
  EXPECT_DOUBLE_EQ(parse_fraction("1"), 1.0);
  EXPECT_THROW(parse_fraction("1/0"), Error);
  EXPECT_THROW(parse_fraction("a/2"), Error);
  EXPECT_THROW(parse_fraction("1/2x"), Error);
  const auto list = parse_fraction_list("1/2,1/4,,0.125");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_DOUBLE_EQ(list[2], 0.125);
}

TEST(StdConfigJson, RoundTripAndStrictKeys) {
  const StdConfig cfg = testing::toy_std();
  EXPECT_EQ(std_config_from_json(to_json(cfg)), cfg);
  const StdConfig dflt = std_config_from_json(json{{"beta", "17/18"}});
  EXPECT_DOUBLE_EQ(dflt.beta, 17.0 / 18.0);
  EXPECT_EQ(kind_of([] { std_config_from_json(json{{"alpah", 0.25}}); }), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind_of([] { std_config_from_json(json{{"n", "many"}}); }), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind_of([] { std_config_from_json(json::array()); }), ErrorKind::kInvalidConfig);
}

TEST(VitConfigJson, PresetsAndGeometry) {
  const StdConfig std_cfg = testing::toy_std();
  const VitConfig toy = vit_config_from_json(json::object(), std_cfg);
  EXPECT_EQ(toy.num_patches, 16);
  EXPECT_EQ(toy.patch_pixels, 8);
  EXPECT_EQ(vit_config_from_json(to_json(toy), std_cfg), toy);
  const VitConfig b16 = vit_config_from_json(json{{"preset", "B16"}}, StdConfig{});
  EXPECT_EQ(b16.embed_dim, 768);
  EXPECT_EQ(b16.depth, 12);
  EXPECT_EQ(b16.heads, 12);
  EXPECT_EQ(b16.mlp_dim, 3072);
  EXPECT_DOUBLE_EQ(b16.dropout_rate, 0.1);
  EXPECT_EQ(b16.num_patches, 36);
  EXPECT_EQ(b16.patch_pixels, 64);
  EXPECT_EQ(kind_of([&] { vit_config_from_json(json{{"num_patches", 9}}, std_cfg); }),
            ErrorKind::kGridMismatch);
  EXPECT_EQ(kind_of([&] { vit_config_from_json(json{{"depht", 2}}, std_cfg); }),
            ErrorKind::kInvalidConfig);
  StdConfig wide = std_cfg;
  wide.rows = 2;
  wide.n = 4;
  wide.beta = 0.5;
  EXPECT_EQ(kind_of([&] { vit_config_from_json(json::object(), wide); }), ErrorKind::kGridMismatch);
}

TEST(TrainConfigJson, RoundTrip) {
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.max_lr = 0.02;
  cfg.decoupled_weight_decay = false;
  EXPECT_EQ(train_config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(kind_of([] { train_config_from_json(json{{"lr", 0.1}}); }), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind_of([] { train_config_from_json(json{{"warmup_fraction", 0.0}}); }),
            ErrorKind::kInvalidConfig);
}

TEST(SynthConfigJson, RoundTrip) {
  SynthConfig cfg;
  cfg.generator_tag = "blendB";
  cfg.amplitude = 2.5;
  EXPECT_EQ(synth_config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(kind_of([] { synth_config_from_json(json{{"amplitud", 1}}); }), ErrorKind::kInvalidConfig);
}

TEST(JsonFiles, SaveLoad) {
  const auto dir = testing::scratch_dir("config_files");
  save_json(json{{"a", 1}}, dir / "x.json");
  EXPECT_EQ(load_json(dir / "x.json")["a"], 1);
  EXPECT_EQ(kind_of([&] { load_json(dir / "missing.json"); }), ErrorKind::kIo);
  std::ofstream(dir / "bad.json") << "{";
  EXPECT_EQ(kind_of([&] { load_json(dir / "bad.json"); }), ErrorKind::kInvalidConfig);
}

}  // namespace
}  // namespace stdt
