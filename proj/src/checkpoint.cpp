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

// Checkpoint layout (little-endian):
//   "STDTVIT\0" | u32 version | u32 header bytes | VitConfig JSON
//   u32 tensor count, then per tensor:
//   u32 name bytes | name | u32 ndim | u32 dims[ndim] | f32 data[prod(dims)]

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "stdt/config_io.hpp"
#include "stdt/error.hpp"
#include "stdt/vit.hpp"

namespace stdt {
namespace {

constexpr char kMagic[8] = {'S', 'T', 'D', 'T', 'V', 'I', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) {
    throw Error(ErrorKind::kIo, "truncated checkpoint " + where);
  }
  return v;
}

std::string get_bytes(std::istream& in, std::uint32_t n, const std::string& where) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error(ErrorKind::kIo, "truncated checkpoint " + where);
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const VitConfig& cfg,
                     const VitParams& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  const std::string header = to_json(cfg).dump();
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto views = tensors(params);
  put_u32(out, static_cast<std::uint32_t>(views.size()));
  std::vector<float> buf;
  for (const auto& t : views) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    buf.assign(t.data.begin(), t.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorKind::kIo, path.string() + " is not a checkpoint");
  }
  const auto version = get_u32(in, "version");
  if (version != kVersion) {
    throw Error(ErrorKind::kIo, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header = get_bytes(in, get_u32(in, "header"), "header");
  const auto j = nlohmann::json::parse(header);
  VitConfig cfg;
  cfg.preset = j.at("preset").get<std::string>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.mlp_dim = j.at("mlp_dim").get<int>();
  cfg.dropout_rate = j.at("dropout_rate").get<double>();
  cfg.attn_dropout_rate = j.at("attn_dropout_rate").get<double>();
  cfg.patch_pixels = j.at("patch_pixels").get<int>();
  cfg.num_patches = j.at("num_patches").get<int>();
  cfg.norm_eps = j.at("norm_eps").get<double>();
  validate_vit_config(cfg);

  Checkpoint ck{cfg, make_params(cfg)};
  std::map<std::string, TensorRef> slots;
  for (auto& t : tensors(ck.params)) slots.emplace(t.name, t);

  const auto count = get_u32(in, "tensor count");
  if (count != slots.size()) {
    throw Error(ErrorKind::kShapeMismatch, "checkpoint has " + std::to_string(count) +
                                               " tensors, config expects " +
                                               std::to_string(slots.size()));
  }
  std::vector<float> buf;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = get_bytes(in, get_u32(in, "name"), "name");
    const auto it = slots.find(name);
    if (it == slots.end()) throw Error(ErrorKind::kShapeMismatch, "unexpected tensor " + name);
    const auto ndim = get_u32(in, name);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(in, name));
    if (shape != it->second.shape) throw Error(ErrorKind::kShapeMismatch, "shape mismatch for " + name);
    buf.resize(it->second.data.size());
    if (!buf.empty() && !in.read(reinterpret_cast<char*>(buf.data()),
                                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw Error(ErrorKind::kIo, "truncated checkpoint data for " + name);
    }
    std::copy(buf.begin(), buf.end(), it->second.data.begin());
    slots.erase(it);
  }
  return ck;
}

}  // namespace stdt
