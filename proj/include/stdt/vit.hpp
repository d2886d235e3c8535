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

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stdt/rng.hpp"
#include "stdt/sampler.hpp"

namespace stdt {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;

struct VitConfig {
  std::string preset = "toy";
  int embed_dim = 16;
  int depth = 2;
  int heads = 2;
  int mlp_dim = 32;
  double dropout_rate = 0.0;
  double attn_dropout_rate = 0.0;
  int patch_pixels = 8;  // side of one square bag patch
  int num_patches = 16;  // m; the positional table has m+1 rows
  double norm_eps = 1e-6;

  int input_dim() const { return patch_pixels * patch_pixels * 3; }
  int head_dim() const { return embed_dim / heads; }

  bool operator==(const VitConfig&) const = default;
};

// Named backbone presets: B16, B32, L16, L32, toy. Transformer widths follow
// the preset; patch geometry comes from the sampling config.
VitConfig vit_preset(const std::string& name, int num_patches, int patch_pixels);

// Throws InvalidConfig when embed_dim is not divisible by heads or a size is
// non-positive.
void validate_vit_config(const VitConfig& cfg);

struct BlockParams {
  RowVec ln1_gain, ln1_bias;
  Mat qkv_w;  // D x 3D, columns [Q | K | V]
  RowVec qkv_b;
  Mat proj_w;  // D x D
  RowVec proj_b;
  RowVec ln2_gain, ln2_bias;
  Mat fc1_w;  // D x mlp_dim
  RowVec fc1_b;
  Mat fc2_w;  // mlp_dim x D
  RowVec fc2_b;
};

// All learnable weights. Row-vector convention: y = x * W + b.
struct VitParams {
  Mat patch_w;  // input_dim x D
  RowVec patch_b;
  Mat pos;  // (m+1) x D; row 0 belongs to the class token
  RowVec cls;
  std::vector<BlockParams> blocks;
  RowVec norm_gain, norm_bias;
  RowVec head_w;
  RowVec head_b;  // size 1
};

struct TensorRef {
  std::string name;
  std::vector<int> shape;
  std::span<double> data;
};

struct TensorView {
  std::string name;
  std::vector<int> shape;
  std::span<const double> data;
};

// Every parameter tensor in a fixed canonical order.
std::vector<TensorRef> tensors(VitParams& params);
std::vector<TensorView> tensors(const VitParams& params);

// Same shapes, all zeros.
VitParams zeros_like(const VitParams& params);
VitParams make_params(const VitConfig& cfg);  // zeros, LayerNorm gains 1

// Truncated normal (std 0.02, cut at two standard deviations) for weights and
// embeddings; zero biases; unit normalization gains.
VitParams init_params(const VitConfig& cfg, std::uint64_t seed);

std::size_t parameter_count(const VitParams& params);
bool all_finite(const VitParams& params);

enum class Mode { kTrain, kEval };

// Tokens: class token in row 0, then one row per bag patch. Patch rows use
// the positional row of their grid position (spatial + 1), never the frame.
Mat patch_embed(const BagOfPatches& bag, const VitParams& params, const VitConfig& cfg);

struct NormCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

struct BlockCache {
  Mat input;
  NormCache ln1;
  Mat ln1_out;
  Mat qkv;
  std::vector<Mat> probs;        // softmax output per head
  std::vector<Mat> attn_masks;   // empty when attention dropout is inactive
  Mat heads_out;                 // concatenated per-head outputs
  Mat proj_mask;
  Mat mid;                       // input + attention branch
  NormCache ln2;
  Mat ln2_out;
  Mat fc1_pre;
  Mat fc1_mask;
  Mat fc1_act;                   // GELU output after dropout
  Mat fc2_mask;
};

struct ForwardTrace {
  double logit = 0.0;
  RowVec cls_repr;  // final-normalized class token fed to the head
  Mat embed_mask;
  std::vector<BlockCache> blocks;
  Mat final_in;
  NormCache final_norm;
};

// Throws NumericalFault when the logit is not finite. `rng` is consulted only
// in train mode with a non-zero dropout rate.
ForwardTrace forward_trace(const Mat& tokens, const VitParams& params, const VitConfig& cfg,
                           Mode mode, Rng* rng = nullptr);

double forward(const Mat& tokens, const VitParams& params, const VitConfig& cfg,
               Mode mode = Mode::kEval, Rng* rng = nullptr);

// -[l log s(z) + (1-l) log(1 - s(z))] evaluated without forming s(z).
double bce_loss(double logit, int label);

double sigmoid(double z);

struct Gradients {
  VitParams grads;
  double loss = 0.0;
  double logit = 0.0;
};

// Exact gradient of bce_loss(forward(patch_embed(bag))) w.r.t. every tensor.
Gradients backward(const BagOfPatches& bag, int label, const VitParams& params,
                   const VitConfig& cfg, Mode mode = Mode::kEval, Rng* rng = nullptr);

// Checkpoint file: "STDTVIT\0", u32 version, u32 header length, VitConfig as
// JSON, u32 tensor count, then per tensor u32 name length, name bytes, u32
// ndim, u32 dims, float32 data. All integers and floats little-endian.
void save_checkpoint(const std::filesystem::path& path, const VitConfig& cfg,
                     const VitParams& params);

struct Checkpoint {
  VitConfig config;
  VitParams params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stdt
