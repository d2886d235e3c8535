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

#include "stdt/vit.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stdt/error.hpp"

namespace stdt {
namespace {

NormCache layer_norm(const Mat& x, const RowVec& gain, const RowVec& bias, double eps,
                     Mat& out) {
  NormCache cache;
  const auto cols = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / cols;
    const RowVec centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = centered * inv;
  }
  out = (cache.xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  return cache;
}

// Accumulates gain/bias gradients and returns d(input).
Mat layer_norm_backward(const Mat& dy, const NormCache& cache, const RowVec& gain,
                        RowVec& dgain, RowVec& dbias) {
  dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.array();
  const auto cols = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / cols;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / cols;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// Inverted dropout: kept entries are scaled by 1/(1-p). Empty when inactive.
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Mode mode, Rng* rng) {
  if (mode != Mode::kTrain || p <= 0.0) return {};
  if (rng == nullptr) throw Error(ErrorKind::kInvalidConfig, "train-mode dropout needs an rng");
  Mat mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(*rng) < p ? 0.0 : keep;
  }
  return mask;
}

void apply_mask(Mat& x, const Mat& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

void softmax_rows(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

Mat truncated_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v;
    do {
      v = standard_normal(rng);
    } while (std::abs(v) > 2.0);
    m.data()[i] = v * stddev;
  }
  return m;
}

RowVec truncated_normal_row(Eigen::Index cols, double stddev, Rng& rng) {
  return truncated_normal(1, cols, stddev, rng);
}

template <class Params, class Ref, class Fn>
void visit(Params& p, Fn&& fn) {
  auto mat = [&](const std::string& name, auto& m) {
    fn(name, std::vector<int>{static_cast<int>(m.rows()), static_cast<int>(m.cols())},
       m.data(), static_cast<std::size_t>(m.size()));
  };
  auto vec = [&](const std::string& name, auto& v) {
    fn(name, std::vector<int>{static_cast<int>(v.size())}, v.data(),
       static_cast<std::size_t>(v.size()));
  };
  mat("patch_embed.weight", p.patch_w);
  vec("patch_embed.bias", p.patch_b);
  mat("pos_embed", p.pos);
  vec("cls_token", p.cls);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string pre = "blocks." + std::to_string(i) + ".";
    vec(pre + "norm1.gain", b.ln1_gain);
    vec(pre + "norm1.bias", b.ln1_bias);
    mat(pre + "attn.qkv.weight", b.qkv_w);
    vec(pre + "attn.qkv.bias", b.qkv_b);
    mat(pre + "attn.proj.weight", b.proj_w);
    vec(pre + "attn.proj.bias", b.proj_b);
    vec(pre + "norm2.gain", b.ln2_gain);
    vec(pre + "norm2.bias", b.ln2_bias);
    mat(pre + "mlp.fc1.weight", b.fc1_w);
    vec(pre + "mlp.fc1.bias", b.fc1_b);
    mat(pre + "mlp.fc2.weight", b.fc2_w);
    vec(pre + "mlp.fc2.bias", b.fc2_b);
  }
  vec("norm.gain", p.norm_gain);
  vec("norm.bias", p.norm_bias);
  vec("head.weight", p.head_w);
  vec("head.bias", p.head_b);
}

}  // namespace

VitConfig vit_preset(const std::string& name, int num_patches, int patch_pixels) {
  VitConfig cfg;
  cfg.preset = name;
  cfg.num_patches = num_patches;
  cfg.patch_pixels = patch_pixels;
  if (name == "B16" || name == "B32") {
    cfg.embed_dim = 768;
    cfg.depth = 12;
    cfg.heads = 12;
    cfg.mlp_dim = 3072;
    cfg.dropout_rate = 0.1;
    cfg.attn_dropout_rate = 0.0;
  } else if (name == "L16" || name == "L32") {
    cfg.embed_dim = 1024;
    cfg.depth = 24;
    cfg.heads = 16;
    cfg.mlp_dim = 4096;
    cfg.dropout_rate = 0.1;
    cfg.attn_dropout_rate = 0.0;
  } else if (name == "toy") {
    cfg.embed_dim = 16;
    cfg.depth = 2;
    cfg.heads = 2;
    cfg.mlp_dim = 32;
  } else {
    throw Error(ErrorKind::kInvalidConfig, "unknown ViT preset '" + name + "'");
  }
  return cfg;
}

void validate_vit_config(const VitConfig& cfg) {
  if (cfg.embed_dim <= 0 || cfg.depth < 0 || cfg.heads <= 0 || cfg.mlp_dim <= 0 ||
      cfg.patch_pixels <= 0 || cfg.num_patches <= 0) {
    throw Error(ErrorKind::kInvalidConfig, "ViT sizes must be positive");
  }
  if (cfg.embed_dim % cfg.heads != 0) {
    std::ostringstream msg;
    msg << "embed_dim " << cfg.embed_dim << " is not divisible by heads " << cfg.heads;
    throw Error(ErrorKind::kInvalidConfig, msg.str());
  }
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0 || cfg.attn_dropout_rate < 0.0 ||
      cfg.attn_dropout_rate >= 1.0) {
    throw Error(ErrorKind::kInvalidConfig, "dropout rates must lie in [0, 1)");
  }
}

std::vector<TensorRef> tensors(VitParams& params) {
  std::vector<TensorRef> out;
  visit<VitParams, TensorRef>(params, [&](const std::string& name, std::vector<int> shape,
                                          double* data, std::size_t size) {
    out.push_back({name, std::move(shape), std::span<double>(data, size)});
  });
  return out;
}

std::vector<TensorView> tensors(const VitParams& params) {
  std::vector<TensorView> out;
  visit<const VitParams, TensorView>(
      params, [&](const std::string& name, std::vector<int> shape, const double* data,
                  std::size_t size) {
        out.push_back({name, std::move(shape), std::span<const double>(data, size)});
      });
  return out;
}

VitParams zeros_like(const VitParams& params) {
  VitParams z = params;
  for (auto& t : tensors(z)) std::fill(t.data.begin(), t.data.end(), 0.0);
  return z;
}

VitParams make_params(const VitConfig& cfg) {
  validate_vit_config(cfg);
  const int d = cfg.embed_dim;
  VitParams p;
  p.patch_w = Mat::Zero(cfg.input_dim(), d);
  p.patch_b = RowVec::Zero(d);
  p.pos = Mat::Zero(cfg.num_patches + 1, d);
  p.cls = RowVec::Zero(d);
  p.blocks.resize(cfg.depth);
  for (auto& b : p.blocks) {
    b.ln1_gain = RowVec::Ones(d);
    b.ln1_bias = RowVec::Zero(d);
    b.qkv_w = Mat::Zero(d, 3 * d);
    b.qkv_b = RowVec::Zero(3 * d);
    b.proj_w = Mat::Zero(d, d);
    b.proj_b = RowVec::Zero(d);
    b.ln2_gain = RowVec::Ones(d);
    b.ln2_bias = RowVec::Zero(d);
    b.fc1_w = Mat::Zero(d, cfg.mlp_dim);
    b.fc1_b = RowVec::Zero(cfg.mlp_dim);
    b.fc2_w = Mat::Zero(cfg.mlp_dim, d);
    b.fc2_b = RowVec::Zero(d);
  }
  p.norm_gain = RowVec::Ones(d);
  p.norm_bias = RowVec::Zero(d);
  p.head_w = RowVec::Zero(d);
  p.head_b = RowVec::Zero(1);
  return p;
}

VitParams init_params(const VitConfig& cfg, std::uint64_t seed) {
  VitParams p = make_params(cfg);
  Rng rng = make_rng(seed);
  constexpr double kStd = 0.02;
  const int d = cfg.embed_dim;
  p.patch_w = truncated_normal(cfg.input_dim(), d, kStd, rng);
  p.pos = truncated_normal(cfg.num_patches + 1, d, kStd, rng);
  p.cls = truncated_normal_row(d, kStd, rng);
  for (auto& b : p.blocks) {
    b.qkv_w = truncated_normal(d, 3 * d, kStd, rng);
    b.proj_w = truncated_normal(d, d, kStd, rng);
    b.fc1_w = truncated_normal(d, cfg.mlp_dim, kStd, rng);
    b.fc2_w = truncated_normal(cfg.mlp_dim, d, kStd, rng);
  }
  p.head_w = truncated_normal_row(d, kStd, rng);
  return p;
}

std::size_t parameter_count(const VitParams& params) {
  std::size_t n = 0;
  for (const auto& t : tensors(params)) n += t.data.size();
  return n;
}

bool all_finite(const VitParams& params) {
  for (const auto& t : tensors(params)) {
    for (double v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Mat patch_embed(const BagOfPatches& bag, const VitParams& params, const VitConfig& cfg) {
  const auto count = static_cast<Eigen::Index>(bag.patches.size());
  Mat flat(count, cfg.input_dim());
  for (Eigen::Index k = 0; k < count; ++k) {
    const Image& patch = bag.patches[k];
    if (static_cast<int>(patch.size()) != cfg.input_dim()) {
      std::ostringstream msg;
      msg << "patch has " << patch.size() << " values, model expects " << cfg.input_dim();
      throw Error(ErrorKind::kShapeMismatch, msg.str());
    }
    const auto pixels = patch.pixels();
    for (int i = 0; i < cfg.input_dim(); ++i) flat(k, i) = 2.0 * pixels[i] - 1.0;
  }
  Mat tokens(count + 1, cfg.embed_dim);
  tokens.row(0) = params.cls + params.pos.row(0);
  if (count > 0) {
    tokens.bottomRows(count) = (flat * params.patch_w).rowwise() + params.patch_b;
  }
  for (Eigen::Index k = 0; k < count; ++k) {
    const int spatial = bag.origins.at(k).spatial;
    if (spatial < 0 || spatial >= cfg.num_patches) {
      throw Error(ErrorKind::kShapeMismatch, "patch spatial index outside positional table");
    }
    tokens.row(k + 1) += params.pos.row(spatial + 1);
  }
  return tokens;
}

ForwardTrace forward_trace(const Mat& tokens, const VitParams& params, const VitConfig& cfg,
                           Mode mode, Rng* rng) {
  if (tokens.cols() != cfg.embed_dim || tokens.rows() < 1) {
    throw Error(ErrorKind::kShapeMismatch, "token matrix does not match embed_dim");
  }
  const Eigen::Index t = tokens.rows();
  const int d = cfg.embed_dim;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardTrace trace;
  Mat x = tokens;
  trace.embed_mask = dropout_mask(t, d, cfg.dropout_rate, mode, rng);
  apply_mask(x, trace.embed_mask);

  trace.blocks.resize(params.blocks.size());
  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const BlockParams& b = params.blocks[bi];
    BlockCache& c = trace.blocks[bi];
    c.input = x;
    c.ln1 = layer_norm(x, b.ln1_gain, b.ln1_bias, cfg.norm_eps, c.ln1_out);
    c.qkv = (c.ln1_out * b.qkv_w).rowwise() + b.qkv_b;
    c.heads_out.resize(t, d);
    c.probs.resize(cfg.heads);
    c.attn_masks.resize(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(d + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      Mat s = (q * k.transpose()) * scale;
      softmax_rows(s);
      c.probs[h] = s;
      c.attn_masks[h] = dropout_mask(t, t, cfg.attn_dropout_rate, mode, rng);
      apply_mask(s, c.attn_masks[h]);
      c.heads_out.middleCols(h * dh, dh) = s * v;
    }
    Mat attn = (c.heads_out * b.proj_w).rowwise() + b.proj_b;
    c.proj_mask = dropout_mask(t, d, cfg.dropout_rate, mode, rng);
    apply_mask(attn, c.proj_mask);
    c.mid = x + attn;

    c.ln2 = layer_norm(c.mid, b.ln2_gain, b.ln2_bias, cfg.norm_eps, c.ln2_out);
    c.fc1_pre = (c.ln2_out * b.fc1_w).rowwise() + b.fc1_b;
    c.fc1_act = c.fc1_pre.unaryExpr([](double u) { return gelu(u); });
    c.fc1_mask = dropout_mask(t, cfg.mlp_dim, cfg.dropout_rate, mode, rng);
    apply_mask(c.fc1_act, c.fc1_mask);
    Mat mlp = (c.fc1_act * b.fc2_w).rowwise() + b.fc2_b;
    c.fc2_mask = dropout_mask(t, d, cfg.dropout_rate, mode, rng);
    apply_mask(mlp, c.fc2_mask);
    x = c.mid + mlp;
  }
  trace.final_in = x;
  Mat normed;
  trace.final_norm = layer_norm(x, params.norm_gain, params.norm_bias, cfg.norm_eps, normed);
  trace.cls_repr = normed.row(0);
  trace.logit = trace.cls_repr.dot(params.head_w) + params.head_b(0);
  if (!std::isfinite(trace.logit)) {
    throw Error(ErrorKind::kNumericalFault, "non-finite logit in forward pass");
  }
  return trace;
}

double forward(const Mat& tokens, const VitParams& params, const VitConfig& cfg, Mode mode,
               Rng* rng) {
  return forward_trace(tokens, params, cfg, mode, rng).logit;
}

double bce_loss(double logit, int label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Gradients backward(const BagOfPatches& bag, int label, const VitParams& params,
                   const VitConfig& cfg, Mode mode, Rng* rng) {
  const Mat tokens = patch_embed(bag, params, cfg);
  const ForwardTrace trace = forward_trace(tokens, params, cfg, mode, rng);

  Gradients out;
  out.logit = trace.logit;
  out.loss = bce_loss(trace.logit, label);
  if (!std::isfinite(out.loss)) {
    throw Error(ErrorKind::kNumericalFault, "non-finite loss");
  }
  VitParams& g = out.grads;
  g = zeros_like(params);

  const Eigen::Index t = tokens.rows();
  const int d = cfg.embed_dim;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const double dz = sigmoid(trace.logit) - label;
  g.head_w = dz * trace.cls_repr;
  g.head_b(0) = dz;

  Mat dnormed = Mat::Zero(t, d);
  dnormed.row(0) = dz * params.head_w;
  Mat dx = layer_norm_backward(dnormed, trace.final_norm, params.norm_gain, g.norm_gain,
                               g.norm_bias);

  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const BlockParams& b = params.blocks[bi];
    const BlockCache& c = trace.blocks[bi];
    BlockParams& gb = g.blocks[bi];

    // MLP branch.
    Mat dmlp = dx;
    apply_mask(dmlp, c.fc2_mask);
    gb.fc2_w += c.fc1_act.transpose() * dmlp;
    gb.fc2_b += dmlp.colwise().sum();
    Mat dact = dmlp * b.fc2_w.transpose();
    apply_mask(dact, c.fc1_mask);
    const Mat dpre = dact.array() * c.fc1_pre.unaryExpr([](double u) { return gelu_grad(u); }).array();
    gb.fc1_w += c.ln2_out.transpose() * dpre;
    gb.fc1_b += dpre.colwise().sum();
    const Mat dln2 = dpre * b.fc1_w.transpose();
    Mat dmid = dx + layer_norm_backward(dln2, c.ln2, b.ln2_gain, gb.ln2_gain, gb.ln2_bias);

    // Attention branch.
    Mat dattn = dmid;
    apply_mask(dattn, c.proj_mask);
    gb.proj_w += c.heads_out.transpose() * dattn;
    gb.proj_b += dattn.colwise().sum();
    const Mat dheads = dattn * b.proj_w.transpose();
    Mat dqkv(t, 3 * d);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(d + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      Mat dropped = c.probs[h];
      apply_mask(dropped, c.attn_masks[h]);
      const auto dout = dheads.middleCols(h * dh, dh);
      dqkv.middleCols(2 * d + h * dh, dh) = dropped.transpose() * dout;
      Mat dp = dout * v.transpose();
      apply_mask(dp, c.attn_masks[h]);
      const Mat& p = c.probs[h];
      const Eigen::VectorXd inner = (dp.array() * p.array()).rowwise().sum();
      const Mat ds = p.array() * (dp.colwise() - inner).array();
      dqkv.middleCols(h * dh, dh) = (ds * k) * scale;
      dqkv.middleCols(d + h * dh, dh) = (ds.transpose() * q) * scale;
    }
    gb.qkv_w += c.ln1_out.transpose() * dqkv;
    gb.qkv_b += dqkv.colwise().sum();
    const Mat dln1 = dqkv * b.qkv_w.transpose();
    dx = dmid + layer_norm_backward(dln1, c.ln1, b.ln1_gain, gb.ln1_gain, gb.ln1_bias);
  }

  apply_mask(dx, trace.embed_mask);
  g.cls += dx.row(0);
  g.pos.row(0) += dx.row(0);
  const Eigen::Index count = t - 1;
  if (count > 0) {
    Mat flat(count, cfg.input_dim());
    for (Eigen::Index k = 0; k < count; ++k) {
      const auto pixels = bag.patches[k].pixels();
      for (int i = 0; i < cfg.input_dim(); ++i) flat(k, i) = 2.0 * pixels[i] - 1.0;
    }
    const auto dpatch = dx.bottomRows(count);
    g.patch_w += flat.transpose() * dpatch;
    g.patch_b += dpatch.colwise().sum();
    for (Eigen::Index k = 0; k < count; ++k) {
      g.pos.row(bag.origins[k].spatial + 1) += dx.row(k + 1);
    }
  }
  return out;
}

}  // namespace stdt
