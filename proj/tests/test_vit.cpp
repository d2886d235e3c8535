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

#include <cmath>
#include <fstream>
#include <numbers>

#include "stdt/error.hpp"
#include "stdt/vit.hpp"
#include "support.hpp"

namespace stdt {
namespace {

using testing::random_sequence;
using testing::toy_std;

VitConfig toy_vit() { return vit_preset("toy", 16, 8); }

using testing::noisy_params;
using testing::toy_bag;

void expect_gradients_match(const VitConfig& cfg, Mode mode, std::uint64_t seed, int label) {
  const auto r = testing::gradient_check(cfg, mode, seed, label);
  EXPECT_LT(r.loss_gap, 1e-12);
  EXPECT_TRUE(r.names_match);
  EXPECT_EQ(r.tensors_checked, static_cast<int>(tensors(make_params(cfg)).size()));
  EXPECT_LT(r.max_rel, 1e-4) << r.worst;
}

TEST(VitGradient, MatchesFiniteDifferencesInEvalMode) {
  for (int label = 0; label <= 1; ++label) expect_gradients_match(toy_vit(), Mode::kEval, 10 + label, label);
}

TEST(VitGradient, MatchesFiniteDifferencesWithDropoutMasks) {
  VitConfig cfg = toy_vit();
  cfg.dropout_rate = 0.2;
  cfg.attn_dropout_rate = 0.2;
  expect_gradients_match(cfg, Mode::kTrain, 21, 1);
}

TEST(VitGradient, CoversEveryTensorClass) {
  const VitConfig cfg = toy_vit();
  const VitParams p = noisy_params(cfg, 3);
  const Gradients g = backward(toy_bag(4), 1, p, cfg);
  for (const auto& t : tensors(g.grads)) {
    double norm = 0.0;
    for (double v : t.data) norm += v * v;
    EXPECT_GT(norm, 0.0) << t.name;
  }
}

// Straight-line forward written with plain loops, independent of the Eigen
// implementation.
double reference_logit(const BagOfPatches& bag, const VitParams& p, const VitConfig& cfg) {
  const int d = cfg.embed_dim;
  const int m = static_cast<int>(bag.patches.size());
  const int t = m + 1;
  std::vector<std::vector<double>> x(t, std::vector<double>(d));
  for (int j = 0; j < d; ++j) x[0][j] = p.cls(j) + p.pos(0, j);
  for (int k = 0; k < m; ++k) {
    const auto px = bag.patches[k].pixels();
    for (int j = 0; j < d; ++j) {
      double s = p.patch_b(j) + p.pos(bag.origins[k].spatial + 1, j);
      // Pixels enter the projection rescaled from [0,1] to [-1,1].
      for (std::size_t i = 0; i < px.size(); ++i) {
        s += (2.0 * px[i] - 1.0) * p.patch_w(static_cast<int>(i), j);
      }
      x[k + 1][j] = s;
    }
  }
  auto norm = [&](const std::vector<double>& row, const RowVec& g, const RowVec& b) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= d;
    std::vector<double> out(d);
    for (int j = 0; j < d; ++j) out[j] = (row[j] - mean) / std::sqrt(var + cfg.norm_eps) * g(j) + b(j);
    return out;
  };
  auto gelu = [](double u) { return 0.5 * u * (1.0 + std::erf(u / std::numbers::sqrt2)); };
  const int dh = d / cfg.heads;
  for (const auto& b : p.blocks) {
    std::vector<std::vector<double>> q(t, std::vector<double>(3 * d));
    for (int r = 0; r < t; ++r) {
      const auto h = norm(x[r], b.ln1_gain, b.ln1_bias);
      for (int o = 0; o < 3 * d; ++o) {
        double s = b.qkv_b(o);
        for (int j = 0; j < d; ++j) s += h[j] * b.qkv_w(j, o);
        q[r][o] = s;
      }
    }
    std::vector<std::vector<double>> cat(t, std::vector<double>(d, 0.0));
    for (int head = 0; head < cfg.heads; ++head) {
      for (int r = 0; r < t; ++r) {
        std::vector<double> a(t);
        double mx = -1e300;
        for (int c = 0; c < t; ++c) {
          double s = 0.0;
          for (int j = 0; j < dh; ++j) s += q[r][head * dh + j] * q[c][d + head * dh + j];
          a[c] = s / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, a[c]);
        }
        double z = 0.0;
        for (double& v : a) z += (v = std::exp(v - mx));
        for (int c = 0; c < t; ++c) {
          for (int j = 0; j < dh; ++j) cat[r][head * dh + j] += a[c] / z * q[c][2 * d + head * dh + j];
        }
      }
    }
    for (int r = 0; r < t; ++r) {
      for (int o = 0; o < d; ++o) {
        double s = b.proj_b(o);
        for (int j = 0; j < d; ++j) s += cat[r][j] * b.proj_w(j, o);
        x[r][o] += s;
      }
      const auto h = norm(x[r], b.ln2_gain, b.ln2_bias);
      std::vector<double> hid(cfg.mlp_dim);
      for (int o = 0; o < cfg.mlp_dim; ++o) {
        double s = b.fc1_b(o);
        for (int j = 0; j < d; ++j) s += h[j] * b.fc1_w(j, o);
        hid[o] = gelu(s);
      }
      for (int o = 0; o < d; ++o) {
        double s = b.fc2_b(o);
        for (int j = 0; j < cfg.mlp_dim; ++j) s += hid[j] * b.fc2_w(j, o);
        x[r][o] += s;
      }
    }
  }
  const auto cls = norm(x[0], p.norm_gain, p.norm_bias);
  double logit = p.head_b(0);
  for (int j = 0; j < d; ++j) logit += cls[j] * p.head_w(j);
  return logit;
}

TEST(VitForward, MatchesLoopReference) {
  const VitConfig cfg = toy_vit();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const VitParams p = noisy_params(cfg, 100 + seed);
    const BagOfPatches bag = toy_bag(200 + seed);
    EXPECT_NEAR(forward(patch_embed(bag, p, cfg), p, cfg), reference_logit(bag, p, cfg), 1e-10);
  }
}

TEST(VitForward, SoftmaxRowsSumToOneAndNormsAreStandardized) {
  const VitConfig cfg = toy_vit();
  const VitParams p = noisy_params(cfg, 7);
  const ForwardTrace tr = forward_trace(patch_embed(toy_bag(8), p, cfg), p, cfg, Mode::kEval);
  for (const auto& b : tr.blocks) {
    for (const auto& probs : b.probs) {
      for (Eigen::Index r = 0; r < probs.rows(); ++r) EXPECT_NEAR(probs.row(r).sum(), 1.0, 1e-12);
    }
    // Normalized rows have zero mean and variance v / (v + eps), v being the
    // input row variance.
    const std::pair<const NormCache*, const Mat*> norms[] = {{&b.ln1, &b.input}, {&b.ln2, &b.mid}};
    for (const auto& [n, in] : norms) {
      for (Eigen::Index r = 0; r < n->xhat.rows(); ++r) {
        const double mean = n->xhat.row(r).mean();
        const double var = (n->xhat.row(r).array() - mean).square().mean();
        const double in_mean = in->row(r).mean();
        const double v = (in->row(r).array() - in_mean).square().mean();
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(var, v / (v + cfg.norm_eps), 1e-12);
        if (v >= 0.1) EXPECT_NEAR(var, 1.0, 1e-5);
      }
    }
  }
}

TEST(VitForward, EvalModeIsPure) {
  VitConfig cfg = toy_vit();
  cfg.dropout_rate = 0.5;
  const VitParams p = noisy_params(cfg, 9);
  const Mat tokens = patch_embed(toy_bag(10), p, cfg);
  Rng rng = make_rng(1);
  const Rng before = rng;
  const double a = forward(tokens, p, cfg, Mode::kEval, &rng);
  const double b = forward(tokens, p, cfg, Mode::kEval, nullptr);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(rng == before);
}

TEST(VitForward, TrainModeDropoutChangesOutput) {
  VitConfig cfg = toy_vit();
  cfg.dropout_rate = 0.5;
  const VitParams p = noisy_params(cfg, 9);
  const Mat tokens = patch_embed(toy_bag(10), p, cfg);
  Rng rng = make_rng(1);
  EXPECT_NE(forward(tokens, p, cfg, Mode::kTrain, &rng), forward(tokens, p, cfg, Mode::kEval));
}

TEST(VitForward, ZeroHeadScoresOneHalf) {
  const VitConfig cfg = toy_vit();
  VitParams p = init_params(cfg, 5);
  p.head_w.setZero();
  p.head_b.setZero();
  for (std::uint64_t s = 0; s < 5; ++s) {
    EXPECT_EQ(sigmoid(forward(patch_embed(toy_bag(s), p, cfg), p, cfg)), 0.5);
  }
}

TEST(VitEmbed, NeutralPatchesGivePositionalRows) {
  // Mid-gray is the zero of the [-1,1] input scale.
  const VitConfig cfg = toy_vit();
  VitParams p = noisy_params(cfg, 15);
  p.patch_b.setZero();
  BagOfPatches bag = toy_bag(16);
  for (auto& patch : bag.patches) {
    for (float& v : patch.pixels()) v = 0.5f;
  }
  const Mat tokens = patch_embed(bag, p, cfg);
  ASSERT_EQ(tokens.rows(), 17);
  ASSERT_EQ(tokens.cols(), cfg.embed_dim);
  for (int k = 0; k < 16; ++k) {
    for (int j = 0; j < cfg.embed_dim; ++j) {
      EXPECT_EQ(tokens(k + 1, j), p.pos(bag.origins[k].spatial + 1, j));
    }
  }
}

TEST(VitEmbed, DefaultGeometryTokenMatrix) {
  const VitConfig cfg = vit_preset("B16", 36, 64);
  const VitParams p = make_params(cfg);
  StdConfig std_cfg;
  Rng rng = make_rng(1);
  const BagOfPatches bag = sample_bag(random_sequence(std_cfg, rng), std_cfg, rng);
  const Mat tokens = patch_embed(bag, p, cfg);
  EXPECT_EQ(tokens.rows(), 37);
  EXPECT_EQ(tokens.cols(), 768);
}

TEST(VitForward, PositionalRowFollowsSpatialIndex) {
  // With the attention output projection zeroed, token rows never mix, so only
  // the class token's positional row can reach the head.
  const VitConfig cfg = toy_vit();
  VitParams p = noisy_params(cfg, 11);
  for (auto& b : p.blocks) {
    b.proj_w.setZero();
    b.proj_b.setZero();
  }
  const Gradients g = backward(toy_bag(12), 1, p, cfg);
  EXPECT_GT(g.grads.pos.row(0).norm(), 0.0);
  EXPECT_EQ(g.grads.pos.bottomRows(cfg.num_patches).norm(), 0.0);

  // Permuting which spatial index a patch claims changes the output.
  const VitParams q = noisy_params(cfg, 13);
  BagOfPatches bag = toy_bag(14);
  const double base = forward(patch_embed(bag, q, cfg), q, cfg);
  std::swap(bag.origins[0].spatial, bag.origins[1].spatial);
  EXPECT_NE(base, forward(patch_embed(bag, q, cfg), q, cfg));
}

TEST(VitForward, RejectsWrongPatchSize) {
  const VitConfig cfg = vit_preset("toy", 16, 4);
  const VitParams p = init_params(cfg, 1);
  EXPECT_THROW(patch_embed(toy_bag(1), p, cfg), Error);
}

TEST(VitLoss, LogitZeroIsLn2AndLossIsNonNegative) {
  EXPECT_DOUBLE_EQ(bce_loss(0.0, 0), std::numbers::ln2);
  EXPECT_DOUBLE_EQ(bce_loss(0.0, 1), std::numbers::ln2);
  Rng rng = make_rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double z = 80.0 * (uniform01(rng) - 0.5);
    EXPECT_GE(bce_loss(z, 0), 0.0);
    EXPECT_GE(bce_loss(z, 1), 0.0);
  }
}

TEST(VitLoss, MatchesExtendedPrecisionOracle) {
  for (double z : {-700.0, -40.0, -3.5, -1e-3, 0.25, 2.0, 35.0, 700.0}) {
    const long double zl = z;
    const long double pos = std::log1p(std::exp(-zl));  // label 1
    const long double neg = std::log1p(std::exp(zl));   // label 0
    const double ref1 = z > 30 ? std::exp(-z) : static_cast<double>(pos);
    const double ref0 = z > 30 ? z + std::exp(-z) : static_cast<double>(neg);
    EXPECT_NEAR(bce_loss(z, 1), ref1, 1e-15 + 1e-13 * ref1) << z;
    EXPECT_NEAR(bce_loss(z, 0), ref0, 1e-15 + 1e-13 * ref0) << z;
  }
}

TEST(VitInit, TruncatedNormalStatistics) {
  const VitConfig cfg = vit_preset("toy", 16, 8);
  const VitParams p = init_params(cfg, 42);
  // Std of N(0, s^2) truncated to +-2s is s * sqrt(1 - 4 phi(2) / (2 Phi(2) - 1)).
  const double phi2 = std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(2.0 / std::numbers::sqrt2);
  const double expected = 0.02 * std::sqrt(1.0 - 4.0 * phi2 / mass);
  double sum = 0.0, sq = 0.0;
  const auto& w = p.patch_w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double v = w.data()[i];
    EXPECT_LE(std::abs(v), 0.04);
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(w.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, expected, 0.05 * expected);
  EXPECT_EQ(p.blocks[0].ln1_gain, RowVec::Ones(cfg.embed_dim));
  EXPECT_TRUE(init_params(cfg, 42).patch_w == p.patch_w);
  EXPECT_FALSE(init_params(cfg, 43).patch_w == p.patch_w);
}

TEST(VitPresets, SizesAndParameterCount) {
  const VitConfig b = vit_preset("B16", 36, 64);
  EXPECT_EQ(b.embed_dim, 768);
  EXPECT_EQ(b.depth, 12);
  EXPECT_EQ(b.heads, 12);
  EXPECT_EQ(b.mlp_dim, 3072);
  const VitConfig l = vit_preset("L16", 36, 64);
  EXPECT_EQ(l.embed_dim, 1024);
  EXPECT_EQ(l.depth, 24);
  EXPECT_EQ(l.heads, 16);
  EXPECT_EQ(l.mlp_dim, 4096);
  EXPECT_THROW(vit_preset("H14", 36, 64), Error);

  const VitConfig t = toy_vit();
  const std::size_t d = 16, m = 16, in = 192, mlp = 32;
  const std::size_t block = 2 * d + (d * 3 * d + 3 * d) + (d * d + d) + 2 * d + (d * mlp + mlp) +
                            (mlp * d + d);
  const std::size_t expected = in * d + d + (m + 1) * d + d + 2 * block + 2 * d + d + 1;
  EXPECT_EQ(parameter_count(make_params(t)), expected);
}

TEST(VitConfigCheck, HeadsMustDivideWidth) {
  VitConfig cfg = toy_vit();
  cfg.heads = 3;
  EXPECT_THROW(validate_vit_config(cfg), Error);
}

TEST(Checkpoint, RoundTripsThroughFloat32) {
  const VitConfig cfg = toy_vit();
  const VitParams p = noisy_params(cfg, 5);
  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", cfg, p);
  const Checkpoint ck = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(ck.config, cfg);
  const auto a = tensors(p);
  const auto b = tensors(ck.params);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].name, b[t].name);
    EXPECT_EQ(a[t].shape, b[t].shape);
    for (std::size_t i = 0; i < a[t].data.size(); ++i) {
      EXPECT_EQ(static_cast<double>(static_cast<float>(a[t].data[i])), b[t].data[i]);
    }
  }
  // Saving the loaded params again reproduces the file byte for byte.
  save_checkpoint(dir / "n.ckpt", ck.config, ck.params);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.ckpt"), std::filesystem::file_size(dir / "n.ckpt"));
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const VitConfig cfg = toy_vit();
  const auto dir = testing::scratch_dir("ckpt_bad");
  save_checkpoint(dir / "m.ckpt", cfg, init_params(cfg, 1));
  std::filesystem::resize_file(dir / "m.ckpt", std::filesystem::file_size(dir / "m.ckpt") - 10);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt"), Error);
  {
    std::ofstream out(dir / "junk.ckpt", std::ios::binary);
    out << "NOTACHECKPOINT";
  }
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), Error);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), Error);
}

}  // namespace
}  // namespace stdt
