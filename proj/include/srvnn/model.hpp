/*
 * Copyright (c) 2026, the srvnn authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Sampling-rate-versatile transformer classifier.
//
// input x (N x C) -> + positional encoding -> E encoder layers -> temporal max
// pool -> linear -> softmax over M classes.
//
// Each encoder layer:
//   beta_h = softmax(x W_Q^h (x W_K^h)^T / sqrt(C)) x W_V^h     h = 1..Z
//   x_A    = [beta_1 ... beta_Z] W_U                           (ZC x C)
//   h      = LayerNorm1(x_A + x)
//   f      = ReLU(h W_1 + b_1) W_2 + b_2
//   out    = LayerNorm2(f + h)   (or out = f with output_norm = false)
//
// Every head projects to the full width C, so W_Q^h, W_K^h, W_V^h are C x C.
//
// Parameters live in one flat double buffer in this order (matrices
// row-major):
//   for each layer:
//     for each head h: W_Q^h, W_K^h, W_V^h            (C x C each)
//     W_U (ZC x C), ln1 gain (C), ln1 bias (C),
//     W_1 (C x H), b_1 (H), W_2 (H x C), b_2 (C),
//     ln2 gain (C), ln2 bias (C)
//   W_C (C x M), B_C (M)
// The checkpoint format and the optimizer state use the same order.

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "srvnn/csi.hpp"
#include "srvnn/error.hpp"
#include "srvnn/random.hpp"

namespace srvnn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using RowVecMap = Eigen::Map<RowVec>;
using ConstRowVecMap = Eigen::Map<const RowVec>;

enum class PositionalEncoding { SinusoidalIndex, SinusoidalTime };

struct ModelConfig {
  Index subcarriers = 16;  // C, also the model width
  Index heads = 2;         // Z
  Index layers = 2;        // E
  Index ffn_hidden = 64;   // H
  Index classes = 3;       // M
  PositionalEncoding pos_encoding = PositionalEncoding::SinusoidalIndex;
  /// SinusoidalTime maps t / T onto [0, time_reference_length).
  double time_reference_length = 100.0;
  /// Residual + LayerNorm around the FFN. false gives out = FFN(norm(x_A + x)).
  bool output_norm = true;
  double layer_norm_eps = 1e-10;
  std::uint64_t init_seed = 0;
  /// Weights ~ U(-s, s); s <= 0 selects 1 / sqrt(C).
  double init_scale = 0.0;

  double effective_init_scale() const {
    return init_scale > 0.0 ? init_scale : 1.0 / std::sqrt(static_cast<double>(subcarriers));
  }

  void validate() const {
    constexpr std::string_view where = "srv_model.config";
    require(subcarriers >= 1 && heads >= 1 && layers >= 1 && ffn_hidden >= 1 && classes >= 1, ErrorKind::ConfigError,
            where, "C, Z, E, H and M must all be >= 1");
    require(layer_norm_eps >= 0.0, ErrorKind::ConfigError, where, "layer_norm_eps must be >= 0");
    require(time_reference_length > 0.0, ErrorKind::ConfigError, where, "time_reference_length must be positive");
  }
};

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

struct LayerOffsets {
  std::vector<Index> wq, wk, wv;
  Index wu = 0, ln1_gain = 0, ln1_bias = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, ln2_gain = 0, ln2_bias = 0;
};

struct ParameterLayout {
  Index c = 0, z = 0, h = 0, m = 0;
  std::vector<LayerOffsets> layers;
  Index wc = 0, bc = 0;
  Index size = 0;

  explicit ParameterLayout(const ModelConfig& cfg) : c(cfg.subcarriers), z(cfg.heads), h(cfg.ffn_hidden), m(cfg.classes) {
    Index at = 0;
    auto take = [&at](Index n) {
      const Index o = at;
      at += n;
      return o;
    };
    layers.resize(static_cast<std::size_t>(cfg.layers));
    for (auto& l : layers) {
      for (Index k = 0; k < z; ++k) {
        l.wq.push_back(take(c * c));
        l.wk.push_back(take(c * c));
        l.wv.push_back(take(c * c));
      }
      l.wu = take(z * c * c);
      l.ln1_gain = take(c);
      l.ln1_bias = take(c);
      l.w1 = take(c * h);
      l.b1 = take(h);
      l.w2 = take(h * c);
      l.b2 = take(c);
      l.ln2_gain = take(c);
      l.ln2_bias = take(c);
    }
    wc = take(c * m);
    bc = take(m);
    size = at;
  }
};

/// Typed views into a flat buffer laid out by ParameterLayout. `Ptr` is
/// `double*` for writable access or `const double*` for read-only access.
template <typename Ptr>
struct ParamView {
  static constexpr bool kConst = std::is_const_v<std::remove_pointer_t<Ptr>>;
  using M = std::conditional_t<kConst, ConstMatMap, MatMap>;
  using V = std::conditional_t<kConst, ConstRowVecMap, RowVecMap>;

  Ptr base;
  const ParameterLayout* layout;

  M mat(Index off, Index rows, Index cols) const { return M(base + off, rows, cols); }
  V vec(Index off, Index n) const { return V(base + off, n); }

  const LayerOffsets& at(std::size_t l) const { return layout->layers[l]; }
  M wq(std::size_t l, Index h) const { return mat(at(l).wq[static_cast<std::size_t>(h)], layout->c, layout->c); }
  M wk(std::size_t l, Index h) const { return mat(at(l).wk[static_cast<std::size_t>(h)], layout->c, layout->c); }
  M wv(std::size_t l, Index h) const { return mat(at(l).wv[static_cast<std::size_t>(h)], layout->c, layout->c); }
  M wu(std::size_t l) const { return mat(at(l).wu, layout->z * layout->c, layout->c); }
  V ln1_gain(std::size_t l) const { return vec(at(l).ln1_gain, layout->c); }
  V ln1_bias(std::size_t l) const { return vec(at(l).ln1_bias, layout->c); }
  M w1(std::size_t l) const { return mat(at(l).w1, layout->c, layout->h); }
  V b1(std::size_t l) const { return vec(at(l).b1, layout->h); }
  M w2(std::size_t l) const { return mat(at(l).w2, layout->h, layout->c); }
  V b2(std::size_t l) const { return vec(at(l).b2, layout->c); }
  V ln2_gain(std::size_t l) const { return vec(at(l).ln2_gain, layout->c); }
  V ln2_bias(std::size_t l) const { return vec(at(l).ln2_bias, layout->c); }
  M wc() const { return mat(layout->wc, layout->c, layout->m); }
  V bc() const { return vec(layout->bc, layout->m); }
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Sinusoidal table: column 2i holds sin(p / 10000^(2i/C)), column 2i+1 the
/// matching cosine, where p is the row index (SinusoidalIndex) or
/// t / T * time_reference_length (SinusoidalTime).
inline Mat positional_encoding(Index n, Index c, std::span<const double> timestamps, double duration,
                               PositionalEncoding mode, double time_reference_length) {
  Mat pe(n, c);
  for (Index r = 0; r < n; ++r) {
    double p = static_cast<double>(r);
    if (mode == PositionalEncoding::SinusoidalTime) {
      p = timestamps[static_cast<std::size_t>(r)] / duration * time_reference_length;
    }
    for (Index j = 0; j < c; ++j) {
      const Index pair = j / 2;
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(pair) / static_cast<double>(c));
      pe(r, j) = (j % 2 == 0) ? std::sin(p * freq) : std::cos(p * freq);
    }
  }
  return pe;
}

inline Mat positional_encode(const Mat& x, std::span<const double> timestamps, double duration, const ModelConfig& cfg) {
  return x + positional_encoding(x.rows(), x.cols(), timestamps, duration, cfg.pos_encoding, cfg.time_reference_length);
}

/// Row-wise numerically stable softmax.
inline Mat softmax_rows(const Mat& s) {
  Mat p(s.rows(), s.cols());
  for (Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    p.row(r) = (s.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

inline RowVec softmax(const RowVec& logits) {
  RowVec p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

struct AttentionCache {
  Mat q, k, v, probs;
};

/// Single head: softmax(Q K^T / sqrt(d)) V with Q = x W_Q etc. and d = C.
template <typename WQ, typename WK, typename WV>
Mat attention(const Mat& x, const WQ& wq, const WK& wk, const WV& wv, AttentionCache* cache = nullptr) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  Mat q = x * wq;
  Mat k = x * wk;
  Mat v = x * wv;
  Mat probs = softmax_rows((q * k.transpose()) * scale);
  Mat out = probs * v;
  if (cache) *cache = {std::move(q), std::move(k), std::move(v), std::move(probs)};
  return out;
}

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

template <typename G, typename B>
Mat layer_norm(const Mat& x, const G& gain, const B& bias, double eps, LayerNormCache* cache = nullptr) {
  const Index n = x.rows();
  Mat xhat(n, x.cols());
  Eigen::VectorXd inv_std(n);
  for (Index r = 0; r < n; ++r) {
    const double mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).eval();
    const double var = centered.square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (centered * inv_std(r)).matrix();
  }
  Mat y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  if (cache) *cache = {std::move(xhat), std::move(inv_std)};
  return y;
}

/// Backward through y = gain * xhat + bias; accumulates into dgain/dbias.
template <typename G, typename DG, typename DB>
Mat layer_norm_backward(const Mat& dy, const LayerNormCache& cache, const G& gain, DG&& dgain, DB&& dbias) {
  dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.array();
  Mat dx(dy.rows(), dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / static_cast<double>(dy.cols());
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

struct ClassifierOutput {
  RowVec pooled;                   // lambda, per-column max over time
  std::vector<Index> argmax_rows;  // row that supplied each pooled value
  RowVec probs;                    // softmax(lambda W_C + B_C)
};

/// Temporal max pooling followed by the linear-softmax head.
template <typename WC, typename BC>
ClassifierOutput classify(const Mat& a, const WC& wc, const BC& bc) {
  ClassifierOutput out;
  out.pooled.resize(a.cols());
  out.argmax_rows.resize(static_cast<std::size_t>(a.cols()));
  for (Index j = 0; j < a.cols(); ++j) {
    Index r = 0;
    out.pooled(j) = a.col(j).maxCoeff(&r);
    out.argmax_rows[static_cast<std::size_t>(j)] = r;
  }
  out.probs = softmax(out.pooled * wc + bc);
  return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct EncoderCache {
  Mat input;
  std::vector<AttentionCache> heads;
  Mat concat;  // [beta_1 ... beta_Z]
  LayerNormCache ln1;
  Mat hidden;  // output of LayerNorm1
  Mat ffn_pre;  // h W_1 + b_1
  Mat ffn_act;  // ReLU(ffn_pre)
  LayerNormCache ln2;
};

/// Activations of one forward pass, sufficient for exact backpropagation.
struct ForwardTrace {
  Index length = 0;
  std::vector<EncoderCache> layers;
  Mat features;  // A, output of the last encoder
  ClassifierOutput head;
};

class SrvModel {
 public:
  SrvModel() : SrvModel(ModelConfig{}) {}

  /// Seeded U(-s, s) weights, zero biases, unit LayerNorm gains.
  explicit SrvModel(ModelConfig cfg) : cfg_(std::move(cfg)), layout_((cfg_.validate(), cfg_)) {
    params_.assign(static_cast<std::size_t>(layout_.size), 0.0);
    Rng rng(cfg_.init_seed);
    const double s = cfg_.effective_init_scale();
    auto fill = [&](Index off, Index count) {
      for (Index i = 0; i < count; ++i) params_[static_cast<std::size_t>(off + i)] = s * (2.0 * unit_uniform(rng) - 1.0);
    };
    const Index c = layout_.c, z = layout_.z, h = layout_.h, m = layout_.m;
    for (auto& l : layout_.layers) {
      for (Index k = 0; k < z; ++k) {
        fill(l.wq[static_cast<std::size_t>(k)], c * c);
        fill(l.wk[static_cast<std::size_t>(k)], c * c);
        fill(l.wv[static_cast<std::size_t>(k)], c * c);
      }
      fill(l.wu, z * c * c);
      fill(l.w1, c * h);
      fill(l.w2, h * c);
      for (Index j = 0; j < c; ++j) {
        params_[static_cast<std::size_t>(l.ln1_gain + j)] = 1.0;
        params_[static_cast<std::size_t>(l.ln2_gain + j)] = 1.0;
      }
    }
    fill(layout_.wc, c * m);
  }

  SrvModel(ModelConfig cfg, std::vector<double> params) : cfg_(std::move(cfg)), layout_((cfg_.validate(), cfg_)) {
    require(params.size() == static_cast<std::size_t>(layout_.size), ErrorKind::DimensionMismatch, "srv_model.load",
            "expected " + std::to_string(layout_.size) + " parameters, got " + std::to_string(params.size()));
    params_ = std::move(params);
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  std::size_t num_parameters() const noexcept { return params_.size(); }
  Index num_classes() const noexcept { return cfg_.classes; }

  ParamView<double*> view() { return {params_.data(), &layout_}; }
  ParamView<const double*> view() const { return {params_.data(), &layout_}; }

  Eigen::VectorXd predict_proba(const CsiInstance& x) const;

 private:
  ModelConfig cfg_;
  ParameterLayout layout_;
  std::vector<double> params_;
};

/// One encoder layer. `cache` may be null for inference.
inline Mat encoder_forward(const SrvModel& model, std::size_t layer, const Mat& x, EncoderCache* cache = nullptr) {
  const auto p = model.view();
  const auto& cfg = model.config();
  const Index n = x.rows(), c = cfg.subcarriers, z = cfg.heads;

  Mat concat(n, z * c);
  std::vector<AttentionCache> heads(cache ? static_cast<std::size_t>(z) : 0);
  for (Index h = 0; h < z; ++h) {
    concat.middleCols(h * c, c) =
        attention(x, p.wq(layer, h), p.wk(layer, h), p.wv(layer, h), cache ? &heads[static_cast<std::size_t>(h)] : nullptr);
  }
  LayerNormCache ln1, ln2;
  const Mat residual = concat * p.wu(layer) + x;
  Mat hidden = layer_norm(residual, p.ln1_gain(layer), p.ln1_bias(layer), cfg.layer_norm_eps, cache ? &ln1 : nullptr);
  Mat ffn_pre = (hidden * p.w1(layer)).rowwise() + p.b1(layer);
  Mat ffn_act = ffn_pre.cwiseMax(0.0);
  Mat out = (ffn_act * p.w2(layer)).rowwise() + p.b2(layer);
  if (cfg.output_norm) {
    out = layer_norm(Mat(out + hidden), p.ln2_gain(layer), p.ln2_bias(layer), cfg.layer_norm_eps, cache ? &ln2 : nullptr);
  }
  if (cache) {
    cache->input = x;
    cache->heads = std::move(heads);
    cache->concat = std::move(concat);
    cache->ln1 = std::move(ln1);
    cache->hidden = std::move(hidden);
    cache->ffn_pre = std::move(ffn_pre);
    cache->ffn_act = std::move(ffn_act);
    cache->ln2 = std::move(ln2);
  }
  return out;
}

/// Full forward pass; returns the class distribution P. Works for any N >= 1.
inline RowVec forward(const SrvModel& model, const CsiInstance& instance, ForwardTrace* trace = nullptr) {
  constexpr std::string_view where = "srv_model.forward";
  const auto& cfg = model.config();
  require(instance.subcarriers() == cfg.subcarriers, ErrorKind::DimensionMismatch, where,
          "instance has " + std::to_string(instance.subcarriers()) + " subcarriers, model expects " +
              std::to_string(cfg.subcarriers));
  require(instance.rows() >= 1, ErrorKind::DimensionMismatch, where, "instance has no rows");
  require(static_cast<std::size_t>(instance.rows()) == instance.timestamps.size(), ErrorKind::DimensionMismatch, where,
          "row and timestamp counts differ");

  Mat x = positional_encode(instance.values.cast<double>(), instance.timestamps, instance.duration, cfg);
  if (trace) {
    trace->length = x.rows();
    trace->layers.assign(static_cast<std::size_t>(cfg.layers), {});
  }
  for (std::size_t l = 0; l < static_cast<std::size_t>(cfg.layers); ++l) {
    x = encoder_forward(model, l, x, trace ? &trace->layers[l] : nullptr);
  }
  const auto p = model.view();
  ClassifierOutput head = classify(x, p.wc(), p.bc());
  RowVec probs = head.probs;
  if (trace) {
    trace->features = std::move(x);
    trace->head = std::move(head);
  }
  return probs;
}

inline Eigen::VectorXd SrvModel::predict_proba(const CsiInstance& x) const { return forward(*this, x).transpose(); }

/// Backpropagates -log P[label] through `trace` and accumulates the
/// parameter gradient (unscaled) into `grad`.
inline void backward(const SrvModel& model, const ForwardTrace& trace, std::uint32_t label, std::span<double> grad) {
  const auto& cfg = model.config();
  const auto p = model.view();
  const ParamView<double*> g{grad.data(), &model.layout()};
  const Index c = cfg.subcarriers, z = cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));

  // Classifier.
  RowVec dlogits = trace.head.probs;
  dlogits(label) -= 1.0;
  g.wc().noalias() += trace.head.pooled.transpose() * dlogits;
  g.bc() += dlogits;
  const RowVec dpooled = dlogits * p.wc().transpose();
  Mat dx = Mat::Zero(trace.length, c);
  for (Index j = 0; j < c; ++j) dx(trace.head.argmax_rows[static_cast<std::size_t>(j)], j) += dpooled(j);

  for (std::size_t l = trace.layers.size(); l-- > 0;) {
    const EncoderCache& ec = trace.layers[l];
    Mat dhidden;
    Mat dffn_out;
    if (cfg.output_norm) {
      dffn_out = layer_norm_backward(dx, ec.ln2, p.ln2_gain(l), g.ln2_gain(l), g.ln2_bias(l));
      dhidden = dffn_out;
    } else {
      dffn_out = dx;
      dhidden = Mat::Zero(dx.rows(), dx.cols());
    }
    g.w2(l).noalias() += ec.ffn_act.transpose() * dffn_out;
    g.b2(l) += dffn_out.colwise().sum();
    Mat dpre = dffn_out * p.w2(l).transpose();
    dpre = dpre.cwiseProduct((ec.ffn_pre.array() > 0.0).cast<double>().matrix());
    g.w1(l).noalias() += ec.hidden.transpose() * dpre;
    g.b1(l) += dpre.colwise().sum();
    dhidden.noalias() += dpre * p.w1(l).transpose();

    const Mat dresidual = layer_norm_backward(dhidden, ec.ln1, p.ln1_gain(l), g.ln1_gain(l), g.ln1_bias(l));
    Mat dinput = dresidual;
    g.wu(l).noalias() += ec.concat.transpose() * dresidual;
    const Mat dconcat = dresidual * p.wu(l).transpose();
    for (Index h = 0; h < z; ++h) {
      const AttentionCache& ac = ec.heads[static_cast<std::size_t>(h)];
      const Mat dbeta = dconcat.middleCols(h * c, c);
      const Mat dprobs = dbeta * ac.v.transpose();
      const Mat dv = ac.probs.transpose() * dbeta;
      Mat dscores = ac.probs.cwiseProduct(dprobs);
      const Eigen::VectorXd rowdot = dscores.rowwise().sum();
      dscores -= (ac.probs.array().colwise() * rowdot.array()).matrix();
      dscores *= scale;
      const Mat dq = dscores * ac.k;
      const Mat dk = dscores.transpose() * ac.q;
      g.wq(l, h).noalias() += ec.input.transpose() * dq;
      g.wk(l, h).noalias() += ec.input.transpose() * dk;
      g.wv(l, h).noalias() += ec.input.transpose() * dv;
      dinput.noalias() += dq * p.wq(l, h).transpose();
      dinput.noalias() += dk * p.wk(l, h).transpose();
      dinput.noalias() += dv * p.wv(l, h).transpose();
    }
    dx = std::move(dinput);
  }
}

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean cross-entropy over the batch and its exact gradient. Batch members
/// may have different lengths.
inline LossAndGrad loss_and_grad(const SrvModel& model, std::span<const CsiInstance> batch) {
  constexpr std::string_view where = "srv_model.loss_and_grad";
  require(!batch.empty(), ErrorKind::DimensionMismatch, where, "empty batch");
  LossAndGrad out;
  out.grad.assign(model.num_parameters(), 0.0);
  ForwardTrace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i];
    require(x.label.has_value(), ErrorKind::UnlabeledInstance, where, "batch element " + std::to_string(i) + " has no label");
    require(static_cast<Index>(*x.label) < model.num_classes(), ErrorKind::DimensionMismatch, where,
            "label " + std::to_string(*x.label) + " out of range");
    const RowVec probs = forward(model, x, &trace);
    out.loss -= std::log(probs(*x.label));
    backward(model, trace, *x.label, out.grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& v : out.grad) v *= inv;
  return out;
}

/// Anything that maps an instance to a class distribution.
template <typename T>
concept ProbabilisticClassifier = requires(const T& m, const CsiInstance& x) {
  { m.predict_proba(x) } -> std::convertible_to<Eigen::VectorXd>;
  { m.num_classes() } -> std::convertible_to<Index>;
};

static_assert(ProbabilisticClassifier<SrvModel>);

}  // namespace srvnn
