// Copyright 2026 The simulst Authors
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

// VGG front-end, LSTM encoder and attention decoder. Each block exists as a
// tape-level function (used for training) and as a value-level wrapper that
// evaluates the same graph on a non-recording tape (used for inference), so
// both paths produce identical numbers.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "simulst/autodiff/kernels.hpp"
#include "simulst/autodiff/tape.hpp"
#include "simulst/nn/model.hpp"

namespace simulst::nn {

/// Per-layer hidden and cell vectors, each 1×H.
struct LstmState {
  std::vector<Tensor> h, c;

  static LstmState zeros(std::size_t layers, std::size_t hidden) {
    LstmState s;
    s.h.assign(layers, Tensor({1, hidden}));
    s.c.assign(layers, Tensor({1, hidden}));
    return s;
  }
  std::size_t layers() const { return h.size(); }
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

struct StateVars {
  std::vector<Var> h, c;

  static StateVars constants(ad::Tape& tape, const LstmState& s) {
    StateVars v;
    for (const Tensor& t : s.h) v.h.push_back(tape.constant(t));
    for (const Tensor& t : s.c) v.c.push_back(tape.constant(t));
    return v;
  }
  LstmState values() const {
    LstmState s;
    for (Var v : h) s.h.push_back(v.value());
    for (Var v : c) s.c.push_back(v.value());
    return s;
  }
};

// ---------------------------------------------------------------------------
// Graph-level blocks

/// Two VGG blocks (conv-relu-conv-relu-pool) over a T×D frame matrix,
/// flattened to one row per position: floor(floor(T/2)/2) × F.
inline Var vgg_graph(const Weights<Var>& w, const ModelConfig& cfg, Var frames) {
  const Tensor& fv = frames.value();
  if (fv.rank() != 2 || fv.dim(1) != cfg.feature_dim)
    throw ShapeError("vgg_forward: expected T x " + std::to_string(cfg.feature_dim) +
                     " frames, got " + ad::shape_str(fv.shape()));
  if (fv.dim(0) < 4)
    throw ContractError("vgg_forward: " + std::to_string(fv.dim(0)) +
                        " frames yield no output position (need at least 4; buffer more input)");
  Var x = ad::reshape(frames, {1, fv.dim(0), fv.dim(1)});
  for (const VggBlock<Var>& blk : w.vgg) {
    x = ad::relu(ad::conv2d(x, blk.conv_a, blk.bias_a));
    x = ad::relu(ad::conv2d(x, blk.conv_b, blk.bias_b));
    x = ad::maxpool2d(x);
  }
  return ad::time_major(x);
}

/// One LSTM cell update from a precomputed input projection (1×4H).
inline std::pair<Var, Var> lstm_cell(Var x_proj, Var h, Var c, const LstmWeights<Var>& w) {
  const std::size_t hidden = w.wh.shape()[0];
  Var z = ad::add(ad::add(x_proj, ad::matmul(h, w.wh)), w.b);
  Var s = ad::sigmoid(z);
  Var in = ad::cols(s, 0, hidden);
  Var forget = ad::cols(s, hidden, 2 * hidden);
  Var cand = ad::tanh(ad::cols(z, 2 * hidden, 3 * hidden));
  Var out = ad::cols(s, 3 * hidden, 4 * hidden);
  Var c_new = ad::add(ad::mul(forget, c), ad::mul(in, cand));
  Var h_new = ad::mul(out, ad::tanh(c_new));
  return {h_new, c_new};
}

inline std::pair<Var, Var> lstm_step_graph(Var x, Var h, Var c, const LstmWeights<Var>& w) {
  if (x.shape().size() != 2 || x.shape()[0] != 1 || x.shape()[1] != w.wx.shape()[0])
    throw ShapeError("lstm_step: input " + ad::shape_str(x.shape()) + " does not match weights " +
                     ad::shape_str(w.wx.shape()));
  if (h.shape() != ad::Shape{1, w.wh.shape()[0]} || c.shape() != h.shape())
    throw ShapeError("lstm_step: state " + ad::shape_str(h.shape()) + " does not match hidden " +
                     std::to_string(w.wh.shape()[0]));
  return lstm_cell(ad::matmul(x, w.wx), h, c, w);
}

namespace detail {

/// Runs one direction of one layer; returns per-position outputs in input order.
inline std::vector<Var> run_direction(Var proj, Var h, Var c, const LstmWeights<Var>& w, bool reverse,
                                      Var* h_out, Var* c_out) {
  const std::size_t p = proj.shape()[0];
  std::vector<Var> outs(p);
  for (std::size_t step = 0; step < p; ++step) {
    const std::size_t pos = reverse ? p - 1 - step : step;
    auto [hn, cn] = lstm_cell(ad::rows(proj, pos, pos + 1), h, c, w);
    h = hn;
    c = cn;
    outs[pos] = hn;
  }
  if (h_out != nullptr) *h_out = h;
  if (c_out != nullptr) *c_out = c;
  return outs;
}

}  // namespace detail

struct EncoderVars {
  Var outputs;      // P × H·directions
  StateVars final;  // forward-direction state after the last position
};

inline EncoderVars encoder_graph(ad::Tape& tape, const Weights<Var>& w, const ModelConfig& cfg,
                                 Var positions, const LstmState* init) {
  if (positions.shape().size() != 2 || positions.shape()[0] == 0)
    throw ContractError("encoder_forward: needs at least one position, got " +
                        ad::shape_str(positions.shape()));
  if (positions.shape()[1] != cfg.vgg_output_dim())
    throw ShapeError("encoder_forward: position width " + std::to_string(positions.shape()[1]) +
                     " does not match " + std::to_string(cfg.vgg_output_dim()));
  if (cfg.directions == 2 && init != nullptr)
    throw ContractError("encoder_forward: a bidirectional encoder cannot continue from a carried state");
  if (init != nullptr && init->layers() != cfg.encoder_layers)
    throw ShapeError("encoder_forward: carried state has " + std::to_string(init->layers()) +
                     " layers, model has " + std::to_string(cfg.encoder_layers));
  const LstmState zeros = LstmState::zeros(cfg.encoder_layers, cfg.hidden);
  const StateVars start = StateVars::constants(tape, init != nullptr ? *init : zeros);
  EncoderVars result;
  Var x = positions;
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    Var hf, cf;
    Var proj_f = ad::matmul(x, w.encoder[l][0].wx);
    std::vector<Var> fwd = detail::run_direction(proj_f, start.h[l], start.c[l], w.encoder[l][0],
                                                 false, &hf, &cf);
    result.final.h.push_back(hf);
    result.final.c.push_back(cf);
    Var fwd_out = ad::concat_rows(fwd);
    if (cfg.directions == 2) {
      Var proj_b = ad::matmul(x, w.encoder[l][1].wx);
      Var h0 = tape.constant(zeros.h[l]);
      Var c0 = tape.constant(zeros.c[l]);
      std::vector<Var> bwd = detail::run_direction(proj_b, h0, c0, w.encoder[l][1], true, nullptr, nullptr);
      x = ad::concat_cols({fwd_out, ad::concat_rows(bwd)});
    } else {
      x = fwd_out;
    }
  }
  result.outputs = x;
  return result;
}

struct DecodeVars {
  Var logits;     // 1 × V
  Var attention;  // 1 × P
};

/// One greedy/teacher-forced decoder step with additive attention. The query
/// is the top-layer decoder hidden state before this step's update.
inline DecodeVars decode_graph(const Weights<Var>& w, int prev_token, StateVars& state, Var enc,
                               Var keys) {
  const std::size_t p = enc.shape()[0];
  if (p == 0) throw ContractError("decode_step: no encoder positions available (read before writing)");
  const std::size_t vocab = w.embedding.shape()[0];
  if (prev_token < 0 || static_cast<std::size_t>(prev_token) >= vocab)
    throw ContractError("decode_step: token id " + std::to_string(prev_token) + " out of range");
  const std::size_t tok = static_cast<std::size_t>(prev_token);
  Var emb = ad::rows(w.embedding, tok, tok + 1);
  Var query = ad::matmul(state.h.back(), w.att_dec);
  query = ad::reshape(query, {query.shape()[1]});
  Var energy = ad::tanh(ad::add(keys, query));
  Var scores = ad::reshape(ad::matmul(energy, w.att_v), {1, p});
  Var alpha = ad::softmax(scores);
  Var context = ad::matmul(alpha, enc);
  Var input = ad::concat_cols({emb, context});
  for (std::size_t l = 0; l < state.h.size(); ++l) {
    auto [h, c] = lstm_step_graph(input, state.h[l], state.c[l], w.decoder[l]);
    state.h[l] = h;
    state.c[l] = c;
    input = h;
  }
  Var logits = ad::add(ad::matmul(ad::concat_cols({state.h.back(), context}), w.out_w), w.out_b);
  return {logits, alpha};
}

// ---------------------------------------------------------------------------
// Value-level wrappers

inline Tensor vgg_forward(const ModelParams& params, const Tensor& frames) {
  ad::Tape tape(false);
  const Weights<Var> w = bind(tape, params);
  return vgg_graph(w, params.config, tape.view(frames)).value();
}

/// Number of encoder positions produced from `frames` input frames.
constexpr std::size_t vgg_positions(std::size_t frames) { return (frames / 2) / 2; }

struct LstmStepResult {
  Tensor h, c;
};

inline LstmStepResult lstm_step(const Tensor& x, const Tensor& h, const Tensor& c,
                                const LstmWeights<Tensor>& weights) {
  ad::Tape tape(false);
  LstmWeights<Var> w{tape.view(weights.wx), tape.view(weights.wh), tape.view(weights.b)};
  auto [hn, cn] = lstm_step_graph(tape.view(x), tape.view(h), tape.view(c), w);
  return {hn.value(), cn.value()};
}

struct EncoderOutput {
  Tensor outputs;
  LstmState final;
};

inline EncoderOutput encoder_forward(const ModelParams& params, const Tensor& positions,
                                     const LstmState* init = nullptr) {
  ad::Tape tape(false);
  const Weights<Var> w = bind(tape, params);
  EncoderVars r = encoder_graph(tape, w, params.config, tape.view(positions), init);
  return {r.outputs.value(), r.final.values()};
}

/// Offline encoding of a whole frame matrix.
inline EncoderOutput encode_offline(const ModelParams& params, const Tensor& frames) {
  return encoder_forward(params, vgg_forward(params, frames));
}

/// Encoder outputs together with their projected attention keys. Keys of new
/// rows are computed row-wise, so extending equals recomputing from scratch.
class AttentionMemory {
 public:
  void reset(const ModelParams& params, Tensor values) {
    values_ = std::move(values);
    keys_ = project(params, values_);
  }

  void extend(const ModelParams& params, const Tensor& rows) {
    if (rows.rank() != 2 || rows.dim(0) == 0) return;
    if (values_.rank() == 0) {
      reset(params, rows);
      return;
    }
    values_.append_rows(rows);
    keys_.append_rows(project(params, rows));
  }

  void clear() {
    values_ = Tensor();
    keys_ = Tensor();
  }

  std::size_t positions() const { return values_.rank() == 2 ? values_.dim(0) : 0; }
  const Tensor& values() const { return values_; }
  const Tensor& keys() const { return keys_; }

 private:
  static Tensor project(const ModelParams& params, const Tensor& rows) {
    const Tensor& w = params.w.att_enc;
    if (rows.dim(1) != w.dim(0))
      throw ShapeError("attention memory: encoder width " + std::to_string(rows.dim(1)) +
                       " does not match " + std::to_string(w.dim(0)));
    Tensor k({rows.dim(0), w.dim(1)});
    ad::kernels::matmul(rows.data().data(), w.data().data(), k.data().data(), rows.dim(0),
                        rows.dim(1), w.dim(1));
    return k;
  }

  Tensor values_;
  Tensor keys_;
};

struct DecodeStepResult {
  Tensor logits;
  LstmState state;
  Tensor attention;
};

inline DecodeStepResult decode_step(const ModelParams& params, int prev_token, const LstmState& state,
                                    const AttentionMemory& memory) {
  if (memory.positions() == 0)
    throw ContractError("decode_step: no encoder positions available (read before writing)");
  ad::Tape tape(false);
  const Weights<Var> w = bind(tape, params);
  StateVars s = StateVars::constants(tape, state);
  DecodeVars r = decode_graph(w, prev_token, s, tape.view(memory.values()), tape.view(memory.keys()));
  return {r.logits.value(), s.values(), r.attention.value()};
}

}  // namespace simulst::nn
