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

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/autodiff/tape.hpp"
#include "simulst/autodiff/tensor.hpp"
#include "simulst/error.hpp"
#include "simulst/io/binary.hpp"

namespace simulst::nn {

using ad::Tensor;
using ad::Var;

/// Character vocabulary: three reserved ids followed by the task alphabet.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kFirstSymbol = 3;

  Vocabulary() = default;
  explicit Vocabulary(std::string symbols) : symbols_(std::move(symbols)) {
    ids_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      const auto c = static_cast<unsigned char>(symbols_[i]);
      if (ids_[c] != -1) throw ConfigError(std::string("duplicate vocabulary symbol '") + symbols_[i] + "'");
      ids_[c] = static_cast<int>(i) + kFirstSymbol;
    }
  }

  std::size_t size() const { return symbols_.size() + kFirstSymbol; }
  const std::string& symbols() const { return symbols_; }

  int id(char c) const {
    const int v = ids_[static_cast<unsigned char>(c)];
    if (v < 0) throw ContractError(std::string("symbol '") + c + "' not in vocabulary");
    return v;
  }
  char symbol(int id) const {
    if (id < kFirstSymbol || static_cast<std::size_t>(id) >= size())
      throw ContractError("token id " + std::to_string(id) + " is not a printable symbol");
    return symbols_[static_cast<std::size_t>(id - kFirstSymbol)];
  }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> out;
    out.reserve(text.size());
    for (char c : text) out.push_back(id(c));
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

 private:
  std::string symbols_;
  std::array<int, 256> ids_{};
};

struct ModelConfig {
  std::uint32_t feature_dim = 16;
  std::array<std::uint32_t, 2> vgg_channels{4, 8};
  std::uint32_t encoder_layers = 2;
  std::uint32_t directions = 1;  // 1: unidirectional, 2: bidirectional
  std::uint32_t hidden = 32;
  std::uint32_t attention_dim = 32;
  std::uint32_t embedding_dim = 16;
  std::string alphabet;

  /// Features per encoder position after two 2x pooling stages.
  std::size_t vgg_output_dim() const { return vgg_channels[1] * ((feature_dim / 2) / 2); }
  std::size_t encoder_output_dim() const { return hidden * directions; }

  void validate() const {
    if (encoder_layers < 1) throw ConfigError("encoder needs at least one layer");
    if (directions != 1 && directions != 2) throw ConfigError("directions must be 1 or 2");
    if (feature_dim < 4) throw ConfigError("feature_dim must be at least 4");
    if (hidden == 0 || attention_dim == 0 || embedding_dim == 0 || vgg_channels[0] == 0 ||
        vgg_channels[1] == 0)
      throw ConfigError("model dimensions must be positive");
    if (alphabet.empty()) throw ConfigError("model alphabet is empty");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <class T>
struct LstmWeights {
  T wx;  // in x 4H, gate order i, f, g, o
  T wh;  // H x 4H
  T b;   // 4H

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f(self.wx);
    f(self.wh);
    f(self.b);
  }
};

template <class T>
struct VggBlock {
  T conv_a, bias_a, conv_b, bias_b;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f(self.conv_a);
    f(self.bias_a);
    f(self.conv_b);
    f(self.bias_b);
  }
};

/// Every learnable tensor of the model. Instantiated with Tensor for storage
/// and with Var for a binding onto a tape.
template <class T>
struct Weights {
  std::array<VggBlock<T>, 2> vgg;
  std::vector<std::vector<LstmWeights<T>>> encoder;  // [layer][direction]
  std::array<LstmWeights<T>, 2> decoder;
  T att_enc;    // E_enc x A
  T att_dec;    // H x A
  T att_v;      // A x 1
  T embedding;  // V x emb
  T out_w;      // (H + E_enc) x V
  T out_b;      // V

  /// Visits members in declaration order (the checkpoint order).
  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    for (auto& blk : self.vgg) VggBlock<T>::visit(blk, f);
    for (auto& layer : self.encoder)
      for (auto& dir : layer) LstmWeights<T>::visit(dir, f);
    for (auto& layer : self.decoder) LstmWeights<T>::visit(layer, f);
    f(self.att_enc);
    f(self.att_dec);
    f(self.att_v);
    f(self.embedding);
    f(self.out_w);
    f(self.out_b);
  }
};

struct ModelParams {
  ModelConfig config;
  Vocabulary vocab;
  Weights<Tensor> w;

  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    Weights<Tensor>::visit(w, [&](Tensor& t) { out.push_back(&t); });
    return out;
  }
  std::vector<const Tensor*> tensors() const {
    std::vector<const Tensor*> out;
    Weights<Tensor>::visit(w, [&](const Tensor& t) { out.push_back(&t); });
    return out;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->size();
    return n;
  }
};

namespace detail {

inline LstmWeights<Tensor> lstm_shape(std::size_t in, std::size_t hidden) {
  return {Tensor({in, 4 * hidden}), Tensor({hidden, 4 * hidden}), Tensor({4 * hidden})};
}

}  // namespace detail

/// Allocates zero-valued weights with the shapes implied by the config.
inline ModelParams make_zero_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  p.vocab = Vocabulary(cfg.alphabet);
  const std::size_t c1 = cfg.vgg_channels[0], c2 = cfg.vgg_channels[1];
  p.w.vgg[0] = {Tensor({c1, 1, 3, 3}), Tensor({c1}), Tensor({c1, c1, 3, 3}), Tensor({c1})};
  p.w.vgg[1] = {Tensor({c2, c1, 3, 3}), Tensor({c2}), Tensor({c2, c2, 3, 3}), Tensor({c2})};
  const std::size_t h = cfg.hidden;
  p.w.encoder.resize(cfg.encoder_layers);
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? cfg.vgg_output_dim() : cfg.encoder_output_dim();
    for (std::size_t d = 0; d < cfg.directions; ++d) p.w.encoder[l].push_back(detail::lstm_shape(in, h));
  }
  const std::size_t enc = cfg.encoder_output_dim();
  p.w.decoder[0] = detail::lstm_shape(cfg.embedding_dim + enc, h);
  p.w.decoder[1] = detail::lstm_shape(h, h);
  p.w.att_enc = Tensor({enc, cfg.attention_dim});
  p.w.att_dec = Tensor({h, cfg.attention_dim});
  p.w.att_v = Tensor({cfg.attention_dim, 1});
  const std::size_t v = p.vocab.size();
  p.w.embedding = Tensor({v, cfg.embedding_dim});
  p.w.out_w = Tensor({h + enc, v});
  p.w.out_b = Tensor({v});
  return p;
}

/// Uniform(-0.1, 0.1) recurrent/attention/output weights, He-uniform conv
/// kernels, zero biases, forget-gate biases set to +1.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = make_zero_params(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  auto fill = [&](Tensor& t) {
    for (float& x : t.data()) x = u(rng);
  };
  auto lstm = [&](LstmWeights<Tensor>& l) {
    fill(l.wx);
    fill(l.wh);
    const std::size_t hidden = l.wh.dim(0);
    for (std::size_t i = hidden; i < 2 * hidden; ++i) l.b[i] = 1.0f;
  };
  // Conv kernels: He-uniform. Four stacked 3x3 convs under +-0.1 shrink the
  // signal by two orders of magnitude and attention never leaves uniform.
  auto fill_conv = [&](Tensor& t) {
    const float fan_in = static_cast<float>(t.dim(1) * t.dim(2) * t.dim(3));
    std::uniform_real_distribution<float> he(-std::sqrt(6.0f / fan_in), std::sqrt(6.0f / fan_in));
    for (float& x : t.data()) x = he(rng);
  };
  for (auto& blk : p.w.vgg) {
    fill_conv(blk.conv_a);
    fill_conv(blk.conv_b);
  }
  for (auto& layer : p.w.encoder)
    for (auto& dir : layer) lstm(dir);
  for (auto& layer : p.w.decoder) lstm(layer);
  fill(p.w.att_enc);
  fill(p.w.att_dec);
  fill(p.w.att_v);
  fill(p.w.embedding);
  fill(p.w.out_w);
  return p;
}

/// Weights bound onto a tape: trainable leaves when the tape records,
/// otherwise zero-copy views.
inline Weights<Var> bind(ad::Tape& tape, const ModelParams& params) {
  Weights<Var> out;
  out.encoder.resize(params.w.encoder.size());
  for (std::size_t l = 0; l < out.encoder.size(); ++l) out.encoder[l].resize(params.w.encoder[l].size());
  std::vector<Var*> slots;
  Weights<Var>::visit(out, [&](Var& v) { slots.push_back(&v); });
  std::size_t i = 0;
  Weights<Tensor>::visit(params.w, [&](const Tensor& t) {
    *slots[i++] = tape.recording() ? tape.parameter(t) : tape.view(t);
  });
  return out;
}

inline std::vector<Var> flatten(const Weights<Var>& w) {
  std::vector<Var> out;
  Weights<Var>::visit(w, [&](const Var& v) { out.push_back(v); });
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: magic, version, config block, alphabet, then every tensor in
// declaration order as little-endian f32 with no per-tensor header.

inline constexpr std::string_view kCheckpointMagic = "SIMSTCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelParams& p, std::ostream& os) {
  os.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  io::write_u32(os, kCheckpointVersion);
  const ModelConfig& c = p.config;
  for (std::uint32_t v : {c.feature_dim, c.vgg_channels[0], c.vgg_channels[1], c.encoder_layers,
                          c.directions, c.hidden, c.attention_dim, c.embedding_dim})
    io::write_u32(os, v);
  io::write_string(os, c.alphabet);
  for (const Tensor* t : p.tensors()) io::write_f32s(os, t->data());
}

inline void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  save_checkpoint(p, os);
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

inline ModelParams load_checkpoint(std::istream& is) {
  std::string magic(kCheckpointMagic.size(), '\0');
  io::read_exact(is, magic.data(), magic.size(), "checkpoint magic");
  if (magic != kCheckpointMagic) throw IoError("not a model checkpoint (bad magic)");
  const std::uint32_t version = io::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig c;
  c.feature_dim = io::read_u32(is, "feature_dim");
  c.vgg_channels[0] = io::read_u32(is, "vgg channels");
  c.vgg_channels[1] = io::read_u32(is, "vgg channels");
  c.encoder_layers = io::read_u32(is, "encoder layers");
  c.directions = io::read_u32(is, "directions");
  c.hidden = io::read_u32(is, "hidden");
  c.attention_dim = io::read_u32(is, "attention dim");
  c.embedding_dim = io::read_u32(is, "embedding dim");
  c.alphabet = io::read_string(is, "alphabet", 256);
  ModelParams p = make_zero_params(c);
  for (Tensor* t : p.tensors()) io::read_f32s(is, t->data(), "checkpoint tensors");
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after checkpoint tensors");
  return p;
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  try {
    return load_checkpoint(is);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace simulst::nn
