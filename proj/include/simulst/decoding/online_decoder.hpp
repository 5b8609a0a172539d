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

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "simulst/encoding/encoder_stream.hpp"
#include "simulst/error.hpp"
#include "simulst/nn/layers.hpp"
#include "simulst/nn/model.hpp"
#include "simulst/segmentation/plan.hpp"

namespace simulst::decoding {

using ad::Tensor;

struct DecodePolicy {
  std::size_t max_tokens_per_write = 1;  // N
  double max_target_factor = 3.0;
  std::size_t max_target_extra = 10;
  double frame_ms = 10.0;

  /// Hypothesis length cap for `positions` encoder positions.
  std::size_t length_cap(std::size_t positions) const {
    return static_cast<std::size_t>(std::ceil(max_target_factor * static_cast<double>(positions))) +
           max_target_extra;
  }
};

enum class EventKind { kRead, kWrite };

struct TraceEvent {
  EventKind kind = EventKind::kRead;
  std::size_t frames = 0;  // READ: frames added by this read
  char token = 0;          // WRITE: emitted symbol
  std::size_t g = 0;       // frames read so far
  double ms = 0.0;         // g in milliseconds
};

struct DecodeTrace {
  std::string utterance_id;
  std::string strategy;
  std::vector<TraceEvent> events;
  std::string hypothesis;
  std::vector<std::size_t> delays;  // d_i in frames, one per hypothesis symbol
  std::size_t total_frames = 0;
  double frame_ms = 10.0;
  bool truncated = false;
  std::size_t eos_suppressed = 0;
  encoding::EncodeCost cost;
  std::uint64_t wall_ns = 0;  // whole simulate() call

  std::vector<double> delays_ms() const {
    std::vector<double> out;
    out.reserve(delays.size());
    for (std::size_t d : delays) out.push_back(static_cast<double>(d) * frame_ms);
    return out;
  }
  double source_ms() const { return static_cast<double>(total_frames) * frame_ms; }
};

namespace detail {

/// Greedy choice over printable symbols and EOS; ties go to the lower id.
inline int greedy_token(const Tensor& logits) {
  int best = nn::Vocabulary::kEos;
  float best_v = logits[static_cast<std::size_t>(best)];
  for (std::size_t i = nn::Vocabulary::kFirstSymbol; i < logits.size(); ++i) {
    if (logits[i] > best_v) {
      best_v = logits[i];
      best = static_cast<int>(i);
    }
  }
  return best;
}

/// Autoregressive greedy decoder over a (possibly growing) attention memory.
class GreedyWriter {
 public:
  GreedyWriter(const nn::ModelParams& params, const DecodePolicy& policy)
      : params_(&params),
        policy_(&policy),
        state_(nn::LstmState::zeros(2, params.config.hidden)) {}

  enum class Stop { kBudget, kEos, kCap, kNoInput };

  /// Emits up to `budget` symbols. EOS ends the hypothesis only when
  /// `allow_eos`; otherwise it is dropped and the decoder state is untouched.
  Stop write(const nn::AttentionMemory& memory, std::size_t budget, bool allow_eos, std::size_t g,
             DecodeTrace& trace) {
    for (std::size_t n = 0; n < budget; ++n) {
      if (memory.positions() == 0) return Stop::kNoInput;
      if (trace.hypothesis.size() >= policy_->length_cap(memory.positions())) {
        trace.truncated = true;
        return Stop::kCap;
      }
      nn::DecodeStepResult step = nn::decode_step(*params_, prev_, state_, memory);
      const int tok = greedy_token(step.logits);
      if (tok == nn::Vocabulary::kEos) {
        if (allow_eos) return Stop::kEos;
        ++trace.eos_suppressed;
        return Stop::kEos;
      }
      state_ = std::move(step.state);
      prev_ = tok;
      const char sym = params_->vocab.symbol(tok);
      trace.hypothesis.push_back(sym);
      trace.delays.push_back(g);
      trace.events.push_back({EventKind::kWrite, 0, sym, g, static_cast<double>(g) * policy_->frame_ms});
    }
    return Stop::kBudget;
  }

 private:
  const nn::ModelParams* params_;
  const DecodePolicy* policy_;
  nn::LstmState state_;
  int prev_ = nn::Vocabulary::kBos;
};

}  // namespace detail

/// Runs the adaptive wait-k read/write loop over one utterance.
inline DecodeTrace simulate(const Tensor& utterance, const segmentation::SegmentationPlan& plan,
                            const DecodePolicy& policy, const nn::ModelParams& model,
                            encoding::Strategy strategy, encoding::StreamOptions stream_options = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (utterance.rank() != 2 || utterance.dim(1) != model.config.feature_dim)
    throw ConfigError("simulate: utterance features " + ad::shape_str(utterance.shape()) +
                      " do not match model feature dim " + std::to_string(model.config.feature_dim));
  if (policy.max_tokens_per_write < 1) throw ConfigError("simulate: N must be at least 1");
  plan.validate(utterance.dim(0));

  DecodeTrace trace;
  trace.utterance_id = plan.utterance_id;
  trace.strategy = std::string(encoding::to_string(strategy));
  trace.total_frames = utterance.dim(0);
  trace.frame_ms = policy.frame_ms;

  encoding::EncoderStream stream(model, strategy, stream_options);
  nn::AttentionMemory memory;
  detail::GreedyWriter writer(model, policy);
  std::size_t prev_b = 0;
  for (std::size_t t = 0; t < plan.reads(); ++t) {
    const std::size_t b = plan.boundaries[t];
    const bool last = t + 1 == plan.reads();
    const std::size_t before = stream.positions();
    const encoding::FeedResult fr = stream.feed(utterance.rows(prev_b, b), last);
    if (fr.replaced) {
      memory.reset(model, stream.outputs());
    } else if (stream.positions() > before) {
      memory.extend(model, stream.outputs().rows(before, stream.positions()));
    }
    trace.events.push_back({EventKind::kRead, b - prev_b, 0, b, static_cast<double>(b) * policy.frame_ms});
    prev_b = b;
    if (!last) {
      writer.write(memory, policy.max_tokens_per_write, false, b, trace);
      continue;
    }
    if (memory.positions() == 0)
      throw ContractError("simulate: utterance of " + std::to_string(b) +
                          " frames produced no encoder output (need at least 4 frames)");
    while (writer.write(memory, policy.max_tokens_per_write, true, b, trace) ==
           detail::GreedyWriter::Stop::kBudget) {
    }
  }
  trace.cost = stream.cost();
  trace.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
  return trace;
}

struct OfflineResult {
  std::string hypothesis;
  bool truncated = false;
};

/// Full encode, then greedy decoding to EOS or the length cap.
inline OfflineResult offline_translate(const Tensor& utterance, const nn::ModelParams& model,
                                       const DecodePolicy& policy = {}) {
  if (utterance.rank() != 2 || nn::vgg_positions(utterance.dim(0)) == 0)
    throw ContractError("offline_translate: utterance too short to produce encoder output");
  nn::AttentionMemory memory;
  memory.reset(model, nn::encode_offline(model, utterance).outputs);
  DecodeTrace scratch;
  detail::GreedyWriter writer(model, policy);
  while (writer.write(memory, 1, true, utterance.dim(0), scratch) == detail::GreedyWriter::Stop::kBudget) {
  }
  return {scratch.hypothesis, scratch.truncated};
}

}  // namespace simulst::decoding
