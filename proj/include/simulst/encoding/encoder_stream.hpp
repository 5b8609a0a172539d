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
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/error.hpp"
#include "simulst/nn/layers.hpp"
#include "simulst/nn/model.hpp"

namespace simulst::encoding {

using ad::Tensor;

/// How the encoder reacts to newly read frames.
enum class Strategy {
  kBlstmReencode,  // bidirectional encoder over the whole prefix after every read
  kUlstmReencode,  // unidirectional encoder over the whole prefix after every read
  kUlstmOverlap,   // new chunk plus overlap; trailing VGG positions discarded
};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kBlstmReencode: return "blstm-reencode";
    case Strategy::kUlstmReencode: return "ulstm-reencode";
    case Strategy::kUlstmOverlap: return "ulstm-overlap";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "blstm-reencode" || name == "blstm") return Strategy::kBlstmReencode;
  if (name == "ulstm-reencode") return Strategy::kUlstmReencode;
  if (name == "ulstm-overlap") return Strategy::kUlstmOverlap;
  throw ConfigError("unknown encoding strategy '" + std::string(name) +
                    "' (expected blstm-reencode, ulstm-reencode or ulstm-overlap)");
}

inline std::uint32_t required_directions(Strategy s) { return s == Strategy::kBlstmReencode ? 2 : 1; }

/// round(num / den) with halves rounded up.
constexpr std::size_t round_half_up(std::size_t num, std::size_t den) {
  return (2 * num + den) / (2 * den);
}

/// Frames of past input re-read by the chunk after step `t` (1-based).
constexpr std::size_t overlap_schedule(std::size_t t, std::size_t k, std::size_t s) {
  return t <= 1 ? round_half_up(k, 2) : round_half_up(s, 2);
}

struct EncodeCost {
  std::uint64_t frames_processed_total = 0;
  std::uint64_t chunks = 0;
  std::uint64_t wall_clock_ns = 0;
};

/// Bookkeeping for one encoder invocation.
struct ChunkRecord {
  std::size_t begin_frame = 0;    // first frame fed to the VGG front-end
  std::size_t end_frame = 0;      // one past the last frame
  std::size_t overlap = 0;        // frames the next chunk re-reads
  std::size_t vgg_positions = 0;  // positions produced by the front-end
  std::size_t kept_positions = 0; // positions passed to the recurrent encoder
};

struct StreamOptions {
  /// With false, the overlap strategy encodes independent chunks (overlap 0,
  /// nothing discarded). Kept as an ablation baseline.
  bool compensate = true;
};

struct FeedResult {
  std::size_t new_positions = 0;  // rows appended (overlap) or total rows (re-encode)
  bool replaced = false;          // all previous outputs were superseded
};

/// Incremental encoder state for one utterance.
class EncoderStream {
 public:
  EncoderStream(const nn::ModelParams& params, Strategy strategy, StreamOptions options = {})
      : params_(&params), strategy_(strategy), options_(options) {
    if (params.config.directions != required_directions(strategy))
      throw ConfigError(std::string(to_string(strategy)) + " needs a model with " +
                        std::to_string(required_directions(strategy)) + " encoder direction(s), checkpoint has " +
                        std::to_string(params.config.directions));
    buffer_ = Tensor({0, params.config.feature_dim});
    outputs_ = Tensor({0, params.config.encoder_output_dim()});
    state_ = nn::LstmState::zeros(params.config.encoder_layers, params.config.hidden);
  }

  FeedResult feed(const Tensor& new_frames, bool is_last) {
    if (finished_) throw StreamClosedError("feed() after the final chunk of the utterance");
    const bool has_frames = new_frames.rank() == 2 && new_frames.dim(0) > 0;
    if (!has_frames && !is_last) throw ContractError("feed(): empty read before the end of input");
    if (has_frames && new_frames.dim(1) != params_->config.feature_dim)
      throw ShapeError("feed(): frames have " + std::to_string(new_frames.dim(1)) +
                       " features, model expects " + std::to_string(params_->config.feature_dim));
    const auto start = std::chrono::steady_clock::now();
    ++feeds_;
    if (has_frames) buffer_.append_rows(new_frames);
    FeedResult result = strategy_ == Strategy::kUlstmOverlap ? feed_overlap(is_last) : feed_reencode();
    if (is_last) finished_ = true;
    cost_.wall_clock_ns += static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
    return result;
  }

  Strategy strategy() const { return strategy_; }
  const Tensor& outputs() const { return outputs_; }
  std::size_t positions() const { return outputs_.dim(0); }
  std::size_t frames_read() const { return buffer_.dim(0); }
  std::size_t offset() const { return offset_; }
  bool finished() const { return finished_; }
  const nn::LstmState& carried_state() const { return state_; }
  const std::vector<ChunkRecord>& chunks() const { return chunks_; }

  EncodeCost cost() const {
    if (feeds_ == 0) throw ContractError("cost(): the stream has not consumed any input");
    return cost_;
  }

 private:
  FeedResult feed_reencode() {
    const std::size_t g = buffer_.dim(0);
    if (nn::vgg_positions(g) == 0) return {};
    nn::EncoderOutput enc = nn::encode_offline(*params_, buffer_);
    outputs_ = std::move(enc.outputs);
    const std::uint64_t passes = strategy_ == Strategy::kBlstmReencode ? 2 : 1;
    cost_.frames_processed_total += passes * g;
    ++cost_.chunks;
    chunks_.push_back({0, g, 0, nn::vgg_positions(g), nn::vgg_positions(g)});
    return {outputs_.dim(0), true};
  }

  // One iteration of the overlap-and-compensate loop. The next chunk starts
  // at (end of this chunk) - overlap, i.e. the offset is taken before the
  // read cursor advances.
  FeedResult feed_overlap(bool is_last) {
    const std::size_t g = buffer_.dim(0);
    const std::size_t read = g - encoded_until_;
    const std::size_t len = g - offset_;
    if (nn::vgg_positions(len) == 0) return {};  // too short for the front-end; wait for more
    std::size_t overlap = 0;
    if (options_.compensate && !is_last) overlap = round_half_up(read, 2);
    const Tensor hv = nn::vgg_forward(*params_, buffer_.rows(offset_, g));
    const std::size_t produced = hv.dim(0);
    const std::size_t discard = is_last ? 0 : round_half_up(overlap, 4);
    const std::size_t keep = produced > discard ? produced - discard : 0;
    if (keep > 0) {
      nn::EncoderOutput enc = nn::encoder_forward(*params_, hv.rows(0, keep), &state_);
      outputs_.append_rows(enc.outputs);
      state_ = std::move(enc.final);
    }
    cost_.frames_processed_total += len;
    ++cost_.chunks;
    chunks_.push_back({offset_, g, overlap, produced, keep});
    encoded_until_ = g;
    offset_ = g - overlap;
    return {keep, false};
  }

  const nn::ModelParams* params_;
  Strategy strategy_;
  StreamOptions options_;
  Tensor buffer_;
  Tensor outputs_;
  nn::LstmState state_;
  std::size_t offset_ = 0;
  std::size_t encoded_until_ = 0;
  std::size_t feeds_ = 0;
  bool finished_ = false;
  EncodeCost cost_;
  std::vector<ChunkRecord> chunks_;
};

}  // namespace simulst::encoding
