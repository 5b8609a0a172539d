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

#include <algorithm>
#include <random>

#include "gradcheck.hpp"
#include "simulst/encoding/encoder_stream.hpp"
#include "simulst/nn/model.hpp"

namespace simulst::testing {

/// Randomly initialized model over the synthetic vocabulary.
inline nn::ModelParams random_model(std::uint32_t directions, std::uint64_t seed = 1) {
  nn::ModelConfig c;
  c.alphabet = "abcdefghijklmnopqrst ";
  c.directions = directions;
  return nn::init_params(c, seed);
}

/// T × 16 uniform noise frames.
inline Tensor random_frames(std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({t, 16}, rng, -2.0f, 2.0f);
}

/// Feeds k frames, then s at a time; returns the stream after the last feed.
inline encoding::EncoderStream run_fixed(const nn::ModelParams& p, encoding::Strategy st, const Tensor& x,
                                         std::size_t k, std::size_t s, encoding::StreamOptions opt = {}) {
  encoding::EncoderStream stream(p, st, opt);
  std::size_t g = 0, next = std::min(k, x.dim(0));
  while (true) {
    const bool last = next >= x.dim(0);
    stream.feed(x.rows(g, next), last);
    if (last) break;
    g = next;
    next = std::min(next + s, x.dim(0));
  }
  return stream;
}

}  // namespace simulst::testing
