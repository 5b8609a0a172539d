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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/error.hpp"

namespace simulst::metrics {

/// Token granularity used for delays and the reference length.
enum class LatencyUnit { kWord, kChar };

inline LatencyUnit parse_latency_unit(const std::string& s) {
  if (s == "word" || s == "words") return LatencyUnit::kWord;
  if (s == "char" || s == "chars") return LatencyUnit::kChar;
  throw ConfigError("unknown latency unit '" + s + "' (expected word or char)");
}

/// Adaptive Average Lagging:
///   AL = 1/tau * sum_{i=1..tau} (d_i - (i-1) * T / |y*|)
/// with tau the first i whose delay reaches the source duration T, or the
/// hypothesis length when none does. Can be negative.
inline double average_lagging(std::span<const double> delays_ms, double source_ms,
                              std::size_t reference_len) {
  if (delays_ms.empty()) throw ContractError("average_lagging: no emitted tokens");
  if (reference_len == 0) throw ContractError("average_lagging: empty reference");
  const double rate = source_ms / static_cast<double>(reference_len);
  std::size_t tau = delays_ms.size();
  for (std::size_t i = 0; i < delays_ms.size(); ++i) {
    if (delays_ms[i] >= source_ms) {
      tau = i + 1;
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tau; ++i) sum += delays_ms[i] - static_cast<double>(i) * rate;
  return sum / static_cast<double>(tau);
}

/// Per-word delays from per-character delays: a word is emitted when its last
/// character is.
inline std::vector<double> word_delays(std::string_view hypothesis, std::span<const double> char_delays) {
  if (hypothesis.size() != char_delays.size())
    throw ContractError("word_delays: hypothesis and delay counts differ");
  std::vector<double> out;
  for (std::size_t i = 0; i < hypothesis.size(); ++i) {
    const bool word_end = hypothesis[i] != ' ' && (i + 1 == hypothesis.size() || hypothesis[i + 1] == ' ');
    if (word_end) out.push_back(char_delays[i]);
  }
  return out;
}

inline std::size_t reference_length(std::string_view reference, LatencyUnit unit) {
  if (unit == LatencyUnit::kChar) return reference.size();
  std::size_t n = 0;
  bool in_word = false;
  for (char c : reference) {
    const bool space = c == ' ' || c == '\t';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

/// AL of one decoded utterance at the requested granularity. An empty
/// hypothesis lags by the whole source duration.
inline double utterance_lagging(std::string_view hypothesis, std::span<const double> char_delays_ms,
                                double source_ms, std::string_view reference, LatencyUnit unit) {
  const std::size_t ref_len = reference_length(reference, unit);
  std::vector<double> delays = unit == LatencyUnit::kWord
                                   ? word_delays(hypothesis, char_delays_ms)
                                   : std::vector<double>(char_delays_ms.begin(), char_delays_ms.end());
  if (delays.empty()) return source_ms;
  return average_lagging(delays, source_ms, ref_len);
}

}  // namespace simulst::metrics
