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
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simulst/error.hpp"

namespace simulst::segmentation {

enum class Policy { kFixed, kOracleWords, kRandom };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::kFixed: return "fixed";
    case Policy::kOracleWords: return "oracle";
    case Policy::kRandom: return "random";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  if (s == "fixed") return Policy::kFixed;
  if (s == "oracle" || s == "oracle-words") return Policy::kOracleWords;
  if (s == "random") return Policy::kRandom;
  throw ConfigError("unknown segmentation policy '" + s + "' (expected fixed, oracle or random)");
}

/// Cumulative read boundaries for one utterance: read t covers frames
/// [boundaries[t-1], boundaries[t]), with boundaries[-1] = 0.
struct SegmentationPlan {
  std::string utterance_id;
  std::vector<std::size_t> boundaries;
  Policy policy = Policy::kFixed;
  std::string params;                 // e.g. "k=100,s=10"
  std::vector<std::string> warnings;  // non-fatal ingestion issues

  std::size_t total_frames() const { return boundaries.empty() ? 0 : boundaries.back(); }
  std::size_t reads() const { return boundaries.size(); }

  /// Frames consumed by read t (0-based).
  std::size_t segment_size(std::size_t t) const {
    return boundaries.at(t) - (t == 0 ? 0 : boundaries[t - 1]);
  }
  std::vector<std::size_t> segment_sizes() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < boundaries.size(); ++t) out.push_back(segment_size(t));
    return out;
  }

  /// Wait parameter implied by the plan: the first read.
  std::size_t wait() const { return boundaries.empty() ? 0 : boundaries.front(); }

  /// Throws unless boundaries are strictly increasing and end at `frames`.
  void validate(std::size_t frames) const {
    if (boundaries.empty()) throw ContractError("segmentation plan is empty");
    std::size_t prev = 0;
    for (std::size_t b : boundaries) {
      if (b <= prev) throw ContractError("segmentation boundaries must be strictly increasing");
      prev = b;
    }
    if (prev != frames)
      throw ContractError("segmentation plan ends at frame " + std::to_string(prev) +
                          " but the utterance has " + std::to_string(frames));
  }
};

struct WordSpan {
  std::string word;  // may be empty when ingested from a boundary file
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

using WordBoundaryTable = std::map<std::string, std::vector<WordSpan>>;

/// Wait for k frames, then read s frames at a time; the last read is clamped.
inline SegmentationPlan fixed_plan(std::size_t frames, std::size_t k, std::size_t s) {
  if (frames == 0) throw ContractError("fixed_plan: empty utterance");
  if (s == 0) throw ContractError("fixed_plan: stride must be at least 1");
  SegmentationPlan plan;
  plan.policy = Policy::kFixed;
  plan.params = "k=" + std::to_string(k) + ",s=" + std::to_string(s);
  std::size_t b = k == 0 ? s : k;
  while (b < frames) {
    plan.boundaries.push_back(b);
    b += s;
  }
  plan.boundaries.push_back(frames);
  return plan;
}

/// Reads whole words: first every word up to the one whose end reaches k,
/// then one word per read. Frames after the last word join the final read.
inline SegmentationPlan oracle_word_plan(std::size_t frames, const std::vector<WordSpan>& words,
                                         std::size_t k) {
  if (frames == 0) throw ContractError("oracle_word_plan: empty utterance");
  if (words.empty()) throw ContractError("oracle_word_plan: no word boundaries");
  SegmentationPlan plan;
  plan.policy = Policy::kOracleWords;
  plan.params = "k=" + std::to_string(k) + ",s=1word";
  std::size_t prev_end = 0;
  for (const WordSpan& w : words) {
    if (w.end <= w.start || w.start < prev_end)
      throw ContractError("oracle_word_plan: word spans must be non-empty, sorted and disjoint");
    if (w.start > prev_end)
      plan.warnings.push_back("gap of " + std::to_string(w.start - prev_end) + " frames before frame " +
                              std::to_string(w.start));
    prev_end = w.end;
  }
  if (prev_end > frames)
    throw ContractError("oracle_word_plan: word boundary " + std::to_string(prev_end) +
                        " beyond utterance length " + std::to_string(frames));
  if (prev_end < frames)
    plan.warnings.push_back(std::to_string(frames - prev_end) + " trailing frames after the last word");

  bool first = true;
  for (const WordSpan& w : words) {
    if (first && w.end < k && &w != &words.back()) continue;
    first = false;
    const std::size_t b = std::min(w.end, frames);
    if (plan.boundaries.empty() || b > plan.boundaries.back()) plan.boundaries.push_back(b);
  }
  plan.boundaries.back() = frames;
  if (plan.boundaries.size() >= 2 && plan.boundaries[plan.boundaries.size() - 2] == frames)
    plan.boundaries.pop_back();
  return plan;
}

struct RandomPlanOptions {
  /// Fold an adjusted last chunk smaller than `low` into the previous chunk.
  bool merge_short_tail = false;
};

/// Chunk sizes drawn uniformly from [low, high]; the last chunk is shortened
/// so the sizes sum to the utterance length.
inline SegmentationPlan random_plan(std::size_t frames, std::size_t low, std::size_t high,
                                    std::uint64_t seed, RandomPlanOptions options = {}) {
  if (frames == 0) throw ContractError("random_plan: empty utterance");
  if (low < 1 || low > high) throw ContractError("random_plan: need 1 <= low <= high");
  SegmentationPlan plan;
  plan.policy = Policy::kRandom;
  plan.params = "low=" + std::to_string(low) + ",high=" + std::to_string(high) +
                ",seed=" + std::to_string(seed);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(low, high);
  std::size_t total = 0;
  while (total < frames) {
    total += size(rng);
    plan.boundaries.push_back(std::min(total, frames));
  }
  if (options.merge_short_tail && plan.boundaries.size() >= 2 &&
      plan.segment_size(plan.boundaries.size() - 1) < low) {
    plan.boundaries.erase(plan.boundaries.end() - 2);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Boundary file: `<utt_id>\t<start>:<end>[,<start>:<end>]*` per line.

inline WordBoundaryTable parse_boundaries(std::istream& is, const std::string& source = "<stream>") {
  WordBoundaryTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError(source + ":" + std::to_string(lineno) + ": expected '<utt_id>\\t<spans>'");
    const std::string id = line.substr(0, tab);
    std::vector<WordSpan> spans;
    std::stringstream ss(line.substr(tab + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      try {
        if (colon == std::string::npos) throw std::invalid_argument(item);
        std::size_t used = 0;
        WordSpan w;
        w.start = std::stoul(item.substr(0, colon), &used);
        w.end = std::stoul(item.substr(colon + 1), &used);
        spans.push_back(w);
      } catch (const std::exception&) {
        throw IoError(source + ":" + std::to_string(lineno) + ": malformed span '" + item + "'");
      }
    }
    table[id] = std::move(spans);
  }
  return table;
}

inline WordBoundaryTable load_boundaries(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open boundary file: " + path);
  return parse_boundaries(is, path);
}

inline void write_boundaries(std::ostream& os, const std::string& id, const std::vector<WordSpan>& spans) {
  os << id << '\t';
  for (std::size_t i = 0; i < spans.size(); ++i)
    os << (i ? "," : "") << spans[i].start << ':' << spans[i].end;
  os << '\n';
}

}  // namespace simulst::segmentation
