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
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simulst/error.hpp"

namespace simulst::metrics {

/// Word alignment of one source/target pair. Pairs are 1-based
/// (source index, target index); files use 0-based "i-j".
struct AlignmentSet {
  std::string utterance_id;
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  void validate() const {
    for (auto [i, t] : pairs)
      if (i < 1 || i > source_len || t < 1 || t > target_len)
        throw ContractError("alignment pair (" + std::to_string(i) + "," + std::to_string(t) +
                            ") out of bounds for |x|=" + std::to_string(source_len) +
                            ", |y|=" + std::to_string(target_len) + " in '" + utterance_id + "'");
  }
};

struct DifficultyScore {
  std::string utterance_id;
  double ld = 0.0;   // source tokens
  std::size_t tau = 1;
};

/// Parses one fast-align line ("0-0 1-2 ...") into 1-based pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> parse_fast_align(const std::string& line) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::istringstream ss(line);
  std::string item;
  while (ss >> item) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) throw std::invalid_argument(item);
      pairs.emplace_back(std::stoul(item.substr(0, dash)) + 1, std::stoul(item.substr(dash + 1)) + 1);
    } catch (const std::exception&) {
      throw IoError("malformed alignment pair '" + item + "'");
    }
  }
  return pairs;
}

inline std::string format_fast_align(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::string out;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    if (n) out.push_back(' ');
    out += std::to_string(pairs[n].first - 1) + "-" + std::to_string(pairs[n].second - 1);
  }
  return out;
}

/// One vector of 1-based pairs per line.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> load_alignments(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open alignment file: " + path);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    try {
      out.push_back(parse_fast_align(line));
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// z_1..z_|y|: running maximum of the source positions aligned with target
/// positions up to t (z_0 = 0, unaligned targets inherit).
inline std::vector<std::size_t> lagging_z(const AlignmentSet& a) {
  std::vector<std::size_t> max_src(a.target_len + 1, 0);
  for (auto [i, t] : a.pairs) max_src[t] = std::max(max_src[t], i);
  std::vector<std::size_t> z(a.target_len);
  std::size_t run = 0;
  for (std::size_t t = 1; t <= a.target_len; ++t) {
    run = std::max(run, max_src[t]);
    z[t - 1] = run;
  }
  return z;
}

/// LD = 1/tau * sum_{t=1..tau} (z_t - |x|/|y| * (t-1)), tau = first t with
/// z_t = |x| (|y| if the last source word is never aligned).
inline DifficultyScore lagging_difficulty(const AlignmentSet& a) {
  if (a.pairs.empty()) throw ContractError("lagging_difficulty: no aligned pair in '" + a.utterance_id + "'");
  a.validate();
  const std::vector<std::size_t> z = lagging_z(a);
  std::size_t tau = a.target_len;
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (z[t] == a.source_len) {
      tau = t + 1;
      break;
    }
  }
  const double ratio = static_cast<double>(a.source_len) / static_cast<double>(a.target_len);
  double sum = 0.0;
  for (std::size_t t = 1; t <= tau; ++t)
    sum += static_cast<double>(z[t - 1]) - ratio * static_cast<double>(t - 1);
  return {a.utterance_id, sum / static_cast<double>(tau), tau};
}

struct Subsets {
  std::vector<std::string> hardest;  // LD descending
  std::vector<std::string> easiest;  // LD ascending
};

/// The n highest- and n lowest-LD utterances; ties ordered by utterance id.
inline Subsets extract_subsets(std::vector<DifficultyScore> scores, std::size_t n) {
  if (n > scores.size())
    throw ContractError("extract_subsets: n=" + std::to_string(n) + " exceeds corpus size " +
                        std::to_string(scores.size()));
  Subsets out;
  std::sort(scores.begin(), scores.end(), [](const DifficultyScore& a, const DifficultyScore& b) {
    return a.ld != b.ld ? a.ld > b.ld : a.utterance_id < b.utterance_id;
  });
  for (std::size_t i = 0; i < n; ++i) out.hardest.push_back(scores[i].utterance_id);
  std::sort(scores.begin(), scores.end(), [](const DifficultyScore& a, const DifficultyScore& b) {
    return a.ld != b.ld ? a.ld < b.ld : a.utterance_id < b.utterance_id;
  });
  for (std::size_t i = 0; i < n; ++i) out.easiest.push_back(scores[i].utterance_id);
  return out;
}

}  // namespace simulst::metrics
