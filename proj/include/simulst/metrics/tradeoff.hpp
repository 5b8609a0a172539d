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
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "simulst/decoding/online_decoder.hpp"
#include "simulst/metrics/bleu.hpp"
#include "simulst/metrics/latency.hpp"

namespace simulst::metrics {

struct ConfigKey {
  std::string strategy;
  std::size_t k = 0;
  std::size_t s = 0;
  std::size_t n = 1;
  std::string segmentation;

  friend auto operator<=>(const ConfigKey&, const ConfigKey&) = default;
};

struct TradeoffRow {
  ConfigKey config;
  double bleu = 0.0;
  double mean_al_ms = 0.0;
  std::uint64_t frames_processed = 0;
  std::uint64_t wall_ns = 0;
  std::size_t utterances = 0;
  std::size_t skipped = 0;  // traces without a reference
};

struct TradeoffOptions {
  LatencyUnit unit = LatencyUnit::kWord;
  BleuOptions bleu;
};

/// Scores one configuration: corpus BLEU and utterance-averaged AL.
inline TradeoffRow tradeoff_row(const ConfigKey& config, const std::vector<decoding::DecodeTrace>& traces,
                                const std::map<std::string, std::string>& references,
                                const TradeoffOptions& opt = {}) {
  TradeoffRow row;
  row.config = config;
  std::vector<Tokens> hyps, refs;
  double al_sum = 0.0;
  for (const decoding::DecodeTrace& tr : traces) {
    const auto it = references.find(tr.utterance_id);
    if (it == references.end()) {
      ++row.skipped;
      continue;
    }
    hyps.push_back(tokenize_words(tr.hypothesis));
    refs.push_back(tokenize_words(it->second));
    const std::vector<double> d = tr.delays_ms();
    al_sum += utterance_lagging(tr.hypothesis, d, tr.source_ms(), it->second, opt.unit);
    row.frames_processed += tr.cost.frames_processed_total;
    row.wall_ns += tr.wall_ns;
    ++row.utterances;
  }
  if (row.utterances == 0) throw ContractError("tradeoff_row: no trace has a reference");
  row.bleu = bleu(hyps, refs, opt.bleu);
  row.mean_al_ms = al_sum / static_cast<double>(row.utterances);
  return row;
}

inline std::vector<TradeoffRow> tradeoff_table(
    const std::vector<std::pair<ConfigKey, std::vector<decoding::DecodeTrace>>>& runs,
    const std::map<std::string, std::string>& references, const TradeoffOptions& opt = {}) {
  std::vector<TradeoffRow> rows;
  for (const auto& [key, traces] : runs) rows.push_back(tradeoff_row(key, traces, references, opt));
  return rows;
}

inline constexpr const char* kTradeoffHeader =
    "strategy,k,s,N,segmentation,BLEU,AL_ms,frames_processed,wall_ns";

/// CSV rows; with `timing` false the wall_ns column is written as 0 so the
/// output is byte-reproducible.
inline void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffRow>& rows, bool timing = true) {
  os << kTradeoffHeader << '\n';
  for (const TradeoffRow& r : rows) {
    std::ostringstream line;
    line << r.config.strategy << ',' << r.config.k << ',' << r.config.s << ',' << r.config.n << ','
         << r.config.segmentation << ',' << std::fixed << std::setprecision(6) << r.bleu << ','
         << std::setprecision(3) << r.mean_al_ms << ',' << r.frames_processed << ','
         << (timing ? r.wall_ns : 0);
    os << line.str() << '\n';
  }
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// series is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("spearman: need two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace simulst::metrics
