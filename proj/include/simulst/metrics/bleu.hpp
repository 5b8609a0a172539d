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
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/error.hpp"

namespace simulst::metrics {

using Tokens = std::vector<std::string>;

inline Tokens tokenize_words(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline Tokens tokenize_chars(std::string_view text) {
  Tokens out;
  for (char c : text) out.emplace_back(1, c);
  return out;
}

struct BleuOptions {
  std::size_t max_order = 4;
  /// Replace zero match counts by `epsilon` instead of zeroing the score.
  bool smoothing = false;
  double epsilon = 1e-9;
};

/// Corpus-level sufficient statistics.
struct BleuStats {
  std::vector<double> matches;  // clipped n-gram matches per order
  std::vector<double> totals;   // hypothesis n-grams per order
  double hyp_len = 0;
  double ref_len = 0;

  double precision(std::size_t order) const {
    const std::size_t n = order - 1;
    return totals[n] > 0 ? matches[n] / totals[n] : 0.0;
  }

  double brevity_penalty() const {
    if (hyp_len <= 0) return 0.0;
    return std::exp(std::min(0.0, 1.0 - ref_len / hyp_len));
  }

  /// Geometric mean of the modified precisions, without the brevity penalty.
  double precision_mean(const BleuOptions& opt = {}) const {
    double log_sum = 0.0;
    for (std::size_t n = 0; n < matches.size(); ++n) {
      double m = matches[n];
      const double t = std::max(totals[n], opt.smoothing ? 1.0 : 0.0);
      if (m == 0.0) {
        if (!opt.smoothing) return 0.0;
        m = opt.epsilon;
      }
      if (t == 0.0) return 0.0;
      log_sum += std::log(m / t);
    }
    return std::exp(log_sum / static_cast<double>(matches.size()));
  }

  double score(const BleuOptions& opt = {}) const { return brevity_penalty() * precision_mean(opt); }
};

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace detail

inline BleuStats bleu_stats(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                            std::size_t max_order = 4) {
  if (hypotheses.empty()) throw ContractError("bleu: empty hypothesis corpus");
  if (hypotheses.size() != references.size())
    throw ContractError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                        std::to_string(references.size()) + " references");
  BleuStats st;
  st.matches.assign(max_order, 0.0);
  st.totals.assign(max_order, 0.0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const Tokens& h = hypotheses[s];
    const Tokens& r = references[s];
    st.hyp_len += static_cast<double>(h.size());
    st.ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= max_order; ++n) {
      const auto hc = detail::ngram_counts(h, n);
      const auto rc = detail::ngram_counts(r, n);
      for (const auto& [gram, count] : hc) {
        st.totals[n - 1] += count;
        const auto it = rc.find(gram);
        if (it != rc.end()) st.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  return st;
}

/// Corpus BLEU in [0, 1].
inline double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                   const BleuOptions& opt = {}) {
  return bleu_stats(hypotheses, references, opt.max_order).score(opt);
}

/// Corpus BLEU over whitespace-tokenised strings.
inline double bleu_words(const std::vector<std::string>& hypotheses,
                         const std::vector<std::string>& references, const BleuOptions& opt = {}) {
  std::vector<Tokens> h, r;
  for (const auto& s : hypotheses) h.push_back(tokenize_words(s));
  for (const auto& s : references) r.push_back(tokenize_words(s));
  return bleu(h, r, opt);
}

}  // namespace simulst::metrics
