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
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simulst/autodiff/tensor.hpp"
#include "simulst/error.hpp"
#include "simulst/io/binary.hpp"
#include "simulst/metrics/difficulty.hpp"
#include "simulst/segmentation/plan.hpp"

namespace simulst::synth {

using ad::Tensor;

/// Parameters of the synthetic speech-translation surrogate. Source symbols
/// are rendered as noisy constant feature vectors; the target is a symbol
/// substitution of the source (optionally with word order reversed).
struct SyntheticSpec {
  std::string alphabet = "abcdefghijklmnopqrst";  // plus the word separator ' '
  std::size_t frames_per_symbol = 8;
  std::size_t feature_dim = 16;
  float noise_sigma = 0.1f;
  std::size_t min_symbols = 5;
  std::size_t max_symbols = 40;
  std::size_t min_word = 2;
  std::size_t max_word = 6;
  double reversal_fraction = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (frames_per_symbol < 4) throw ConfigError("frames_per_symbol must be at least 4");
    if (alphabet.empty() || alphabet.find(' ') != std::string::npos)
      throw ConfigError("alphabet must be non-empty and exclude the space separator");
    if (min_symbols < 3 || min_symbols > max_symbols) throw ConfigError("need 3 <= min_symbols <= max_symbols");
    if (min_word < 1 || min_word > max_word) throw ConfigError("need 1 <= min_word <= max_word");
    if (reversal_fraction < 0.0 || reversal_fraction > 1.0) throw ConfigError("reversal_fraction outside [0,1]");
  }

  /// Model vocabulary covering both sides (the cipher permutes the alphabet).
  std::string vocabulary() const { return alphabet + " "; }
};

struct Utterance {
  std::string id;
  std::string source;
  std::string target;
  Tensor features;  // T × D
  std::vector<segmentation::WordSpan> words;
  std::vector<std::pair<std::size_t, std::size_t>> alignment;  // 1-based (source, target) word pairs
  bool reversed = false;

  std::size_t frames() const { return features.dim(0); }
};

struct Corpus {
  SyntheticSpec spec;
  std::string cipher;  // cipher[i] is the target symbol of alphabet[i]
  std::vector<Tensor> symbol_means;  // one per vocabulary symbol, alphabet order then space
  std::vector<Utterance> utterances;

  /// Held-out split: the last 10% of utterances (at least one).
  std::pair<std::vector<const Utterance*>, std::vector<const Utterance*>> split() const {
    const std::size_t n = utterances.size();
    const std::size_t held = std::max<std::size_t>(1, n / 10);
    std::pair<std::vector<const Utterance*>, std::vector<const Utterance*>> out;
    for (std::size_t i = 0; i < n; ++i) (i + held < n ? out.first : out.second).push_back(&utterances[i]);
    return out;
  }
};

inline std::string utterance_id(std::size_t index) {
  std::ostringstream os;
  os << "utt" << std::setw(5) << std::setfill('0') << index;
  return os.str();
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline Corpus generate_corpus(const SyntheticSpec& spec, std::size_t count) {
  spec.validate();
  if (count == 0) throw ContractError("generate_corpus: need at least one utterance");
  Corpus corpus;
  corpus.spec = spec;
  std::mt19937_64 rng(spec.seed);

  corpus.cipher = spec.alphabet;
  std::shuffle(corpus.cipher.begin(), corpus.cipher.end(), rng);
  std::normal_distribution<float> unit(0.0f, 1.0f);
  const std::string vocab = spec.vocabulary();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    Tensor m({spec.feature_dim});
    for (float& x : m.data()) x = unit(rng);
    corpus.symbol_means.push_back(std::move(m));
  }
  auto symbol_index = [&](char c) { return vocab.find(c); };
  auto encipher = [&](char c) { return c == ' ' ? ' ' : corpus.cipher[spec.alphabet.find(c)]; };

  std::uniform_int_distribution<std::size_t> length(spec.min_symbols, spec.max_symbols);
  std::uniform_int_distribution<std::size_t> word_len(spec.min_word, spec.max_word);
  std::uniform_int_distribution<std::size_t> letter(0, spec.alphabet.size() - 1);
  std::bernoulli_distribution reverse(spec.reversal_fraction);
  std::normal_distribution<float> noise(0.0f, spec.noise_sigma);

  for (std::size_t u = 0; u < count; ++u) {
    Utterance utt;
    utt.id = utterance_id(u);
    const std::size_t target_len = length(rng);
    std::vector<std::size_t> lens;
    std::size_t used = 0;
    while (used < target_len) {
      const std::size_t sep = lens.empty() ? 0 : 1;
      if (used + sep >= target_len) {
        // A single leftover slot cannot hold a separator and a word; the last
        // word absorbs it so the symbol count matches the drawn length.
        lens.back() += target_len - used;
        used = target_len;
        break;
      }
      const std::size_t w = std::min(word_len(rng), target_len - used - sep);
      lens.push_back(w);
      used += w + sep;
    }
    if (lens.size() == 1 && lens[0] >= 3) {
      const std::size_t a = lens[0] / 2;
      lens = {a, lens[0] - a - 1};
    }
    std::vector<std::string> src_words;
    for (std::size_t w : lens) {
      std::string word;
      for (std::size_t i = 0; i < w; ++i) word.push_back(spec.alphabet[letter(rng)]);
      src_words.push_back(std::move(word));
    }
    utt.reversed = reverse(rng) && src_words.size() >= 2;

    std::vector<std::string> tgt_words;
    for (const std::string& w : src_words) {
      std::string t;
      for (char c : w) t.push_back(encipher(c));
      tgt_words.push_back(std::move(t));
    }
    if (utt.reversed) std::reverse(tgt_words.begin(), tgt_words.end());
    for (std::size_t i = 0; i < src_words.size(); ++i) {
      utt.source += (i ? " " : "") + src_words[i];
      utt.target += (i ? " " : "") + tgt_words[i];
      const std::size_t n = src_words.size();
      utt.alignment.emplace_back(utt.reversed ? n - i : i + 1, i + 1);
    }
    std::sort(utt.alignment.begin(), utt.alignment.end(),
              [](auto a, auto b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });

    const std::size_t fps = spec.frames_per_symbol;
    const std::size_t frames = utt.source.size() * fps;
    utt.features = Tensor({frames, spec.feature_dim});
    for (std::size_t s = 0; s < utt.source.size(); ++s) {
      const Tensor& mean = corpus.symbol_means[symbol_index(utt.source[s])];
      for (std::size_t f = 0; f < fps; ++f)
        for (std::size_t d = 0; d < spec.feature_dim; ++d)
          utt.features.at(s * fps + f, d) = mean[d] + noise(rng);
    }
    // Each word owns its symbols plus the following separator, so spans tile.
    std::size_t pos = 0;
    for (std::size_t i = 0; i < src_words.size(); ++i) {
      const std::size_t start = pos;
      pos += src_words[i].size() + (i + 1 < src_words.size() ? 1 : 0);
      utt.words.push_back({src_words[i], start * fps, pos * fps});
    }
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

inline metrics::AlignmentSet alignment_of(const Utterance& u) {
  metrics::AlignmentSet a;
  a.utterance_id = u.id;
  a.source_len = split_words(u.source).size();
  a.target_len = split_words(u.target).size();
  a.pairs = u.alignment;
  return a;
}

// ---------------------------------------------------------------------------
// Feature file: "SIMF", u32 count, then per utterance u32 id length, id
// bytes, u32 T, u32 D and T×D little-endian f32.

struct FeatureRecord {
  std::string id;
  Tensor frames;
};

inline void write_features(std::ostream& os, const std::vector<FeatureRecord>& records) {
  os.write("SIMF", 4);
  io::write_u32(os, static_cast<std::uint32_t>(records.size()));
  for (const FeatureRecord& r : records) {
    io::write_string(os, r.id);
    io::write_u32(os, static_cast<std::uint32_t>(r.frames.dim(0)));
    io::write_u32(os, static_cast<std::uint32_t>(r.frames.dim(1)));
    io::write_f32s(os, r.frames.data());
  }
}

inline std::vector<FeatureRecord> read_features(std::istream& is) {
  char magic[4];
  io::read_exact(is, magic, 4, "feature file magic");
  if (std::string_view(magic, 4) != "SIMF") throw IoError("not a feature file (bad magic)");
  const std::uint32_t count = io::read_u32(is, "utterance count");
  std::vector<FeatureRecord> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureRecord r;
    r.id = io::read_string(is, "utterance id", 4096);
    const std::uint32_t t = io::read_u32(is, "frame count");
    const std::uint32_t d = io::read_u32(is, "feature dim");
    if (static_cast<std::uint64_t>(t) * d > (1ull << 32)) throw IoError("implausible feature matrix size");
    r.frames = Tensor({t, d});
    io::read_f32s(is, r.frames.data(), "features of " + r.id);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<FeatureRecord> load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open feature file: " + path);
  try {
    return read_features(is);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open text file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

/// File names written by write_corpus for a given prefix.
struct CorpusFiles {
  std::string features, references, sources, boundaries, alignments;

  static CorpusFiles at(const std::string& prefix) {
    return {prefix + ".simf", prefix + ".ref.txt", prefix + ".src.txt", prefix + ".bnd.txt",
            prefix + ".align.txt"};
  }
};

inline void write_corpus(const Corpus& corpus, const std::string& prefix) {
  const CorpusFiles files = CorpusFiles::at(prefix);
  auto open = [](const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
  };
  {
    std::vector<FeatureRecord> records;
    for (const Utterance& u : corpus.utterances) records.push_back({u.id, u.features});
    auto os = open(files.features, std::ios::out | std::ios::binary);
    write_features(os, records);
  }
  auto refs = open(files.references);
  auto srcs = open(files.sources);
  auto bnds = open(files.boundaries);
  auto aligns = open(files.alignments);
  for (const Utterance& u : corpus.utterances) {
    refs << u.target << '\n';
    srcs << u.source << '\n';
    segmentation::write_boundaries(bnds, u.id, u.words);
    aligns << metrics::format_fast_align(u.alignment) << '\n';
  }
}

}  // namespace simulst::synth
