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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "simulst/error.hpp"
#include "simulst/harness/sweep.hpp"
#include "simulst/metrics/difficulty.hpp"
#include "simulst/segmentation/plan.hpp"
#include "simulst/synth/corpus.hpp"
#include "simulst/synth/train.hpp"

namespace simulst::harness {

/// Corpus files written by `generate`, loaded back by prefix. Text files are
/// line-aligned with the feature file; the boundary and alignment files are
/// optional.
struct Dataset {
  std::vector<synth::FeatureRecord> features;
  std::vector<std::string> references;
  std::vector<std::string> sources;
  segmentation::WordBoundaryTable boundaries;
  std::vector<std::string> alignments;

  std::size_t size() const { return features.size(); }

  std::map<std::string, std::string> reference_map() const {
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < features.size(); ++i) out[features[i].id] = references[i];
    return out;
  }

  /// Index range [begin, end) of the split: all, train or heldout.
  std::pair<std::size_t, std::size_t> split_range(const std::string& split) const {
    const std::size_t n = size();
    const std::size_t held = std::max<std::size_t>(1, n / 10);
    if (split == "all") return {0, n};
    if (split == "train") return {0, n - std::min(n, held)};
    if (split == "heldout") return {n - std::min(n, held), n};
    throw ConfigError("unknown split '" + split + "' (expected all, train or heldout)");
  }

  std::vector<Source> sources_in(std::size_t begin, std::size_t end) const {
    std::vector<Source> out;
    for (std::size_t i = begin; i < end; ++i) {
      const auto it = boundaries.find(features[i].id);
      out.push_back({features[i].id, &features[i].frames, it == boundaries.end() ? nullptr : &it->second});
    }
    return out;
  }

  std::vector<synth::Example> examples_in(std::size_t begin, std::size_t end) const {
    std::vector<synth::Example> out;
    for (std::size_t i = begin; i < end; ++i) out.push_back({&features[i].frames, references[i]});
    return out;
  }

  /// Alignment sets with word counts taken from the source and reference.
  std::vector<metrics::AlignmentSet> alignment_sets() const {
    if (alignments.empty()) throw ConfigError("corpus has no alignment file");
    std::vector<metrics::AlignmentSet> out;
    for (std::size_t i = 0; i < size(); ++i) {
      metrics::AlignmentSet a;
      a.utterance_id = features[i].id;
      a.source_len = synth::split_words(sources[i]).size();
      a.target_len = synth::split_words(references[i]).size();
      a.pairs = metrics::parse_fast_align(alignments[i]);
      out.push_back(std::move(a));
    }
    return out;
  }
};

inline Dataset load_dataset(const std::string& prefix) {
  const synth::CorpusFiles files = synth::CorpusFiles::at(prefix);
  Dataset d;
  d.features = synth::load_features(files.features);
  d.references = synth::load_lines(files.references);
  if (d.references.size() != d.features.size())
    throw IoError(files.references + ": " + std::to_string(d.references.size()) + " lines for " +
                  std::to_string(d.features.size()) + " utterances");
  if (std::filesystem::exists(files.sources)) {
    d.sources = synth::load_lines(files.sources);
    if (d.sources.size() != d.features.size()) throw IoError(files.sources + ": line count mismatch");
  }
  if (std::filesystem::exists(files.boundaries)) d.boundaries = segmentation::load_boundaries(files.boundaries);
  if (std::filesystem::exists(files.alignments)) {
    d.alignments = synth::load_lines(files.alignments);
    if (d.alignments.size() != d.features.size()) throw IoError(files.alignments + ": line count mismatch");
    if (d.sources.empty()) throw IoError("alignments need the source file " + files.sources);
  }
  return d;
}

}  // namespace simulst::harness
