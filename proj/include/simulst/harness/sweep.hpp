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
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "simulst/decoding/online_decoder.hpp"
#include "simulst/encoding/encoder_stream.hpp"
#include "simulst/error.hpp"
#include "simulst/metrics/difficulty.hpp"
#include "simulst/metrics/tradeoff.hpp"
#include "simulst/nn/model.hpp"
#include "simulst/segmentation/plan.hpp"

namespace simulst::harness {

using segmentation::Policy;

inline constexpr std::size_t kMaxRuns = 10000;

/// One point of a sweep grid.
struct RunSpec {
  encoding::Strategy strategy = encoding::Strategy::kUlstmOverlap;
  Policy policy = Policy::kFixed;
  std::size_t k = 100;
  std::size_t s = 10;  // words per read for the oracle policy
  std::size_t n = 1;
  std::size_t low = 0, high = 0;  // random policy bounds
  std::uint64_t seed = 0;

  /// CSV key. Random runs report their bounds in the k and s columns.
  metrics::ConfigKey key() const {
    metrics::ConfigKey c;
    c.strategy = std::string(encoding::to_string(strategy));
    c.n = n;
    c.segmentation = segmentation::to_string(policy);
    if (policy == Policy::kRandom) {
      c.k = low;
      c.s = high;
      c.segmentation += "@" + std::to_string(seed);
    } else {
      c.k = k;
      c.s = policy == Policy::kOracleWords ? 1 : s;
    }
    return c;
  }

  /// File-name friendly label.
  std::string tag() const {
    const metrics::ConfigKey c = key();
    std::string seg = c.segmentation;
    std::replace(seg.begin(), seg.end(), '@', '-');
    return c.strategy + "_" + seg + "_k" + std::to_string(c.k) + "_s" + std::to_string(c.s) + "_N" +
           std::to_string(c.n);
  }
};

struct SweepConfig {
  std::vector<encoding::Strategy> strategies{encoding::Strategy::kUlstmOverlap};
  std::vector<Policy> policies{Policy::kFixed};
  std::vector<std::size_t> k{100};
  std::vector<std::size_t> s{10};
  std::vector<std::size_t> n{1};
  std::vector<std::pair<std::size_t, std::size_t>> random_bounds{{5, 10}, {5, 20}, {5, 50},
                                                                 {5, 100}, {10, 50}, {10, 100}};
  std::vector<std::uint64_t> seeds{1};

  /// Cartesian product in a fixed order: strategy, policy, then the policy's
  /// own parameters.
  std::vector<RunSpec> expand() const {
    if (strategies.empty() || policies.empty() || n.empty())
      throw ConfigError("sweep: strategy, segmentation and N lists must be non-empty");
    std::vector<RunSpec> runs;
    auto push = [&](RunSpec r) {
      if (runs.size() >= kMaxRuns)
        throw ConfigError("sweep: grid exceeds " + std::to_string(kMaxRuns) + " runs");
      runs.push_back(r);
    };
    for (auto st : strategies) {
      for (Policy p : policies) {
        RunSpec base;
        base.strategy = st;
        base.policy = p;
        for (std::size_t nn : n) {
          if (nn == 0) throw ConfigError("sweep: N must be at least 1");
          base.n = nn;
          switch (p) {
            case Policy::kFixed:
              if (k.empty() || s.empty()) throw ConfigError("sweep: fixed policy needs k and s values");
              for (std::size_t kk : k)
                for (std::size_t ss : s) {
                  if (ss == 0) throw ConfigError("sweep: stride s must be at least 1");
                  RunSpec r = base;
                  r.k = kk;
                  r.s = ss;
                  push(r);
                }
              break;
            case Policy::kOracleWords:
              if (k.empty()) throw ConfigError("sweep: oracle policy needs k values");
              for (std::size_t kk : k) {
                RunSpec r = base;
                r.k = kk;
                r.s = 1;
                push(r);
              }
              break;
            case Policy::kRandom:
              if (random_bounds.empty() || seeds.empty())
                throw ConfigError("sweep: random policy needs bounds and seeds");
              for (auto [lo, hi] : random_bounds)
                for (std::uint64_t sd : seeds) {
                  if (lo < 1 || lo > hi) throw ConfigError("sweep: random bounds need 1 <= low <= high");
                  RunSpec r = base;
                  r.low = lo;
                  r.high = hi;
                  r.seed = sd;
                  push(r);
                }
              break;
          }
        }
      }
    }
    return runs;
  }
};

/// One utterance as seen by the harness.
struct Source {
  std::string id;
  const ad::Tensor* features = nullptr;
  const std::vector<segmentation::WordSpan>* words = nullptr;  // oracle policy only
};

/// Per-utterance seed for random plans so a run does not depend on the
/// order utterances are scheduled in.
inline std::uint64_t utterance_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ull + index + 1;
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ull;
  return x ^ (x >> 29);
}

inline segmentation::SegmentationPlan plan_for(const RunSpec& run, const Source& src, std::size_t index) {
  const std::size_t frames = src.features->dim(0);
  segmentation::SegmentationPlan plan;
  switch (run.policy) {
    case Policy::kFixed: plan = segmentation::fixed_plan(frames, run.k, run.s); break;
    case Policy::kOracleWords:
      if (src.words == nullptr) throw ConfigError("no word boundaries for utterance '" + src.id + "'");
      plan = segmentation::oracle_word_plan(frames, *src.words, run.k);
      break;
    case Policy::kRandom:
      plan = segmentation::random_plan(frames, run.low, run.high, utterance_seed(run.seed, index));
      break;
  }
  plan.utterance_id = src.id;
  return plan;
}

struct RunResult {
  RunSpec spec;
  std::vector<decoding::DecodeTrace> traces;  // same order as the sources
};

/// Picks the model whose encoder direction fits the strategy.
struct ModelSet {
  const nn::ModelParams* unidirectional = nullptr;
  const nn::ModelParams* bidirectional = nullptr;

  const nn::ModelParams& for_strategy(encoding::Strategy s) const {
    const bool bi = encoding::required_directions(s) == 2;
    const nn::ModelParams* m = bi ? bidirectional : unidirectional;
    if (m == nullptr)
      throw ConfigError(std::string("no ") + (bi ? "bidirectional" : "unidirectional") +
                        " model loaded for strategy " + std::string(encoding::to_string(s)));
    return *m;
  }
};

/// Decodes every (run, utterance) pair on a pool of `threads` workers.
/// Results land in fixed slots, so the output does not depend on scheduling.
inline std::vector<RunResult> run_sweep(const std::vector<RunSpec>& runs, const std::vector<Source>& sources,
                                        const ModelSet& models, decoding::DecodePolicy policy = {},
                                        std::size_t threads = 1) {
  std::vector<RunResult> out(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out[r].spec = runs[r];
    out[r].traces.resize(sources.size());
    models.for_strategy(runs[r].strategy);  // fail before spawning workers
  }
  const std::size_t jobs = runs.size() * sources.size();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t r = j / sources.size(), u = j % sources.size();
      try {
        decoding::DecodePolicy p = policy;
        p.max_tokens_per_write = runs[r].n;
        const auto plan = plan_for(runs[r], sources[u], u);
        out[r].traces[u] =
            decoding::simulate(*sources[u].features, plan, p, models.for_strategy(runs[r].strategy),
                               runs[r].strategy);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline std::vector<metrics::TradeoffRow> score_runs(const std::vector<RunResult>& results,
                                                    const std::map<std::string, std::string>& references,
                                                    const metrics::TradeoffOptions& opt = {}) {
  std::vector<metrics::TradeoffRow> rows;
  for (const RunResult& r : results) rows.push_back(metrics::tradeoff_row(r.spec.key(), r.traces, references, opt));
  return rows;
}

/// Keeps only the traces whose utterance is in `ids`.
inline std::vector<decoding::DecodeTrace> select(const std::vector<decoding::DecodeTrace>& traces,
                                                 const std::vector<std::string>& ids) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<decoding::DecodeTrace> out;
  for (const auto& t : traces)
    if (std::binary_search(sorted.begin(), sorted.end(), t.utterance_id)) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchRow {
  std::string strategy;
  double mean_wall_per_utt_ns = 0.0;
  double ratio_vs_blstm = 0.0;
  std::size_t frames_processed = 0;  // per repetition
};

struct BenchOptions {
  std::size_t k = 100;
  std::size_t s = 10;
  std::size_t repetitions = 20;
  std::vector<encoding::Strategy> strategies{encoding::Strategy::kBlstmReencode,
                                             encoding::Strategy::kUlstmReencode,
                                             encoding::Strategy::kUlstmOverlap};
};

/// Times full online decoding per strategy. Runs on the calling thread only;
/// repetitions of different strategies are interleaved so drift in machine
/// load spreads evenly.
inline std::vector<BenchRow> bench(const std::vector<Source>& sources, const ModelSet& models,
                                   const BenchOptions& opt, decoding::DecodePolicy policy = {}) {
  if (sources.empty()) throw ContractError("bench: no utterances");
  if (opt.repetitions == 0) throw ConfigError("bench: repetitions must be at least 1");
  std::vector<BenchRow> rows(opt.strategies.size());
  std::vector<double> total_ns(opt.strategies.size(), 0.0);
  for (std::size_t i = 0; i < opt.strategies.size(); ++i) {
    rows[i].strategy = std::string(encoding::to_string(opt.strategies[i]));
    models.for_strategy(opt.strategies[i]);
  }
  for (std::size_t rep = 0; rep < opt.repetitions; ++rep) {
    for (std::size_t i = 0; i < opt.strategies.size(); ++i) {
      const nn::ModelParams& model = models.for_strategy(opt.strategies[i]);
      std::size_t frames = 0;
      for (const Source& src : sources) {
        auto plan = segmentation::fixed_plan(src.features->dim(0), opt.k, opt.s);
        plan.utterance_id = src.id;
        const auto t0 = std::chrono::steady_clock::now();
        const auto trace = decoding::simulate(*src.features, plan, policy, model, opt.strategies[i]);
        total_ns[i] += std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
        frames += trace.cost.frames_processed_total;
      }
      rows[i].frames_processed = frames;
    }
  }
  const double per = static_cast<double>(opt.repetitions * sources.size());
  double base = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].mean_wall_per_utt_ns = total_ns[i] / per;
    if (opt.strategies[i] == encoding::Strategy::kBlstmReencode) base = rows[i].mean_wall_per_utt_ns;
  }
  for (BenchRow& r : rows) r.ratio_vs_blstm = base > 0.0 ? r.mean_wall_per_utt_ns / base : 0.0;
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "strategy,mean_wall_per_utt,ratio_vs_blstm\n";
  for (const BenchRow& r : rows) {
    std::ostringstream line;
    line << r.strategy << ',' << std::fixed << std::setprecision(0) << r.mean_wall_per_utt_ns << ','
         << std::setprecision(4) << r.ratio_vs_blstm;
    os << line.str() << '\n';
  }
}

}  // namespace simulst::harness
