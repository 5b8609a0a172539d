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

// Acceptance gate. Prints one PASS or FAIL line per criterion and exits
// non-zero when any criterion fails. Artifacts (trade-off CSVs, bench CSV)
// are written to the directory given as the first argument, default
// "acceptance_out".

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"
#include "simulst/decoding/online_decoder.hpp"
#include "simulst/encoding/encoder_stream.hpp"
#include "simulst/harness/sweep.hpp"
#include "simulst/metrics/bleu.hpp"
#include "simulst/metrics/difficulty.hpp"
#include "simulst/metrics/latency.hpp"
#include "simulst/metrics/tradeoff.hpp"
#include "simulst/nn/layers.hpp"
#include "simulst/synth/corpus.hpp"
#include "simulst/synth/train.hpp"

namespace fs = std::filesystem;
using namespace simulst;
using encoding::Strategy;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

fs::path g_out = "acceptance_out";
int g_failures = 0;

void report(int id, const std::string& title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++g_failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << ":" << v.detail.str()
            << " (" << std::fixed << std::setprecision(1) << secs << " s)" << std::endl;
}

bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

// --- 1: streaming equivalence -------------------------------------------------

void streaming_equivalence(Verdict& v) {
  const auto uni = testing::random_model(1, 101);
  const auto bi = testing::random_model(2, 102);
  std::mt19937_64 rng(1);
  std::size_t feeds = 0, uni_bad = 0, bi_bad = 0;
  for (int u = 0; u < 100; ++u) {
    const std::size_t t = 8 + rng() % 393;
    const auto x = testing::random_frames(t, 1000 + u);
    encoding::EncoderStream us(uni, Strategy::kUlstmReencode);
    encoding::EncoderStream bs(bi, Strategy::kBlstmReencode);
    std::size_t g = 0;
    while (g < t) {
      const std::size_t e = std::min(t, g + 1 + rng() % 64);
      us.feed(x.rows(g, e), e == t);
      bs.feed(x.rows(g, e), e == t);
      ++feeds;
      // A prefix shorter than one encoder position has no offline encoding.
      const bool same = nn::vgg_positions(e) == 0 ? us.positions() == 0
                                                  : us.outputs() == nn::encode_offline(uni, x.rows(0, e)).outputs;
      if (!same) ++uni_bad;
      g = e;
    }
    if (!(bs.outputs() == nn::encode_offline(bi, x).outputs)) ++bi_bad;
  }
  v.detail << " 100 utterances, " << feeds << " feeds, ulstm mismatches " << uni_bad << ", blstm final mismatches "
           << bi_bad;
  v.require(uni_bad == 0, "ulstm-reencode prefix outputs differ from offline");
  v.require(bi_bad == 0, "blstm-reencode final outputs differ from offline");
}

// --- 2: overlap tiling --------------------------------------------------------

void overlap_tiling(Verdict& v) {
  const auto uni = testing::random_model(1, 201);
  std::mt19937_64 rng(2);
  const std::size_t grid[] = {8, 16, 24};
  std::size_t bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = grid[rng() % 3], s = grid[rng() % 3], t = 8 + rng() % 393;
    const auto stream = testing::run_fixed(uni, Strategy::kUlstmOverlap, testing::random_frames(t, trial), k, s);
    std::size_t next = 0;
    bool ok = true;
    for (const auto& c : stream.chunks()) {
      ok &= c.begin_frame % 4 == 0 && c.begin_frame / 4 == next;
      next = c.begin_frame / 4 + c.kept_positions;
    }
    ok &= next == nn::vgg_positions(t) && stream.positions() == nn::vgg_positions(t);
    if (!ok) {
      if (bad == 0) v.detail << " first bad combo T=" << t << " k=" << k << " s=" << s << ";";
      ++bad;
    }
  }
  v.detail << " 200 (T, k, s) combos, " << bad << " with gaps, overlaps or a wrong total";
  v.require(bad == 0, "kept positions do not tile the frame axis");
}

// --- 3: cost and wall clock -----------------------------------------------------

void cost_and_wall_clock(Verdict& v) {
  const std::size_t t = 2000;
  const auto uni = testing::random_model(1, 301);
  const auto bi = testing::random_model(2, 302);
  const auto x = testing::random_frames(t, 303);
  const std::vector<harness::Source> sources{{"bench-0", &x, nullptr}};
  harness::BenchOptions opt;  // k = 100, s = 10, 20 repetitions
  const auto rows = harness::bench(sources, {&uni, &bi}, opt);
  {
    std::ofstream os(g_out / "bench.csv");
    harness::write_bench_csv(os, rows);
  }
  const std::uint64_t expected[] = {401100, 200550, 2950};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.detail << ' ' << rows[i].strategy << " frames=" << rows[i].frames_processed << " ratio=" << std::setprecision(3)
             << rows[i].ratio_vs_blstm << ';';
    v.require(rows[i].frames_processed == expected[i],
              rows[i].strategy + " frames_processed " + std::to_string(rows[i].frames_processed) +
                  " != " + std::to_string(expected[i]));
  }
  v.detail << " repetitions=" << opt.repetitions;
  v.require(rows[1].ratio_vs_blstm < 0.7, "ulstm-reencode ratio >= 0.7");
  v.require(rows[2].ratio_vs_blstm < 0.2, "ulstm-overlap ratio >= 0.2");
}

// --- 4: gradients -------------------------------------------------------------------

void gradients(Verdict& v) {
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& c : testing::grad_cases()) {
    const auto inputs = testing::grad_case_inputs(c);
    for (const auto& in : inputs) v.require(in.size() <= 64, std::string(c.name) + " input exceeds 64 elements");
    const auto r = testing::gradcheck(c.fn, inputs, 77);
    worst = std::max(worst, r.max_rel_error);
    ++cases;
    v.require(r.failures == 0 && r.max_rel_error <= 1e-3, std::string(c.name) + ": " + r.worst);
  }
  v.detail << ' ' << cases << " ops, worst relative error " << std::scientific << std::setprecision(2) << worst;
}

// --- 5: metric oracles ------------------------------------------------------------

void metric_oracles(Verdict& v) {
  using metrics::average_lagging;
  const std::vector<double> ideal{0, 250, 500, 750}, read_all{1000, 1000, 1000, 1000}, worked{500, 600, 1000, 1000};
  const double al_ideal = average_lagging(ideal, 1000, 4);
  const double al_all = average_lagging(read_all, 1000, 4);
  const double al_worked = average_lagging(worked, 1000, 4);
  v.detail << " AL ideal=" << al_ideal << " read-all=" << al_all << " worked=" << al_worked << ';';
  v.require(std::abs(al_ideal) <= 1e-9, "AL ideal");
  v.require(close_rel(al_all, 1000.0, 1e-9), "AL read-all");
  v.require(close_rel(al_worked, 450.0, 1e-9), "AL worked case");

  for (std::size_t n = 1; n <= 6; ++n) {
    metrics::AlignmentSet diag{"d", n, n, {}}, inv{"i", n, n, {}};
    for (std::size_t i = 1; i <= n; ++i) {
      diag.pairs.emplace_back(i, i);
      inv.pairs.emplace_back(n + 1 - i, i);
    }
    v.require(metrics::lagging_difficulty(diag).ld == 1.0, "LD diagonal n=" + std::to_string(n));
    v.require(metrics::lagging_difficulty(inv).ld == static_cast<double>(n), "LD inverted n=" + std::to_string(n));
  }
  std::mt19937_64 rng(5);
  std::size_t ld_bad = 0;
  for (int i = 0; i < 500; ++i) {
    const auto r = testing::random_alignment(rng, 6);
    const metrics::AlignmentSet a{"r", r.src_len, r.tgt_len, r.pairs};
    if (std::abs(metrics::lagging_difficulty(a).ld - testing::ld_by_scan(r.src_len, r.tgt_len, r.pairs)) > 1e-12)
      ++ld_bad;
  }
  v.detail << " LD scan mismatches " << ld_bad << "/500;";
  v.require(ld_bad == 0, "LD differs from scan oracle");

  const std::vector<std::string> refs{"the cat sat on the mat", "a b c d"};
  const double ident = metrics::bleu_words(refs, refs);
  const double two = metrics::bleu_words({"the cat sat on a mat", "a b c"}, refs);
  const double want = std::exp(1.0 - 10.0 / 9.0) * std::pow(8.0 / 63.0, 0.25);
  v.detail << " BLEU identity=" << ident << " two-sentence=" << std::setprecision(12) << two;
  v.require(ident == 1.0, "BLEU identity");
  v.require(close_rel(two, want, 1e-9), "BLEU two-sentence case");
}

// --- shared trained model -------------------------------------------------------

struct Trained {
  synth::Corpus corpus;  // 900 train + 100 held out, monotone
  nn::ModelParams model;
  std::vector<harness::Source> heldout;
  std::map<std::string, std::string> refs;
  double offline_bleu = 0.0;
  double train_seconds = 0.0;
};

Trained& trained() {
  static Trained t = [] {
    Trained r;
    synth::SyntheticSpec spec;
    spec.seed = 1;
    r.corpus = synth::generate_corpus(spec, 1000);
    nn::ModelConfig cfg;
    cfg.alphabet = spec.vocabulary();
    r.model = nn::init_params(cfg, 1);
    std::vector<synth::Example> train;
    for (std::size_t i = 0; i < 900; ++i) train.push_back({&r.corpus.utterances[i].features, r.corpus.utterances[i].target});
    const auto t0 = std::chrono::steady_clock::now();
    synth::train(r.model, train, {}, synth::TrainOptions{});
    r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<std::string> hyps, refs;
    for (std::size_t i = 900; i < 1000; ++i) {
      const auto& u = r.corpus.utterances[i];
      r.heldout.push_back({u.id, &u.features, &u.words});
      r.refs[u.id] = u.target;
      hyps.push_back(decoding::offline_translate(u.features, r.model).hypothesis);
      refs.push_back(u.target);
    }
    r.offline_bleu = metrics::bleu_words(hyps, refs);
    return r;
  }();
  return t;
}

harness::SweepConfig k_sweep(Strategy strategy) {
  harness::SweepConfig cfg;
  cfg.strategies = {strategy};
  cfg.policies = {segmentation::Policy::kFixed};
  cfg.k = {8, 16, 32, 64, 128};
  cfg.s = {16};
  cfg.n = {1};
  return cfg;
}

std::vector<metrics::TradeoffRow> sweep_rows(const harness::SweepConfig& cfg, const std::vector<harness::Source>& src,
                                             const nn::ModelParams& model) {
  const auto results = harness::run_sweep(cfg.expand(), src, {&model, nullptr});
  return harness::score_runs(results, trained().refs);
}

void write_csv(const std::string& name, const std::vector<metrics::TradeoffRow>& rows) {
  std::ofstream os(g_out / name);
  metrics::write_tradeoff_csv(os, rows, false);
}

// --- 6: end-to-end trade-off shape -------------------------------------------

// The gate runs on ulstm-reencode, whose encoder outputs equal offline ones.
// The ulstm-overlap sweep is reported alongside for reference only.
void tradeoff_shape(Verdict& v) {
  Trained& t = trained();
  v.detail << " trained in " << std::setprecision(0) << std::fixed << t.train_seconds << " s; offline held-out BLEU "
           << std::setprecision(4) << t.offline_bleu << "; ulstm-reencode";
  v.require(t.offline_bleu >= 0.8, "offline BLEU < 0.8");
  const auto rows = sweep_rows(k_sweep(Strategy::kUlstmReencode), t.heldout, t.model);
  const auto overlap = sweep_rows(k_sweep(Strategy::kUlstmOverlap), t.heldout, t.model);
  std::vector<metrics::TradeoffRow> both = rows;
  both.insert(both.end(), overlap.begin(), overlap.end());
  write_csv("tradeoff_k_sweep.csv", both);
  std::vector<double> ks, bleus;
  for (const auto& r : rows) {
    v.detail << " k=" << r.config.k << " BLEU=" << std::setprecision(4) << r.bleu << " AL=" << std::setprecision(1)
             << r.mean_al_ms << ';';
    ks.push_back(static_cast<double>(r.config.k));
    bleus.push_back(r.bleu);
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    v.require(rows[i].mean_al_ms > rows[i - 1].mean_al_ms, "(a) AL not strictly increasing in k");
  v.require(std::abs(rows.back().bleu - t.offline_bleu) <= 0.05, "(b) BLEU at largest k not within 0.05 of offline");
  const double rho = metrics::spearman(ks, bleus);
  v.detail << " spearman(k, BLEU)=" << std::setprecision(3) << rho << "; for reference ulstm-overlap BLEU";
  v.require(rho >= 0.0, "(c) Spearman < 0");
  for (const auto& r : overlap) v.detail << ' ' << std::setprecision(3) << r.bleu;
}

// --- 7: segmentation comparison harness ---------------------------------------

bool well_formed_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 9 || f[0].empty() || f[4].empty()) return false;
  try {
    std::size_t pos = 0;
    for (int i : {1, 2, 3, 7, 8}) {
      if (f[i].empty() || f[i][0] == '-') return false;
      std::stoull(f[i], &pos);
      if (pos != f[i].size()) return false;
    }
    const double bleu = std::stod(f[5], &pos);
    if (pos != f[5].size() || bleu < 0.0 || bleu > 1.0) return false;
    const double al = std::stod(f[6], &pos);
    return pos == f[6].size() && std::isfinite(al);
  } catch (const std::exception&) {
    return false;
  }
}

void segmentation_harness(Verdict& v) {
  Trained& t = trained();
  // Fixed intervals, then oracle word boundaries with their own wait values,
  // then the six random bound pairs.
  const Strategy st = Strategy::kUlstmOverlap;
  harness::SweepConfig fixed = k_sweep(st), oracle = k_sweep(st), random = k_sweep(st);
  oracle.policies = {segmentation::Policy::kOracleWords};
  oracle.k = {0, 50, 100};
  random.policies = {segmentation::Policy::kRandom};
  const auto fixed_specs = fixed.expand(), oracle_specs = oracle.expand(), random_specs = random.expand();
  std::vector<harness::RunSpec> all = fixed_specs;
  all.insert(all.end(), oracle_specs.begin(), oracle_specs.end());
  all.insert(all.end(), random_specs.begin(), random_specs.end());

  const auto results = harness::run_sweep(all, t.heldout, {&t.model, nullptr});
  std::size_t degenerate_chunks = 0, traces_checked = 0;
  for (const auto& r : results) {
    for (std::size_t u = 0; u < r.traces.size(); ++u) {
      const auto& tr = r.traces[u];
      ++traces_checked;
      bool ok = tr.delays.size() == tr.hypothesis.size() && tr.total_frames == t.heldout[u].features->dim(0);
      for (std::size_t i = 0; i < tr.delays.size(); ++i)
        ok &= tr.delays[i] <= tr.total_frames && (i == 0 || tr.delays[i] >= tr.delays[i - 1]);
      v.require(ok, "malformed trace " + r.spec.tag() + "/" + tr.utterance_id);
      if (r.spec.policy == segmentation::Policy::kRandom && r.spec.low == 5 && r.spec.high == 10)
        for (std::size_t size : harness::plan_for(r.spec, t.heldout[u], u).segment_sizes())
          degenerate_chunks += size < 8;
    }
  }
  const auto rows = harness::score_runs(results, t.refs);
  std::ostringstream csv;
  metrics::write_tradeoff_csv(csv, rows, false);
  write_csv("tradeoff_segmentation.csv", rows);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  v.require(line == metrics::kTradeoffHeader, "CSV header");
  std::size_t good = 0, total = 0;
  while (std::getline(in, line)) {
    ++total;
    good += well_formed_row(line);
  }
  v.detail << ' ' << all.size() << " configs (" << fixed_specs.size() << " fixed, " << oracle_specs.size()
           << " oracle, " << random_specs.size() << " random), " << good << '/' << total << " well-formed CSV rows, " << traces_checked
           << " traces; random [5,10] fed " << degenerate_chunks << " reads shorter than 8 frames";
  for (const auto& r : rows)
    if (r.config.segmentation != "fixed")
      v.detail << "; " << r.config.segmentation << " k=" << r.config.k << " s=" << r.config.s << " BLEU="
               << std::setprecision(3) << r.bleu;
  v.require(total == all.size() && good == total, "one well-formed CSV row per config");
  v.require(oracle_specs.size() == 3 && random_specs.size() == 6, "policy coverage");
  v.require(degenerate_chunks > 0, "random [5,10] produced no degenerate chunks");
}

// --- 8: LD subsetting ------------------------------------------------------------

void ld_subsetting(Verdict& v) {
  Trained& t = trained();
  // Same seed keeps the cipher and symbol means of the training corpus; the
  // tail past the first 1000 utterances was never trained on.
  synth::SyntheticSpec spec;
  spec.seed = 1;
  spec.reversal_fraction = 0.1;
  const synth::Corpus mixed = synth::generate_corpus(spec, 1500);
  std::vector<metrics::DifficultyScore> scores;
  std::map<std::string, const synth::Utterance*> by_id;
  std::size_t reversed = 0;
  for (std::size_t i = 1000; i < mixed.utterances.size(); ++i) {
    const auto& u = mixed.utterances[i];
    by_id[u.id] = &u;
    reversed += u.reversed;
    scores.push_back(metrics::lagging_difficulty(synth::alignment_of(u)));
    t.refs[u.id] = u.target;
  }
  const auto subsets = metrics::extract_subsets(scores, 50);
  std::size_t caught = 0;
  for (const auto& id : subsets.hardest) caught += by_id.at(id)->reversed;
  const double frac = reversed == 0 ? 0.0 : static_cast<double>(caught) / static_cast<double>(reversed);
  v.detail << " 500 utterances, " << reversed << " reversed, " << caught << " in hardest 50 (" << std::setprecision(3)
           << frac * 100.0 << "%);";
  v.require(reversed > 0 && frac >= 0.8, "fewer than 80% of reversed utterances in the hardest set");

  auto sources_of = [&](const std::vector<std::string>& ids) {
    std::vector<harness::Source> out;
    for (const auto& id : ids) out.push_back({id, &by_id.at(id)->features, &by_id.at(id)->words});
    return out;
  };
  const auto easy = sweep_rows(k_sweep(Strategy::kUlstmReencode), sources_of(subsets.easiest), t.model);
  const auto hard = sweep_rows(k_sweep(Strategy::kUlstmReencode), sources_of(subsets.hardest), t.model);
  write_csv("curves_easiest.csv", easy);
  write_csv("curves_hardest.csv", hard);
  v.detail << std::fixed;
  for (std::size_t i = 0; i < easy.size(); ++i) {
    v.detail << " k=" << easy[i].config.k << " easy " << std::setprecision(3) << easy[i].bleu << '/'
             << std::setprecision(0) << easy[i].mean_al_ms << " hard " << std::setprecision(3) << hard[i].bleu << '/'
             << std::setprecision(0) << hard[i].mean_al_ms << ';';
    v.require(easy[i].bleu >= hard[i].bleu && easy[i].mean_al_ms <= hard[i].mean_al_ms,
              "easiest curve not dominant at k=" + std::to_string(easy[i].config.k));
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_out = argv[1];
  fs::create_directories(g_out);
  std::cout << std::unitbuf;
  report(1, "streaming equivalence", streaming_equivalence);
  report(2, "overlap coverage tiling", overlap_tiling);
  report(3, "cost complexity and wall clock", cost_and_wall_clock);
  report(4, "gradient correctness", gradients);
  report(5, "metric oracles", metric_oracles);
  report(6, "end-to-end trade-off shape", tradeoff_shape);
  report(7, "segmentation comparison harness", segmentation_harness);
  report(8, "LD subsetting", ld_subsetting);
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << '\n';
  return g_failures == 0 ? 0 : 1;
}
