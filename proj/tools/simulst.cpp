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

// simulst command-line harness: generate, train, translate, simulate,
// bench and report. Every subcommand writes under --out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simulst/decoding/online_decoder.hpp"
#include "simulst/decoding/trace_io.hpp"
#include "simulst/harness/dataset.hpp"
#include "simulst/harness/sweep.hpp"
#include "simulst/metrics/bleu.hpp"
#include "simulst/metrics/difficulty.hpp"
#include "simulst/metrics/tradeoff.hpp"
#include "simulst/nn/model.hpp"
#include "simulst/synth/corpus.hpp"
#include "simulst/synth/train.hpp"

namespace fs = std::filesystem;
using namespace simulst;
using nlohmann::ordered_json;

namespace {

struct Global {
  std::uint64_t seed = 1;
  std::string out = "out";
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

std::string default_corpus(const Global& g) { return (fs::path(g.out) / "corpus").string(); }

// --- generate --------------------------------------------------------------

struct GenerateOpts {
  std::size_t count = 1000;
  std::size_t min_symbols = 5, max_symbols = 40;
  double reversal_fraction = 0.0;
  std::string name = "corpus";
};

void cmd_generate(const Global& g, const GenerateOpts& o) {
  synth::SyntheticSpec spec;
  spec.seed = g.seed;
  spec.min_symbols = o.min_symbols;
  spec.max_symbols = o.max_symbols;
  spec.reversal_fraction = o.reversal_fraction;
  if (o.count == 0) throw ConfigError("--count must be at least 1");
  const synth::Corpus corpus = synth::generate_corpus(spec, o.count);
  fs::create_directories(g.out);
  const std::string prefix = (fs::path(g.out) / o.name).string();
  synth::write_corpus(corpus, prefix);
  std::size_t frames = 0, reversed = 0;
  for (const auto& u : corpus.utterances) {
    frames += u.frames();
    reversed += u.reversed ? 1 : 0;
  }
  std::cout << "wrote " << corpus.utterances.size() << " utterances (" << frames << " frames, " << reversed
            << " reversed) to " << prefix << ".*\n";
}

// --- train -----------------------------------------------------------------

struct TrainOpts {
  std::string corpus;
  std::string model_out;
  synth::TrainOptions recipe;
  std::string optimizer = "adam";
  std::uint32_t directions = 1;
  std::uint32_t hidden = 32;
  std::uint32_t layers = 2;
  std::string alphabet = "abcdefghijklmnopqrst ";
};

void cmd_train(const Global& g, const TrainOpts& o) {
  const harness::Dataset data = harness::load_dataset(o.corpus.empty() ? default_corpus(g) : o.corpus);
  nn::ModelConfig cfg;
  cfg.alphabet = o.alphabet;
  cfg.directions = o.directions;
  cfg.hidden = o.hidden;
  cfg.encoder_layers = o.layers;
  cfg.validate();
  nn::ModelParams params = nn::init_params(cfg, g.seed);

  synth::TrainOptions t = o.recipe;
  t.optimizer = synth::parse_optimizer(o.optimizer);
  t.seed = g.seed;

  const auto [tb, te] = data.split_range("train");
  const auto [hb, he] = data.split_range("heldout");
  const auto train_set = data.examples_in(tb, te);
  const auto heldout = data.examples_in(hb, he);
  std::cout << "training " << params.parameter_count() << " parameters on " << train_set.size()
            << " utterances, " << heldout.size() << " held out\n";

  auto log = open_out(fs::path(g.out) / "train_log.jsonl");
  synth::train(params, train_set, heldout, t, [&](const synth::EpochReport& r) {
    ordered_json j;
    j["epoch"] = r.epoch;
    j["loss"] = r.loss;
    j["heldout_bleu"] = r.heldout_bleu;
    j["examples"] = r.examples;
    j["seconds"] = r.seconds;
    log << j.dump() << '\n' << std::flush;
    std::cout << j.dump() << std::endl;
  });
  const std::string path = o.model_out.empty() ? (fs::path(g.out) / "model.ckpt").string() : o.model_out;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  nn::save_checkpoint(params, path);
  std::cout << "saved " << path << '\n';
}

// --- translate -------------------------------------------------------------

struct TranslateOpts {
  std::string model;
  std::string corpus;
  std::string split = "heldout";
};

void cmd_translate(const Global& g, const TranslateOpts& o) {
  const nn::ModelParams params = nn::load_checkpoint(o.model);
  const harness::Dataset data = harness::load_dataset(o.corpus.empty() ? default_corpus(g) : o.corpus);
  const auto [b, e] = data.split_range(o.split);
  auto os = open_out(fs::path(g.out) / "translations.txt");
  std::vector<std::string> hyps, refs;
  std::size_t truncated = 0;
  for (std::size_t i = b; i < e; ++i) {
    const auto r = decoding::offline_translate(data.features[i].frames, params);
    truncated += r.truncated ? 1 : 0;
    os << data.features[i].id << '\t' << r.hypothesis << '\n';
    hyps.push_back(r.hypothesis);
    refs.push_back(data.references[i]);
  }
  std::cout << "offline BLEU " << metrics::bleu_words(hyps, refs) << " over " << hyps.size() << " utterances";
  if (truncated) std::cout << " (" << truncated << " hit the length cap)";
  std::cout << '\n';
}

// --- simulate --------------------------------------------------------------

struct SimulateOpts {
  std::string model;
  std::string blstm_model;
  std::string corpus;
  std::string split = "heldout";
  std::vector<std::string> strategies{"ulstm-overlap"};
  std::vector<std::string> segmentations{"fixed"};
  std::vector<std::size_t> k{100};
  std::vector<std::size_t> s{10};
  std::vector<std::size_t> n{1};
  std::vector<std::string> bounds{"5-10", "5-20", "5-50", "5-100", "10-50", "10-100"};
  std::vector<std::uint64_t> seeds;
  std::size_t threads = 0;
  std::size_t limit = 0;
  bool timing = true;
  std::string unit = "word";
};

std::pair<std::size_t, std::size_t> parse_bounds(const std::string& text) {
  const auto dash = text.find('-');
  try {
    if (dash == std::string::npos) throw std::invalid_argument(text);
    return {std::stoul(text.substr(0, dash)), std::stoul(text.substr(dash + 1))};
  } catch (const std::logic_error&) {
    throw ConfigError("bad random bounds '" + text + "' (expected LOW-HIGH)");
  }
}

struct LoadedModels {
  nn::ModelParams uni, bi;
  harness::ModelSet set;
};

void load_model(const std::string& path, LoadedModels& m) {
  nn::ModelParams p = nn::load_checkpoint(path);
  if (p.config.directions == 2) {
    m.bi = std::move(p);
    m.set.bidirectional = &m.bi;
  } else {
    m.uni = std::move(p);
    m.set.unidirectional = &m.uni;
  }
}

void cmd_simulate(const Global& g, const SimulateOpts& o) {
  harness::SweepConfig sweep;
  sweep.strategies.clear();
  for (const auto& s : o.strategies) sweep.strategies.push_back(encoding::parse_strategy(s));
  sweep.policies.clear();
  for (const auto& s : o.segmentations) sweep.policies.push_back(segmentation::parse_policy(s));
  sweep.k = o.k;
  sweep.s = o.s;
  sweep.n = o.n;
  sweep.random_bounds.clear();
  for (const auto& b : o.bounds) sweep.random_bounds.push_back(parse_bounds(b));
  sweep.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{g.seed} : o.seeds;
  const std::vector<harness::RunSpec> runs = sweep.expand();

  LoadedModels models;
  if (o.model.empty()) throw ConfigError("simulate needs --model");
  load_model(o.model, models);
  if (!o.blstm_model.empty()) load_model(o.blstm_model, models);

  const harness::Dataset data = harness::load_dataset(o.corpus.empty() ? default_corpus(g) : o.corpus);
  auto [b, e] = data.split_range(o.split);
  if (o.limit > 0) e = std::min(e, b + o.limit);
  const auto sources = data.sources_in(b, e);
  const std::size_t threads = o.threads > 0 ? o.threads : std::max(1u, std::thread::hardware_concurrency());

  const auto results = harness::run_sweep(runs, sources, models.set, {}, threads);
  metrics::TradeoffOptions topt;
  topt.unit = metrics::parse_latency_unit(o.unit);
  const auto rows = harness::score_runs(results, data.reference_map(), topt);

  const fs::path out(g.out);
  ordered_json manifest;
  manifest["corpus"] = o.corpus.empty() ? default_corpus(g) : o.corpus;
  manifest["split"] = o.split;
  manifest["runs"] = ordered_json::array();
  for (const auto& r : results) {
    const fs::path rel = fs::path("traces") / (r.spec.tag() + ".jsonl");
    auto os = open_out(out / rel);
    for (const auto& t : r.traces) decoding::write_trace(os, t);
    const metrics::ConfigKey key = r.spec.key();
    ordered_json j;
    j["strategy"] = key.strategy;
    j["k"] = key.k;
    j["s"] = key.s;
    j["N"] = key.n;
    j["segmentation"] = key.segmentation;
    j["traces"] = rel.string();
    manifest["runs"].push_back(j);
  }
  open_out(out / "manifest.json") << manifest.dump(2) << '\n';
  auto csv = open_out(out / "tradeoff.csv");
  metrics::write_tradeoff_csv(csv, rows, o.timing);
  metrics::write_tradeoff_csv(std::cout, rows, o.timing);
}

// --- bench -----------------------------------------------------------------

struct BenchOpts {
  std::string model;
  std::string blstm_model;
  std::string corpus;
  std::size_t limit = 0;
  std::size_t frames = 2000;
  std::size_t k = 100, s = 10;
  std::size_t repetitions = 20;
};

void cmd_bench(const Global& g, const BenchOpts& o) {
  // Timing does not depend on weight values, so missing checkpoints are
  // replaced by seeded random models of the same shape.
  LoadedModels models;
  if (!o.model.empty()) load_model(o.model, models);
  if (!o.blstm_model.empty()) load_model(o.blstm_model, models);
  nn::ModelConfig cfg;
  cfg.alphabet = "abcdefghijklmnopqrst ";
  if (models.set.unidirectional) cfg = models.uni.config;
  else if (models.set.bidirectional) cfg = models.bi.config;
  if (!models.set.unidirectional) {
    cfg.directions = 1;
    models.uni = nn::init_params(cfg, g.seed);
    models.set.unidirectional = &models.uni;
  }
  if (!models.set.bidirectional) {
    cfg.directions = 2;
    models.bi = nn::init_params(cfg, g.seed);
    models.set.bidirectional = &models.bi;
  }

  harness::Dataset data;
  std::vector<harness::Source> sources;
  ad::Tensor synthetic;
  if (!o.corpus.empty()) {
    data = harness::load_dataset(o.corpus);
    const std::size_t n = o.limit > 0 ? std::min(o.limit, data.size()) : data.size();
    sources = data.sources_in(0, n);
  } else {
    synthetic = ad::Tensor({o.frames, models.uni.config.feature_dim});
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<float> noise;
    for (float& v : synthetic.data()) v = noise(rng);
    sources.push_back({"bench", &synthetic, nullptr});
  }
  harness::BenchOptions bo;
  bo.k = o.k;
  bo.s = o.s;
  bo.repetitions = o.repetitions;
  const auto rows = harness::bench(sources, models.set, bo);
  auto csv = open_out(fs::path(g.out) / "bench.csv");
  harness::write_bench_csv(csv, rows);
  harness::write_bench_csv(std::cout, rows);
}

// --- report ----------------------------------------------------------------

struct ReportOpts {
  std::string runs;
  std::string corpus;
  std::string subset;
  std::string unit = "word";
};

std::size_t parse_subset(const std::string& text) {
  const std::string prefix = "hardest=";
  if (text.rfind(prefix, 0) != 0) throw ConfigError("bad --subset '" + text + "' (expected hardest=N)");
  try {
    return std::stoul(text.substr(prefix.size()));
  } catch (const std::logic_error&) {
    throw ConfigError("bad --subset '" + text + "' (expected hardest=N)");
  }
}

void cmd_report(const Global& g, const ReportOpts& o) {
  const fs::path manifest_path = o.runs.empty() ? fs::path(g.out) / "manifest.json" : fs::path(o.runs);
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open run manifest: " + manifest_path.string());
  const auto manifest = nlohmann::json::parse(is);
  const std::string corpus = o.corpus.empty() ? manifest.at("corpus").get<std::string>() : o.corpus;
  const harness::Dataset data = harness::load_dataset(corpus);
  const auto refs = data.reference_map();
  metrics::TradeoffOptions topt;
  topt.unit = metrics::parse_latency_unit(o.unit);

  std::vector<std::pair<metrics::ConfigKey, std::vector<decoding::DecodeTrace>>> runs;
  for (const auto& r : manifest.at("runs")) {
    metrics::ConfigKey key;
    key.strategy = r.at("strategy").get<std::string>();
    key.k = r.at("k").get<std::size_t>();
    key.s = r.at("s").get<std::size_t>();
    key.n = r.at("N").get<std::size_t>();
    key.segmentation = r.at("segmentation").get<std::string>();
    const fs::path trace_path = manifest_path.parent_path() / r.at("traces").get<std::string>();
    std::ifstream ts(trace_path);
    if (!ts) throw IoError("cannot open trace log: " + trace_path.string());
    runs.emplace_back(key, decoding::read_traces(ts, 10.0, trace_path.string()));
  }
  auto write = [&](const std::string& name, const std::vector<std::string>* ids) {
    std::vector<metrics::TradeoffRow> rows;
    for (const auto& [key, traces] : runs)
      rows.push_back(metrics::tradeoff_row(key, ids ? harness::select(traces, *ids) : traces, refs, topt));
    auto os = open_out(fs::path(g.out) / name);
    metrics::write_tradeoff_csv(os, rows, false);
    std::cout << "wrote " << (fs::path(g.out) / name).string() << '\n';
  };
  write("curves.csv", nullptr);
  if (o.subset.empty()) return;

  const std::size_t n = parse_subset(o.subset);
  // Only utterances that were decoded take part in the ranking.
  std::vector<std::string> decoded;
  for (const auto& t : runs.front().second) decoded.push_back(t.utterance_id);
  std::sort(decoded.begin(), decoded.end());
  std::vector<metrics::DifficultyScore> scores;
  for (const auto& a : data.alignment_sets())
    if (std::binary_search(decoded.begin(), decoded.end(), a.utterance_id))
      scores.push_back(metrics::lagging_difficulty(a));
  const metrics::Subsets subsets = metrics::extract_subsets(scores, n);
  write("curves_hardest.csv", &subsets.hardest);
  write("curves_easiest.csv", &subsets.easiest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulst: simultaneous speech translation simulator"};
  app.set_config("--config", "", "TOML/INI file with option values; flags override the file");
  app.require_subcommand(1);
  // Global options are also accepted after the subcommand name.
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Seed for data, init, shuffling and random segmentation")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "Write a synthetic corpus");
  c_gen->add_option("--count", gen.count)->capture_default_str();
  c_gen->add_option("--min-symbols", gen.min_symbols)->capture_default_str();
  c_gen->add_option("--max-symbols", gen.max_symbols)->capture_default_str();
  c_gen->add_option("--reversal-fraction", gen.reversal_fraction)->capture_default_str();
  c_gen->add_option("--name", gen.name, "File prefix inside --out")->capture_default_str();

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train a model on a corpus");
  c_train->add_option("--corpus", tr.corpus, "Corpus prefix (default <out>/corpus)");
  c_train->add_option("--model-out", tr.model_out, "Checkpoint path (default <out>/model.ckpt)");
  c_train->add_option("--epochs", tr.recipe.epochs)->capture_default_str();
  c_train->add_option("--optimizer", tr.optimizer, "adam or sgd")->capture_default_str();
  c_train->add_option("--lr", tr.recipe.lr)->capture_default_str();
  c_train->add_option("--momentum", tr.recipe.momentum, "SGD momentum")->capture_default_str();
  c_train->add_option("--clip", tr.recipe.grad_clip, "Global gradient-norm clip")->capture_default_str();
  c_train->add_option("--batch", tr.recipe.batch_size)->capture_default_str();
  c_train->add_option("--curriculum-start", tr.recipe.curriculum_start, "0 disables the curriculum")
      ->capture_default_str();
  c_train->add_option("--curriculum-step", tr.recipe.curriculum_step)->capture_default_str();
  c_train->add_option("--lr-decay", tr.recipe.lr_decay, "Per-epoch learning-rate factor")->capture_default_str();
  c_train->add_option("--decay-after", tr.recipe.decay_after, "First epoch before decay starts")
      ->capture_default_str();
  c_train->add_option("--eval-limit", tr.recipe.eval_limit, "Held-out utterances scored per epoch, 0 = all")
      ->capture_default_str();
  c_train->add_option("--directions", tr.directions, "1 (ULSTM) or 2 (BLSTM)")->capture_default_str();
  c_train->add_option("--hidden", tr.hidden)->capture_default_str();
  c_train->add_option("--layers", tr.layers)->capture_default_str();

  TranslateOpts tl;
  auto* c_tl = app.add_subcommand("translate", "Offline greedy decoding");
  c_tl->add_option("--model", tl.model)->required();
  c_tl->add_option("--corpus", tl.corpus);
  c_tl->add_option("--split", tl.split, "all, train or heldout")->capture_default_str();

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Run an online decoding sweep");
  c_sim->add_option("--model", sim.model)->required();
  c_sim->add_option("--blstm-model", sim.blstm_model, "Bidirectional checkpoint for blstm-reencode");
  c_sim->add_option("--corpus", sim.corpus);
  c_sim->add_option("--split", sim.split)->capture_default_str();
  c_sim->add_option("--strategy", sim.strategies)->capture_default_str();
  c_sim->add_option("--segmentation", sim.segmentations, "fixed, oracle or random")->capture_default_str();
  c_sim->add_option("--k", sim.k)->capture_default_str();
  c_sim->add_option("--s", sim.s)->capture_default_str();
  c_sim->add_option("--N", sim.n)->capture_default_str();
  c_sim->add_option("--bounds", sim.bounds, "Random segmentation bounds LOW-HIGH")->capture_default_str();
  c_sim->add_option("--seeds", sim.seeds, "Random segmentation seeds (default --seed)");
  c_sim->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->capture_default_str();
  c_sim->add_option("--limit", sim.limit, "Decode at most this many utterances")->capture_default_str();
  c_sim->add_flag("!--no-timing", sim.timing, "Write wall_ns as 0 for byte-reproducible CSVs");
  c_sim->add_option("--unit", sim.unit, "AL reference length unit: word or char")->capture_default_str();

  BenchOpts bn;
  auto* c_bn = app.add_subcommand("bench", "Time the encoding strategies on one thread");
  c_bn->add_option("--model", bn.model);
  c_bn->add_option("--blstm-model", bn.blstm_model);
  c_bn->add_option("--corpus", bn.corpus, "Corpus prefix; without it one random utterance is used");
  c_bn->add_option("--limit", bn.limit)->capture_default_str();
  c_bn->add_option("--frames", bn.frames, "Length of the random utterance")->capture_default_str();
  c_bn->add_option("--k", bn.k)->capture_default_str();
  c_bn->add_option("--s", bn.s)->capture_default_str();
  c_bn->add_option("--repetitions", bn.repetitions)->capture_default_str();

  ReportOpts rp;
  auto* c_rp = app.add_subcommand("report", "BLEU/AL curves from a simulate run");
  c_rp->add_option("--runs", rp.runs, "manifest.json written by simulate (default <out>/manifest.json)");
  c_rp->add_option("--corpus", rp.corpus, "Corpus prefix (default: the one in the manifest)");
  c_rp->add_option("--subset", rp.subset, "hardest=N: extra curves for the N hardest and easiest utterances");
  c_rp->add_option("--unit", rp.unit)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_gen) cmd_generate(g, gen);
    if (*c_train) cmd_train(g, tr);
    if (*c_tl) cmd_translate(g, tl);
    if (*c_sim) cmd_simulate(g, sim);
    if (*c_bn) cmd_bench(g, bn);
    if (*c_rp) cmd_report(g, rp);
  } catch (const std::exception& e) {
    std::cerr << "simulst: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
