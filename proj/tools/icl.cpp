// Copyright 2026 The ICL Authors.
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

// icl: command-line front end for training, evaluation, decoding and presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icl/checkpoint.hpp"
#include "icl/compare.hpp"
#include "icl/config.hpp"
#include "icl/presets.hpp"
#include "icl/ranking.hpp"
#include "icl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

icl::RunConfig config_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
  icl::RunConfig c = path.empty() ? icl::RunConfig{} : icl::load_config(path);
  for (const auto& s : sets) c = icl::apply_override(c, s);
  return c;
}

icl::Corpus encode_with(const icl::Checkpoint& ck, const std::string& path, icl::Split split) {
  icl::Corpus c = icl::load_jsonl(path, split);
  icl::encode_corpus(c, ck.vocab, ck.tokenizer);
  return c;
}

// Decode settings: checkpoint defaults, then any flags given on the command line.
struct DecodeFlags {
  std::size_t beams = 0;
  double length_penalty = -1.0;
  int no_repeat = -1;
  int min_len = -1;
  int max_len = -1;

  void add(CLI::App* app) {
    app->add_option("--beams", beams, "beam width (1 = greedy)");
    app->add_option("--length-penalty", length_penalty, "length penalty exponent");
    app->add_option("--no-repeat-ngram", no_repeat, "block repeated n-grams of this size (0 = off)");
    app->add_option("--min-len", min_len, "minimum output length");
    app->add_option("--max-len", max_len, "maximum output length");
  }

  icl::DecodeConfig resolve(const icl::Checkpoint& ck) const {
    icl::DecodeConfig d;
    if (ck.meta.contains("decode")) {
      const auto& j = ck.meta.at("decode");
      d.num_beams = j.value("num_beams", d.num_beams);
      d.length_penalty = j.value("length_penalty", d.length_penalty);
      d.no_repeat_ngram_size = j.value("no_repeat_ngram", d.no_repeat_ngram_size);
      d.min_len = j.value("min_len", d.min_len);
      d.max_len = j.value("max_len", d.max_len);
    }
    if (beams > 0) d.num_beams = beams;
    if (length_penalty >= 0.0) d.length_penalty = length_penalty;
    if (no_repeat >= 0) d.no_repeat_ngram_size = static_cast<std::size_t>(no_repeat);
    if (min_len >= 0) d.min_len = static_cast<std::size_t>(min_len);
    if (max_len >= 0) d.max_len = static_cast<std::size_t>(max_len);
    d.validate();
    return d;
  }
};

json decode_json(const icl::DecodeConfig& d) {
  return {{"num_beams", d.num_beams}, {"length_penalty", d.length_penalty},
          {"no_repeat_ngram", d.no_repeat_ngram_size}, {"min_len", d.min_len}, {"max_len", d.max_len}};
}

void print_row(const icl::CompareRow& r) {
  std::cerr << "[" << r.variant << " seed " << r.seed << "] " << r.status;
  if (r.report) {
    std::cerr << " val_loss=" << r.report->best_val_loss << " epochs=" << r.report->epochs
              << " steps=" << r.report->steps << " (" << r.report->wall_seconds << "s)";
  }
  std::cerr << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"in-sample curriculum learning for sequence-to-sequence models"};
  app.require_subcommand(1);

  // train
  std::string config_path, out_dir = "out", variant;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--config", config_path, "config file (icl-config-v1)");
  auto* seed_opt = train->add_option("--seed", seed, "training seed");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--variant", variant, "variant, e.g. ICL-SC or ICL-SC+InLen@decrease:0.6/0.3");
  train->add_option("--set", sets, "override, section.key=value")->take_all();

  // evaluate
  std::string ckpt_path, data_path, per_sample;
  DecodeFlags eval_flags;
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a JSONL corpus");
  evaluate->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  evaluate->add_option("--data", data_path, "JSONL corpus")->required();
  evaluate->add_option("--per-sample", per_sample, "write per-sample CSV here");
  eval_flags.add(evaluate);

  // generate
  std::string gen_out;
  DecodeFlags gen_flags;
  auto* generate = app.add_subcommand("generate", "decode inputs from a JSONL file");
  generate->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  generate->add_option("--data", data_path, "JSONL with an \"input\" field per line")->required();
  generate->add_option("--out", gen_out, "output JSONL (default stdout)");
  gen_flags.add(generate);

  // rank
  std::string rank_strategy, tokenizer = "whitespace", rank_out;
  auto* rank = app.add_subcommand("rank", "order a corpus easy to hard");
  rank->add_option("--data", data_path, "JSONL corpus")->required();
  rank->add_option("--strategy", rank_strategy, "inlen|outlen|compr|abstr")->required();
  rank->add_option("--tokenizer", tokenizer, "whitespace|char");
  rank->add_option("--out", rank_out, "output CSV (default stdout)");

  // compare
  std::size_t jobs = 0;
  auto* compare = app.add_subcommand("compare", "run the variant x seed matrix");
  compare->add_option("--config", config_path, "config file (icl-config-v1)")->required();
  compare->add_option("--out", out_dir, "output directory");
  compare->add_option("--jobs", jobs, "parallel rows (default: compare.jobs)");
  compare->add_option("--set", sets, "override, section.key=value")->take_all();

  // preset
  std::string preset_name, preset_out = "runs";
  auto* preset = app.add_subcommand("preset", "desk-scale experiment presets");
  preset->require_subcommand(1);
  auto* preset_ls = preset->add_subcommand("list", "list presets");
  auto* preset_run = preset->add_subcommand("run", "run a preset into <out>/<name>/");
  preset_run->add_option("name", preset_name, "preset name")->required();
  preset_run->add_option("--out", preset_out, "parent directory");

  // stats / synth
  auto* stats = app.add_subcommand("stats", "corpus length statistics");
  stats->add_option("--data", data_path, "JSONL corpus")->required();
  stats->add_option("--tokenizer", tokenizer, "whitespace|char");
  std::string task = "reverse";
  std::size_t count = 100, min_len = 5, max_len = 20, symbols = 8;
  std::uint64_t synth_seed = 42;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus as JSONL to stdout");
  synth->add_option("--task", task, "copy|reverse|sort|add");
  synth->add_option("--count", count, "samples");
  synth->add_option("--min-len", min_len, "minimum length");
  synth->add_option("--max-len", max_len, "maximum length");
  synth->add_option("--symbols", symbols, "alphabet size for copy/reverse");
  synth->add_option("--seed", synth_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      icl::RunConfig cfg = config_with_overrides(config_path, sets);
      if (!variant.empty()) cfg = icl::apply_variant(cfg, variant);
      if (*seed_opt) cfg.seed = seed;
      const icl::Dataset data = icl::load_dataset(cfg.data);
      icl::TrainHooks hooks;
      hooks.on_validation = [](const icl::ValidationRecord& r) {
        std::cerr << "epoch " << r.epoch << " step " << r.step << " p=" << r.p << " metric=" << r.value
                  << (r.improved ? " *" : "") << " " << r.action << "\n";
      };
      const icl::TrainResult r = icl::train(cfg, data, hooks, variant);
      icl::write_run(out_dir, r, data);
      std::cout << icl::to_json(r.report).at("test").dump(2) << "\n";
    } else if (*evaluate) {
      const icl::Checkpoint ck = icl::load_checkpoint(ckpt_path);
      const icl::Corpus corpus = encode_with(ck, data_path, icl::Split::test);
      const icl::DecodeConfig dc = eval_flags.resolve(ck);
      const auto hyps = icl::decode_corpus(ck.params, corpus, dc);
      std::vector<std::vector<int>> refs;
      for (const auto& s : corpus.samples) refs.push_back(s.output_ids);
      const icl::NllTotals nll = icl::batched_nll(ck.params, corpus);
      json out = icl::text_scores_json(icl::score_corpus(hyps, refs));
      out["loss"] = nll.mean();
      out["perplexity"] = nll.perplexity();
      std::cout << out.dump(2) << "\n";
      if (!per_sample.empty()) {
        std::ofstream os(per_sample);
        if (!os) throw icl::Error("cannot write " + per_sample);
        os << "index,exact_match,rouge1_f1,rouge2_f1,rougeL_f1\n";
        for (std::size_t i = 0; i < hyps.size(); ++i) {
          os << i << ',' << (hyps[i] == refs[i] ? 1 : 0) << ',' << icl::rouge_n(hyps[i], refs[i], 1).f1 << ','
             << icl::rouge_n(hyps[i], refs[i], 2).f1 << ',' << icl::rouge_l(hyps[i], refs[i]).f1 << '\n';
        }
      }
    } else if (*generate) {
      const icl::Checkpoint ck = icl::load_checkpoint(ckpt_path);
      const icl::DecodeConfig dc = gen_flags.resolve(ck);
      std::ifstream in(data_path);
      if (!in) throw icl::Error("cannot open " + data_path);
      std::ofstream file;
      if (!gen_out.empty()) {
        file.open(gen_out);
        if (!file) throw icl::Error("cannot write " + gen_out);
      }
      std::ostream& os = gen_out.empty() ? std::cout : file;
      os << json{{"config", {{"decode", decode_json(dc)}, {"tokenizer", icl::to_string(ck.tokenizer)}}}}.dump()
         << "\n";
      std::string line;
      for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("input") || !j["input"].is_string()) {
          throw icl::Error(data_path + ":" + std::to_string(no) + ": expected an object with a string \"input\"");
        }
        const std::string input = j["input"].get<std::string>();
        const auto ids = ck.vocab.encode(icl::tokenize(input, ck.tokenizer));
        icl::Seq2SeqScorer scorer(ck.params, ids);
        const auto out_ids = icl::generate(scorer, dc);
        const auto toks = ck.vocab.decode(out_ids);
        os << json{{"input", input}, {"output", icl::detokenize(toks, ck.tokenizer)}}.dump() << "\n";
      }
    } else if (*rank) {
      const auto mode = icl::parse_tokenizer_mode(tokenizer);
      icl::Corpus corpus = icl::load_jsonl(data_path);
      icl::encode_corpus(corpus, icl::build_vocab(corpus, mode), mode);
      const auto strategy = icl::parse_rank_strategy(rank_strategy);
      std::ofstream file;
      if (!rank_out.empty()) {
        file.open(rank_out);
        if (!file) throw icl::Error("cannot write " + rank_out);
      }
      std::ostream& os = rank_out.empty() ? std::cout : file;
      os.precision(17);
      os << "index,strategy,raw_score,rank\n";
      for (const auto& d : icl::rank_corpus(corpus, strategy)) {
        os << d.index << ',' << icl::to_string(d.strategy) << ',' << d.raw_score << ',' << d.rank << '\n';
      }
    } else if (*compare) {
      const icl::RunConfig cfg = config_with_overrides(config_path, sets);
      const icl::Dataset data = icl::load_dataset(cfg.data);
      icl::CompareOptions opts;
      opts.jobs = jobs ? jobs : cfg.compare.jobs;
      opts.out_dir = out_dir;
      opts.on_row = print_row;
      const auto rows = icl::run_compare(cfg, cfg.compare.variants, cfg.compare.seeds, data, opts);
      fs::create_directories(out_dir);
      icl::write_text(fs::path(out_dir) / "compare.json", icl::compare_json(rows).dump(2) + "\n");
      icl::write_text(fs::path(out_dir) / "compare.csv", icl::compare_csv(rows));
      icl::write_text(fs::path(out_dir) / "summary.csv", icl::summary_csv(rows));
      json timing = json::array();
      for (const auto& r : rows) {
        timing.push_back({{"variant", r.variant}, {"seed", r.seed},
                          {"wall_seconds", r.report ? r.report->wall_seconds : 0.0}});
      }
      icl::write_text(fs::path(out_dir) / "timing.json", timing.dump(2) + "\n");
      std::cout << icl::compare_csv(rows) << "\n" << icl::summary_csv(rows);
    } else if (*preset_ls) {
      for (const auto& p : icl::preset_list()) {
        std::cout << p.name << "\t" << p.variants.size() << " rows x " << p.seeds.size() << " seeds\t"
                  << p.description << "\n";
      }
    } else if (*preset_run) {
      const icl::ExperimentPreset p = icl::find_preset(preset_name);
      const icl::PresetResult r = icl::run_preset(p);
      icl::write_preset(fs::path(preset_out) / p.name, r);
      std::cout << r.table;
    } else if (*stats) {
      const icl::CorpusStats s = icl::corpus_stats(icl::load_jsonl(data_path), icl::parse_tokenizer_mode(tokenizer));
      std::cout << json{{"count", s.count}, {"avg_out_len", s.avg_out_len}, {"std_out_len", s.std_out_len},
                        {"avg_in_len", s.avg_in_len}}
                       .dump(2)
                << "\n";
    } else if (*synth) {
      icl::write_jsonl(std::cout, icl::gen_synthetic({icl::parse_synthetic_task(task), count, min_len, max_len,
                                                      symbols, synth_seed}));
    }
  } catch (const std::exception& e) {
    std::cerr << "icl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
