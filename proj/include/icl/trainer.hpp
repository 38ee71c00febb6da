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

// Training loop with validation-driven in-sample curriculum, plus run outputs.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/checkpoint.hpp"
#include "icl/config.hpp"
#include "icl/curriculum.hpp"
#include "icl/data.hpp"
#include "icl/decoding.hpp"
#include "icl/loss.hpp"
#include "icl/metrics.hpp"
#include "icl/model.hpp"
#include "icl/optim.hpp"
#include "icl/ranking.hpp"

namespace icl {

// ---------------------------------------------------------------------------
// Data

struct Dataset {
  Vocabulary vocab;
  TokenizerMode tokenizer = TokenizerMode::whitespace;
  Corpus train, val, test;
};

// Vocabulary comes from the training split only; val/test tokens outside it map to UNK.
inline Dataset load_dataset(const DataConfig& d) {
  Dataset ds;
  ds.tokenizer = d.tokenizer;
  if (d.source == "synthetic") {
    SyntheticSpec spec{d.task, d.train_count, d.min_len, d.max_len, d.symbols, d.seed};
    ds.train = gen_synthetic(spec, Split::train);
    spec.count = d.val_count;
    spec.seed = mix_seed(d.seed, 1);
    ds.val = gen_synthetic(spec, Split::val);
    if (d.test_count > 0) {
      spec.count = d.test_count;
      spec.seed = mix_seed(d.seed, 2);
      ds.test = gen_synthetic(spec, Split::test);
    }
    ds.tokenizer = TokenizerMode::whitespace;
  } else {
    ds.train = load_jsonl(d.train, Split::train);
    ds.val = load_jsonl(d.val, Split::val);
    if (!d.test.empty()) ds.test = load_jsonl(d.test, Split::test);
  }
  if (ds.val.empty()) throw Error("empty validation set");
  ds.vocab = build_vocab(ds.train, ds.tokenizer);
  encode_corpus(ds.train, ds.vocab, ds.tokenizer);
  encode_corpus(ds.val, ds.vocab, ds.tokenizer);
  if (!ds.test.empty()) encode_corpus(ds.test, ds.vocab, ds.tokenizer);
  return ds;
}

// ---------------------------------------------------------------------------
// Report

struct ValidationRecord {
  long step = 0;
  std::size_t epoch = 0;
  double p = 0.0;  // fraction in effect for the preceding updates
  double value = 0.0;
  bool improved = false;
  double val_loss = 0.0;
  std::string action;
};

struct PhaseEvent {
  long step = 0;
  double old_p = 0.0;
  double new_p = 0.0;
};

struct EpochP {
  std::size_t epoch = 0;
  double p = 0.0;
};

struct TestMetrics {
  TextScores scores;
  NllTotals nll;
};

struct TrainReport {
  std::string variant;
  nlohmann::json config;
  std::size_t parameter_count = 0;
  std::size_t vocab_size = 0;
  std::vector<ValidationRecord> records;
  std::vector<PhaseEvent> events;
  std::vector<EpochP> epoch_p;
  long best_step = 0;
  std::size_t best_epoch = 0;
  double best_value = 0.0;
  double best_val_loss = 0.0;
  std::size_t epochs = 0;
  long steps = 0;
  std::string stop_reason;
  std::optional<TestMetrics> test;
  double wall_seconds = 0.0;  // not part of report.json
};

inline nlohmann::json text_scores_json(const TextScores& s) {
  return {{"exact_match", s.exact_match}, {"bleu1", s.bleu[0]}, {"bleu2", s.bleu[1]}, {"bleu3", s.bleu[2]},
          {"bleu4", s.bleu[3]}, {"rouge1_f1", s.rouge1_f1}, {"rouge2_f1", s.rouge2_f1}, {"rougeL_f1", s.rougeL_f1}};
}

inline nlohmann::json to_json(const TrainReport& r) {
  using nlohmann::json;
  json records = json::array();
  for (const auto& v : r.records) {
    records.push_back({{"step", v.step}, {"epoch", v.epoch}, {"p", v.p}, {"metric", v.value},
                       {"improved", v.improved}, {"val_loss", v.val_loss}, {"action", v.action}});
  }
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back({{"event", "phase"}, {"step", e.step}, {"old_p", e.old_p}, {"new_p", e.new_p}});
  }
  json epoch_p = json::array();
  for (const auto& e : r.epoch_p) epoch_p.push_back({{"epoch", e.epoch}, {"p", e.p}});
  json out{{"format", "icl-report-v1"},
           {"variant", r.variant},
           {"config", r.config},
           {"model", {{"parameter_count", r.parameter_count}, {"vocab_size", r.vocab_size}}},
           {"records", records},
           {"events", events},
           {"epoch_p", epoch_p},
           {"best",
            {{"step", r.best_step}, {"epoch", r.best_epoch}, {"metric", r.best_value},
             {"val_loss", r.best_val_loss}, {"checkpoint", "best.ckpt"}}},
           {"totals", {{"epochs", r.epochs}, {"steps", r.steps}}},
           {"stop_reason", r.stop_reason}};
  if (r.test) {
    json t = text_scores_json(r.test->scores);
    t["loss"] = r.test->nll.mean();
    t["perplexity"] = r.test->nll.perplexity();
    out["test"] = t;
  } else {
    out["test"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation helpers

// Summed full-sequence NLL (EOS included) of a corpus, scored in padded batches.
inline NllTotals batched_nll(const ModelParams& params, const Corpus& corpus, std::size_t batch = 32) {
  if (corpus.empty()) throw Error("empty corpus");
  NllTotals acc;
  for (std::size_t s = 0; s < corpus.size(); s += batch) {
    const std::size_t e = std::min(corpus.size(), s + batch);
    std::vector<std::vector<int>> xs, ys;
    for (std::size_t i = s; i < e; ++i) {
      xs.push_back(corpus.samples[i].input_ids);
      ys.push_back(corpus.samples[i].output_ids);
      ys.back().push_back(kEos);
    }
    Tape tape(false);
    BoundParams bp(tape, params, false);
    const auto rows = teacher_forced_batch(tape, bp, xs, ys);
    for (std::size_t b = 0; b < ys.size(); ++b) {
      for (std::size_t t = 0; t < ys[b].size(); ++t) {
        acc.total_nll -= tape.value(rows[t]).at(b, static_cast<std::size_t>(ys[b][t]));
      }
      acc.positions += ys[b].size();
    }
  }
  return acc;
}

inline std::vector<std::vector<int>> decode_corpus(const ModelParams& params, const Corpus& corpus,
                                                   const DecodeConfig& cfg) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.samples) {
    Seq2SeqScorer scorer(params, s.input_ids);
    out.push_back(generate(scorer, cfg));
  }
  return out;
}

inline TextScores decode_scores(const ModelParams& params, const Corpus& corpus, const DecodeConfig& cfg) {
  std::vector<std::vector<int>> refs;
  for (const auto& s : corpus.samples) refs.push_back(s.output_ids);
  return score_corpus(decode_corpus(params, corpus, cfg), refs);
}

inline double metric_value(const std::string& metric, const ModelParams& params, const Corpus& corpus,
                           const DecodeConfig& cfg, const NllTotals& nll) {
  if (metric == "loss") return nll.mean();
  if (metric == "perplexity") return nll.perplexity();
  const TextScores s = decode_scores(params, corpus, cfg);
  if (metric == "rouge1_f1") return s.rouge1_f1;
  if (metric == "rouge2_f1") return s.rouge2_f1;
  if (metric == "rougeL_f1") return s.rougeL_f1;
  if (metric == "bleu4") return s.bleu[3];
  if (metric == "exact_match") return s.exact_match;
  throw Error("unknown validation metric '" + metric + "'");
}

// Computes the configured metric on D_v and compares it with the tracker's best.
inline ValidationVerdict validate_now(const ModelParams& params, const Corpus& val, const std::string& metric,
                                      ImprovementTracker& tracker, const DecodeConfig& cfg = {},
                                      NllTotals* nll_out = nullptr) {
  if (val.empty()) throw Error("empty validation set");
  const NllTotals nll = batched_nll(params, val);
  if (nll_out) *nll_out = nll;
  const double value = metric_value(metric, params, val, cfg, nll);
  return {tracker.observe(value).improved, value, metric};
}

// ---------------------------------------------------------------------------
// Training

struct TrainHooks {
  std::function<void(long step, std::size_t epoch, double loss)> on_step;
  std::function<void(const ValidationRecord&)> on_validation;
  // Called with each batch's masks before the update.
  std::function<void(long step, const std::vector<std::vector<int>>& targets, const std::vector<LossMask>& masks)>
      on_batch;
};

struct TrainResult {
  TrainReport report;
  ModelParams best;
};

inline ModelConfig model_config_for(const RunConfig& c, std::size_t vocab_size) {
  return {vocab_size, c.model.embed_dim, c.model.hidden_dim, c.model.layers, mix_seed(c.seed, 1)};
}

namespace detail {

// Shuffled-epoch batching: sort windows of `bucket` samples by input length,
// cut them into batches, then shuffle the batch order.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, const Corpus& corpus,
                                                          std::size_t batch_size, std::size_t bucket, bool sorted,
                                                          Rng& rng) {
  std::vector<std::size_t> seq = order;
  if (!sorted && bucket > 1) {
    for (std::size_t c = 0; c < seq.size(); c += bucket) {
      const auto e = std::min(seq.size(), c + bucket);
      std::stable_sort(seq.begin() + static_cast<std::ptrdiff_t>(c), seq.begin() + static_cast<std::ptrdiff_t>(e),
                       [&](std::size_t a, std::size_t b) {
                         return corpus.samples[a].input_ids.size() < corpus.samples[b].input_ids.size();
                       });
    }
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t s = 0; s < seq.size(); s += batch_size) {
    batches.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(s),
                         seq.begin() + static_cast<std::ptrdiff_t>(std::min(seq.size(), s + batch_size)));
  }
  if (!sorted && bucket > 1) shuffle(batches, rng);
  return batches;
}

}  // namespace detail

inline TrainResult train(const RunConfig& cfg, const Dataset& data, const TrainHooks& hooks = {},
                         const std::string& variant = "") {
  cfg.validate();
  if (data.train.empty()) throw Error("empty corpus");
  if (data.val.empty()) throw Error("empty validation set");
  const auto wall0 = std::chrono::steady_clock::now();

  const auto& cu = cfg.curriculum;
  const std::size_t N = data.train.size();
  const long steps_per_epoch = static_cast<long>((N + cfg.optim.batch_size - 1) / cfg.optim.batch_size);
  const long tcl_T = cu.tcl_steps > 0 ? cu.tcl_steps : 2 * steps_per_epoch;

  ModelParams params = init_model(model_config_for(cfg, data.vocab.size()));
  OptimizerState opt = make_adam({cfg.optim.lr, cfg.optim.beta1, cfg.optim.beta2, cfg.optim.eps});
  CurriculumState sched = cu.algorithm == Algorithm::icl
                              ? new_schedule(cu.p_start, cu.stride, cu.strategy, cu.patience, mix_seed(cfg.seed, 2))
                              : new_schedule(0.0, 0.0, Strategy::decrease, cu.patience, mix_seed(cfg.seed, 2));
  const bool random_batch = cu.algorithm == Algorithm::icl && cu.strategy == Strategy::random &&
                            cu.random_granularity == "batch";
  ImprovementTracker tracker(cfg.validation.metric, cfg.validation.resolved_direction());

  std::vector<std::size_t> perm(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t sorted_epochs = 0;
  if (cfg.ranking.strategy) {
    perm = order_corpus(data.train, *cfg.ranking.strategy);
    sorted_epochs = cfg.ranking.sorted_epochs;
  }
  Rng batch_rng(mix_seed(cfg.seed, 4));

  TrainReport rep;
  rep.variant = variant;
  rep.config = to_json(cfg);
  rep.parameter_count = parameter_count(params.config);
  rep.vocab_size = data.vocab.size();
  ModelParams best = params;
  bool have_best = false;
  long step = 0;
  std::size_t epoch = 0;

  auto effective_p = [&]() {
    if (cu.algorithm == Algorithm::tcl) return snap_fraction(1.0 - tcl_fraction(step, tcl_T, cu.f0));
    return sched.p;
  };
  auto set_random_p = [&]() {
    const double old = sched.p;
    redraw(sched);
    if (sched.p != old) rep.events.push_back({step, old, sched.p});
  };

  auto validate = [&](double p_used) {
    NllTotals nll;
    const ValidationVerdict v = validate_now(params, data.val, cfg.validation.metric, tracker, cfg.decode, &nll);
    ValidationRecord rec{step, epoch, p_used, v.value, v.improved, nll.mean(), ""};
    if (v.improved) {
      best = params;
      have_best = true;
      rep.best_step = step;
      rep.best_epoch = epoch;
      rep.best_value = v.value;
      rep.best_val_loss = nll.mean();
    }
    if (cu.algorithm == Algorithm::tcl && step < tcl_T) {
      rec.action = v.improved ? "keep_best" : "curriculum";
    } else {
      const double old = sched.p;
      const ScheduleAction a = on_validation(sched, v);
      rec.action = to_string(a.kind);
      if (a.kind == ScheduleAction::Kind::advance_phase) rep.events.push_back({step, old, sched.p});
    }
    rep.records.push_back(rec);
    if (hooks.on_validation) hooks.on_validation(rec);
  };

  try {
    for (epoch = 1; epoch <= cfg.max_epochs && sched.status == ScheduleStatus::running; ++epoch) {
      if (epoch > 1 && cu.algorithm == Algorithm::icl && cu.strategy == Strategy::random && !random_batch) {
        set_random_p();
      }
      opt.config.lr = cfg.optim.lr * std::pow(cfg.optim.lr_decay, static_cast<double>(epoch - 1));
      rep.epoch_p.push_back({epoch, effective_p()});
      rep.epochs = epoch;
      const auto order = curriculum_feed(perm, sorted_epochs, epoch, mix_seed(cfg.seed, 3));
      const bool sorted = epoch <= sorted_epochs;
      const auto batches = detail::make_batches(order, data.train, cfg.optim.batch_size, cfg.optim.bucket, sorted,
                                                batch_rng);
      for (const auto& batch : batches) {
        if (random_batch && step > 0) set_random_p();
        const double p = effective_p();
        const CutSpec spec{p, cu.criterion, cu.algorithm == Algorithm::none ? Weighting::hard : cu.weighting, cu.ramp};
        std::vector<std::vector<int>> xs, ys;
        std::vector<LossMask> masks;
        for (std::size_t i : batch) {
          const auto& s = data.train.samples[i];
          xs.push_back(s.input_ids);
          ys.push_back(s.output_ids);
          ys.back().push_back(kEos);
          masks.push_back(with_eos(mask_for(s.output_ids.size(), spec)));
        }
        if (hooks.on_batch) hooks.on_batch(step, ys, masks);
        Tape tape;
        BoundParams bp(tape, params, true);
        const Var loss = batch_masked_loss(tape, bp, xs, ys, masks);
        tape.backward(loss);
        TensorMap grads;
        for (const auto& [name, v] : bp.vars()) grads.emplace(name, tape.grad(v));
        clip_global_norm(grads, cfg.optim.clip_norm);
        adam_step(opt, params.tensors, grads);
        ++step;
        if (hooks.on_step) hooks.on_step(step, epoch, tape.value(loss).item());
        if (cfg.validation.every == "steps" && step % static_cast<long>(cfg.validation.interval) == 0) {
          validate(p);
          if (sched.status != ScheduleStatus::running) break;
        }
      }
      if (sched.status == ScheduleStatus::running && cfg.validation.every == "epoch" &&
          epoch % cfg.validation.interval == 0) {
        validate(effective_p());
      }
    }
    if (!have_best) validate(effective_p());
  } catch (const NumericError& e) {
    throw Error("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " +
                e.what());
  }
  rep.steps = step;
  rep.stop_reason = sched.status == ScheduleStatus::terminated ? "early_stop" : "max_epochs";

  if (!data.test.empty()) {
    TestMetrics t;
    std::vector<std::vector<int>> refs;
    for (const auto& s : data.test.samples) refs.push_back(s.output_ids);
    t.scores = score_corpus(decode_corpus(best, data.test, cfg.decode), refs);
    t.nll = batched_nll(best, data.test);
    rep.test = t;
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return {std::move(rep), std::move(best)};
}

// ---------------------------------------------------------------------------
// Outputs

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline std::string curve_csv(const TrainReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "step,epoch,p,metric,improved\n";
  for (const auto& v : r.records) {
    os << v.step << ',' << v.epoch << ',' << v.p << ',' << v.value << ',' << (v.improved ? 1 : 0) << '\n';
  }
  return os.str();
}

// report.json, curve.csv, timing.json and best.ckpt under `dir`.
inline void write_run(const std::filesystem::path& dir, const TrainResult& result, const Dataset& data) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", to_json(result.report).dump(2) + "\n");
  write_text(dir / "curve.csv", curve_csv(result.report));
  write_text(dir / "timing.json",
             nlohmann::json{{"wall_seconds", result.report.wall_seconds}, {"steps", result.report.steps}}.dump(2) +
                 "\n");
  Checkpoint ck{result.best, data.vocab, data.tokenizer,
                {{"variant", result.report.variant}, {"best_step", result.report.best_step},
                 {"decode", result.report.config.at("decode")}}};
  save_checkpoint((dir / "best.ckpt").string(), ck);
}

}  // namespace icl
