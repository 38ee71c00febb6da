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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion.
//
//   icl_acceptance            run all
//   icl_acceptance AC7 AC9    run a subset

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "icl/compare.hpp"
#include "icl/config.hpp"
#include "icl/curriculum.hpp"
#include "icl/decoding.hpp"
#include "icl/loss.hpp"
#include "icl/metrics.hpp"
#include "icl/model.hpp"
#include "icl/presets.hpp"
#include "oracles.hpp"

using namespace icl;
namespace fs = std::filesystem;

namespace {

// Collects failures; the first few are kept for the report line.
struct Outcome {
  std::size_t checks = 0;
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  bool passed() const { return failures.empty() && checks > 0; }
};

std::string str(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Tensor random_logprobs(Rng& rng, std::size_t n, std::size_t v) {
  Tensor t({n, v});
  for (std::size_t r = 0; r < n; ++r) {
    double z = 0;
    for (std::size_t c = 0; c < v; ++c) z += (t.at(r, c) = std::exp(uniform(rng, -3, 3)));
    for (std::size_t c = 0; c < v; ++c) t.at(r, c) = std::log(t.at(r, c) / z);
  }
  return t;
}

std::vector<int> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<int> out(n);
  for (int& v : out) v = static_cast<int>(kNumReserved + uniform_index(rng, vocab - kNumReserved));
  return out;
}

// --- AC1

Outcome ac1() {
  Outcome o;
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + uniform_index(rng, 24), v = 2 + uniform_index(rng, 20);
    const Tensor lp = random_logprobs(rng, n, v);
    std::vector<int> gold(n);
    for (int& g : gold) g = static_cast<int>(uniform_index(rng, v));
    const double d = std::abs(masked_nll(lp, gold, mask_for(n, {0.0, Criterion::sc})) - oracle::unmasked_nll(lp, gold));
    worst = std::max(worst, d);
    o.expect(d <= 1e-12, "case " + std::to_string(i) + " differs by " + str(d));
  }
  o.note = "1000 cases, max |diff| " + str(worst);
  return o;
}

// --- AC2

Outcome ac2() {
  Outcome o;
  const struct {
    std::size_t n;
    double p;
    std::size_t c;
  } table[] = {{5, 0.6, 3}, {5, 0.0, 1}, {1, 0.0, 1}, {64, 0.0, 1}, {5, 1.0, 5}, {1, 1.0, 1},
               {64, 1.0, 64}, {3, 0.1, 1}, {1, 0.9, 1}, {2, 0.01, 1}, {10, 0.7, 7}, {10, 0.3, 3}};
  for (const auto& row : table) {
    const std::size_t got = cutting_point(row.n, row.p);
    o.expect(got == row.c, "cutting_point(" + std::to_string(row.n) + ", " + str(row.p) + ") = " +
                               std::to_string(got) + ", want " + std::to_string(row.c));
  }
  std::size_t pairs = 0;
  for (std::size_t n = 1; n <= 64; ++n) {
    for (std::size_t c = 1; c <= n; ++c) {
      ++pairs;
      const auto sc = sc_mask(n, c);
      std::vector<double> sg(n, 0.0);
      if (c > 1) sg = sg_mask(n, c - 1).weights;
      bool ok = sc.weights.size() == n;
      for (std::size_t t = 0; ok && t < n; ++t) ok = sc.weights[t] + sg[t] == 1.0 && (sc.weights[t] == 1.0) == (t + 1 >= c);
      o.expect(ok, "partition fails at n=" + std::to_string(n) + " c=" + std::to_string(c));
    }
  }
  o.note = "boundary table + " + std::to_string(pairs) + " (n, c) pairs";
  return o;
}

// --- AC3

Outcome ac3() {
  Outcome o;
  auto s = new_schedule(0.6, 0.3, Strategy::decrease);
  const bool stream[] = {true, false, true, false, false, false, false};
  const double want_p[] = {0.6, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> traj{s.p};
  for (int i = 0; i < 7; ++i) {
    o.expect(s.status == ScheduleStatus::running, "terminated early at verdict " + std::to_string(i));
    if (s.status != ScheduleStatus::running) break;
    on_validation(s, {stream[i], 0.0, "loss"});
    o.expect(s.p == want_p[i], "p after verdict " + std::to_string(i) + " = " + str(s.p));
    if (s.p != traj.back()) traj.push_back(s.p);
  }
  o.expect(traj == std::vector<double>{0.6, 0.3, 0.0}, "trajectory is not 0.6 -> 0.3 -> 0.0");
  o.expect(s.status == ScheduleStatus::terminated, "did not stop after 3 misses at p = 0");

  Rng rng(10000);
  const std::pair<double, double> grids[] = {{0.6, 0.3}, {0.5, 0.5}, {0.9, 0.1}, {0.3, 0.6}, {1.0, 0.25}, {0.5, 0.2}};
  std::size_t bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto [ps, st] = grids[trial % 6];
    auto q = new_schedule(ps, st, Strategy::decrease);
    const std::size_t max_phases = q.phase_set.size();
    std::set<double> visited{q.p};
    double prev = q.p;
    bool ok = true;
    const double bias = uniform01(rng);
    for (int k = 0; k < 500 && q.status == ScheduleStatus::running; ++k) {
      on_validation(q, {uniform01(rng) < bias, 0.0, "loss"});
      ok = ok && q.p <= prev;
      if (q.status == ScheduleStatus::terminated) ok = ok && q.p == 0.0;
      prev = q.p;
      visited.insert(q.p);
    }
    ok = ok && visited.size() <= max_phases && q.phase_history.size() <= max_phases;
    if (!ok) ++bad;
  }
  o.expect(bad == 0, std::to_string(bad) + " random streams violate the invariants");
  o.note = "hand trace + 10000 random streams";
  return o;
}

// --- AC4

ModelConfig small_model(std::uint64_t seed) {
  ModelConfig c;
  c.vocab_size = 9;
  c.embed_dim = 5;
  c.hidden_dim = 6;
  c.seed = seed;
  return c;
}

Outcome ac4() {
  Outcome o;
  auto p = init_model(small_model(42));
  for (auto& [_, t] : p.tensors)
    for (double& v : t.values) v *= 5.0;
  Rng rng(42);
  const std::vector<std::vector<int>> xs{random_ids(rng, 4, 9), random_ids(rng, 6, 9)};
  std::vector<std::vector<int>> ys{random_ids(rng, 5, 9), random_ids(rng, 3, 9)};
  std::vector<LossMask> ms;
  for (auto& y : ys) {
    ms.push_back(with_eos(mask_for(y.size(), {0.5, Criterion::sc})));
    y.push_back(kEos);
  }
  Tape tape;
  BoundParams bp(tape, p, true);
  tape.backward(batch_masked_loss(tape, bp, xs, ys, ms));
  std::map<std::string, Tensor> grads;
  for (const auto& [name, _] : p.tensors) grads.emplace(name, tape.grad(bp[name]));
  auto loss_of = [&](const ModelParams& q) {
    Tape t(false);
    BoundParams b(t, q, false);
    return t.value(batch_masked_loss(t, b, xs, ys, ms)).item();
  };
  const double rel = oracle::model_fd_max_rel_error(p, grads, loss_of, 1e-5);
  o.expect(rel < 1e-4, "max relative error " + str(rel));

  // Zero-weight positions.
  const auto p2 = init_model(small_model(7));
  const std::vector<std::vector<int>> xs2{random_ids(rng, 5, 9), random_ids(rng, 3, 9)};
  const std::vector<std::vector<int>> ys2{random_ids(rng, 6, 9), random_ids(rng, 4, 9)};
  const std::vector<LossMask> ms2{sc_mask(6, 4), sg_mask(4, 2)};
  Tape tape2;
  BoundParams bp2(tape2, p2, true);
  std::vector<Var> logits;
  tape2.backward(batch_masked_loss(tape2, bp2, xs2, ys2, ms2, &logits));
  std::size_t zero_rows = 0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const Tensor g = tape2.grad(logits[t]);
    for (std::size_t b = 0; b < 2; ++b) {
      if (t < ys2[b].size() && ms2[b].weights[t] != 0.0) continue;
      ++zero_rows;
      for (std::size_t k = 0; k < g.cols(); ++k) {
        o.expect(g.at(b, k) == 0.0, "nonzero logit gradient at t=" + std::to_string(t) + " b=" + std::to_string(b));
      }
    }
  }
  o.expect(zero_rows == 7, "expected 7 zero-weight rows, saw " + std::to_string(zero_rows));
  o.note = "max rel error " + str(rel) + ", " + std::to_string(zero_rows) + " zero-weight rows exact";
  return o;
}

// --- AC5

using Seq = std::vector<int>;

Seq random_seq(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Seq s(uniform_index(rng, max_len + 1));
  for (int& v : s) v = static_cast<int>(uniform_index(rng, alphabet));
  return s;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12; }

Outcome ac5() {
  Outcome o;
  const Seq a{1, 2, 3, 4}, b{1, 2, 9, 4};
  o.expect(close(rouge_n(a, b, 1).f1, 0.75), "ROUGE-1 anchor");
  o.expect(close(rouge_n(a, b, 2).f1, 1.0 / 3.0), "ROUGE-2 anchor");
  o.expect(close(bleu(std::vector<Seq>{{1, 1, 1}}, std::vector<Seq>{{1, 2}}, 1)[0], 1.0 / 3.0), "BLEU-1 anchor");
  o.expect(close(rouge_l(Seq{1, 2, 3, 4}, Seq{1, 3, 2, 4}).f1, 0.75), "ROUGE-L anchor");

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Seq c = random_seq(rng, 12, 4), r = random_seq(rng, 12, 4);
    for (std::size_t n = 1; n <= 2; ++n) {
      const auto got = rouge_n(c, r, n);
      const auto want = oracle::rouge_n(c, r, n);
      o.expect(close(got.precision, want.p) && close(got.recall, want.r) && close(got.f1, want.f),
               "rouge_n case " + std::to_string(i) + " n=" + std::to_string(n));
    }
  }
  for (int i = 0; i < 100; ++i) {
    const Seq c = random_seq(rng, 12, 4), r = random_seq(rng, 12, 4);
    const auto got = rouge_l(c, r);
    const auto want = oracle::rouge_l(c, r);
    o.expect(close(got.precision, want.p) && close(got.recall, want.r) && close(got.f1, want.f),
             "rouge_l case " + std::to_string(i));
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<Seq> cs, rs;
    const std::size_t n = 1 + uniform_index(rng, 4);
    for (std::size_t k = 0; k < n; ++k) {
      cs.push_back(random_seq(rng, 10, 3));
      rs.push_back(random_seq(rng, 10, 3));
    }
    const auto got = bleu(cs, rs, 4);
    for (std::size_t k = 1; k <= 4; ++k) {
      o.expect(close(got[k - 1], oracle::bleu(cs, rs, k)), "bleu case " + std::to_string(i) + " k=" + std::to_string(k));
    }
  }
  o.note = "anchors + 100 cases each for rouge_n, rouge_l, bleu";
  return o;
}

// --- AC6

struct TableModel {
  struct State {
    std::vector<int> prefix;
    std::vector<double> lp;
  };
  std::function<std::vector<double>(const std::vector<int>&)> dist;

  State start() const { return {{}, logs(dist({}))}; }
  State advance(const State& s, int token) const {
    auto p = s.prefix;
    p.push_back(token);
    return {p, logs(dist(p))};
  }
  const std::vector<double>& logprobs(const State& s) const { return s.lp; }
  static std::vector<double> logs(std::vector<double> p) {
    for (double& v : p) v = std::log(v);
    return p;
  }
};

std::vector<double> toy(const std::vector<int>& prefix) {
  static const std::map<std::vector<int>, std::vector<double>> table{
      {{}, {0.5, 0.4, 0.1}},          {{0}, {0.34, 0.33, 0.33}},   {{1}, {0.9, 0.05, 0.05}},
      {{0, 0}, {0.4, 0.3, 0.3}},      {{1, 0}, {0.1, 0.9, 1e-12}}, {{0, 1}, {0.2, 0.2, 0.6}},
  };
  const auto it = table.find(prefix);
  return it != table.end() ? it->second : std::vector<double>{0.3, 0.3, 0.4};
}

ModelParams random_model(Rng& rng) {
  ModelConfig c;
  c.vocab_size = 6 + uniform_index(rng, 5);
  c.embed_dim = 6;
  c.hidden_dim = 8;
  c.seed = rng();
  auto p = init_model(c);
  for (double& v : p.tensors.at("out.w").values) v *= 20.0;
  for (double& v : p.tensors.at("attn.w_combine").values) v *= 10.0;
  return p;
}

std::vector<int> random_input(Rng& rng, std::size_t vocab) { return random_ids(rng, 1 + uniform_index(rng, 6), vocab); }

bool has_repeated_trigram(const std::vector<int>& s) {
  std::set<std::vector<int>> seen;
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    if (!seen.insert(std::vector<int>(s.begin() + i, s.begin() + i + 3)).second) return true;
  }
  return false;
}

Outcome ac6() {
  Outcome o;
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_model(rng);
    Seq2SeqScorer m(p, random_input(rng, p.config.vocab_size));
    DecodeConfig c;
    c.num_beams = 1;
    c.no_repeat_ngram_size = 0;
    c.max_len = 15;
    o.expect(beam_search(m, c).best.tokens == greedy(m, c), "beam(1) != greedy on model " + std::to_string(trial));
  }

  TableModel tm{toy};
  std::vector<int> best;
  double best_lp = -INFINITY;
  std::size_t enumerated = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d) {
        ++enumerated;
        const auto p0 = toy({}), p1 = toy({a}), p2 = toy({a, b});
        const double lp = std::log(p0[a]) + std::log(p1[b]) + std::log(p2[d]);
        if (lp > best_lp) {
          best_lp = lp;
          best = {a, b, d};
        }
      }
  DecodeConfig tc;
  tc.num_beams = 2;
  tc.no_repeat_ngram_size = 0;
  tc.eos_id = -1;
  tc.suppress.clear();
  tc.max_len = 3;
  const auto r = beam_search(tm, tc);
  o.expect(enumerated == 27, "toy enumeration size");
  o.expect(r.best.tokens == best, "beam(2) missed the exhaustive optimum");
  tc.num_beams = 1;
  o.expect(greedy(tm, tc) != best, "toy case does not separate greedy from the optimum");

  std::size_t decoded = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_model(rng);
    Seq2SeqScorer m(p, random_input(rng, p.config.vocab_size));
    DecodeConfig c;
    c.num_beams = 1 + uniform_index(rng, 4);
    c.no_repeat_ngram_size = 3;
    c.max_len = 20;
    const auto out = generate(m, c);
    decoded += out.size();
    o.expect(!has_repeated_trigram(out), "repeated trigram in decode " + std::to_string(trial));
  }
  o.note = "50 beam(1)/greedy pairs, toy optimum found, 200 decodes (" + std::to_string(decoded) + " tokens)";
  return o;
}

// --- AC7

fs::path work_dir(const std::string& name) {
  fs::path d = fs::current_path() / "acceptance_out" / name;
  fs::create_directories(d);
  return d;
}

Outcome ac7() {
  Outcome o;
  const RunConfig cfg = load_config(std::string(ICL_SOURCE_DIR) + "/configs/ac7_reverse.json");
  const std::vector<std::string> want_variants{"w/o CL", "TCL-SG", "TCL-SC", "ICL-SG", "ICL-SC", "ICL-SC+InLen"};
  o.expect(cfg.compare.variants == want_variants, "config variant list");
  o.expect(cfg.compare.seeds.size() == 3, "config seed count");
  o.expect(cfg.data.task == SyntheticTask::reverse && cfg.data.train_count == 2000 && cfg.data.val_count == 200 &&
               cfg.data.test_count == 200 && cfg.data.min_len == 5 && cfg.data.max_len == 20 && cfg.data.seed == 42,
           "config data section");
  const RunConfig defaults;
  o.expect(cfg.model.embed_dim == defaults.model.embed_dim && cfg.model.hidden_dim == defaults.model.hidden_dim &&
               cfg.model.layers == defaults.model.layers,
           "model is not at defaults");
  const Dataset data = load_dataset(cfg.data);
  o.expect(data.vocab.size() == 12, "vocabulary size " + std::to_string(data.vocab.size()));

  const fs::path out = work_dir("AC7");
  CompareOptions opts;
  opts.jobs = 1;
  opts.on_row = [](const CompareRow& r) {
    std::cout << "  " << r.variant << " seed " << r.seed << ": " << r.status;
    if (r.report) {
      std::cout << " val_loss " << str(r.report->best_val_loss) << " steps " << r.report->steps << " "
                << str(r.report->wall_seconds) << "s";
    }
    std::cout << std::endl;
  };
  const auto rows = run_compare(cfg, cfg.compare.variants, cfg.compare.seeds, data, opts);
  write_text(out / "compare.json", compare_json(rows).dump(2) + "\n");
  write_text(out / "compare.csv", compare_csv(rows));
  write_text(out / "summary.csv", summary_csv(rows));

  double total = 0, slowest = 0;
  std::map<std::pair<std::string, std::uint64_t>, double> loss;
  for (const auto& r : rows) {
    o.expect(r.status == "ok" && r.report.has_value(), r.variant + " seed " + std::to_string(r.seed) + ": " + r.status);
    if (!r.report) continue;
    total += r.report->wall_seconds;
    slowest = std::max(slowest, r.report->wall_seconds);
    o.expect(r.report->wall_seconds < 600.0, r.variant + " seed " + std::to_string(r.seed) + " took " +
                                                 str(r.report->wall_seconds) + "s");
    o.expect(r.report->steps > 0, "no steps recorded for " + r.variant);
    loss[{r.variant, r.seed}] = r.report->best_val_loss;
  }
  std::size_t wins = 0;
  std::string ratios;
  for (auto seed : cfg.compare.seeds) {
    const auto a = loss.find({"ICL-SC", seed}), b = loss.find({"w/o CL", seed});
    if (a == loss.end() || b == loss.end()) continue;
    const double ratio = a->second / b->second;
    ratios += (ratios.empty() ? "" : " ") + str(ratio);
    if (ratio <= 1.05) ++wins;
  }
  o.expect(wins >= 2, "ICL-SC within 1.05x of w/o CL in only " + std::to_string(wins) + " of 3 seeds");

  const auto summary = compare_summary(rows);
  o.expect(summary.size() == 6, "summary has " + std::to_string(summary.size()) + " rows");
  for (std::size_t i = 0; i < summary.size() && i < want_variants.size(); ++i) {
    o.expect(summary[i].variant == want_variants[i] && summary[i].ok == 3 && summary[i].steps > 0,
             "summary row " + summary[i].variant);
  }
  const nlohmann::json j = compare_json(rows);
  o.expect(j.at("rows").size() == 18 && j.at("summary").size() == 6, "compare.json shape");
  for (const auto& row : j.at("rows")) o.expect(row.contains("steps"), "row without step count");

  std::cout << summary_csv(rows);
  o.note = "ICL-SC / w/o CL ratios " + ratios + "; slowest run " + str(slowest) + "s, total " + str(total) + "s";
  return o;
}

// --- AC8

Outcome ac8() {
  Outcome o;
  const ExperimentPreset p = find_preset("strategy-ablation");
  const PresetResult r = run_preset(p);
  write_preset(work_dir("AC8"), r);
  const auto summary = compare_summary(r.rows);
  o.expect(summary.size() == 3, "table has " + std::to_string(summary.size()) + " rows");
  const std::set<double> allowed{0.0, 0.3, 0.6};
  std::size_t logged = 0;
  for (const auto& row : r.report.at("rows")) {
    const std::string v = row.at("variant");
    o.expect(row.at("status") == "ok", v + ": " + row.at("status").get<std::string>());
    const auto& ep = row.at("epoch_p");
    o.expect(!ep.empty(), v + " logged no per-epoch p");
    for (std::size_t i = 0; i < ep.size(); ++i) {
      const double x = ep[i];
      ++logged;
      o.expect(allowed.count(x) == 1, v + " logged p = " + str(x));
      if (i == 0) {
        if (v.find("decrease") != std::string::npos) o.expect(x == 0.6, v + " does not start at 0.6");
        if (v.find("increase") != std::string::npos) o.expect(x == 0.0, v + " does not start at 0.0");
        continue;
      }
      const double prev = ep[i - 1];
      if (v.find("decrease") != std::string::npos) o.expect(x <= prev, v + " p rose at epoch " + std::to_string(i + 1));
      if (v.find("increase") != std::string::npos) o.expect(x >= prev, v + " p fell at epoch " + std::to_string(i + 1));
    }
  }
  std::cout << r.table << summary_csv(r.rows);
  o.note = std::to_string(r.rows.size()) + " runs, " + std::to_string(logged) + " logged epoch p values";
  return o;
}

// --- AC9

Outcome ac9() {
  Outcome o;
  for (const auto& p : preset_list()) {
    const fs::path golden = fs::path(ICL_SOURCE_DIR) / "presets" / "golden" / (p.name + ".report.json");
    std::ifstream in(golden, std::ios::binary);
    o.expect(static_cast<bool>(in), "missing " + golden.string());
    if (!in) continue;
    std::ostringstream want;
    want << in.rdbuf();
    const auto t0 = std::chrono::steady_clock::now();
    const PresetResult r = run_preset(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string got = preset_report_text(r);
    write_preset(work_dir("AC9") / p.name, r);
    o.expect(got == want.str(), p.name + " report.json differs from the golden copy");
    std::cout << "  " << p.name << ": " << (got == want.str() ? "identical" : "DIFFERENT") << " (" << got.size()
              << " bytes, " << str(secs) << "s)" << std::endl;
  }
  o.note = std::to_string(preset_list().size()) + " presets compared byte-for-byte";
  return o;
}

// --- AC10

Outcome ac10() {
  Outcome o;
  const std::vector<std::pair<long, double>> curve{{1, 10}, {2, 60}, {3, 100}};
  const long got = estimate_curriculum_steps(curve, 0.7);
  o.expect(got == 3, "returned " + std::to_string(got));
  o.note = "returned " + std::to_string(got);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>> all{
      {"AC1", {"masked NLL at p = 0 equals plain NLL", ac1}},
      {"AC2", {"cutting point table and mask partition", ac2}},
      {"AC3", {"scheduler trace and random-stream invariants", ac3}},
      {"AC4", {"end-to-end gradients vs finite differences", ac4}},
      {"AC5", {"ROUGE / BLEU against brute-force oracles", ac5}},
      {"AC6", {"greedy, beam and no-repeat decoding", ac6}},
      {"AC7", {"desk-scale reverse-task comparison", ac7}},
      {"AC8", {"strategy ablation per-epoch p", ac8}},
      {"AC9", {"preset reports reproduce the goldens", ac9}},
      {"AC10", {"curriculum step estimate", ac10}},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted) {
    if (std::none_of(all.begin(), all.end(), [&](const auto& e) { return e.first == w; })) {
      std::cerr << "unknown criterion " << w << "\n";
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [id, entry] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = o.passed();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << " " << entry.first << " (" << o.checks << " checks";
    if (!o.note.empty()) std::cout << "; " << o.note;
    std::cout << ")" << std::endl;
    for (std::size_t i = 0; i < o.failures.size() && i < 5; ++i) std::cout << "       " << o.failures[i] << "\n";
    if (o.failures.size() > 5) std::cout << "       ... " << o.failures.size() - 5 << " more\n";
  }
  return failed == 0 ? 0 : 1;
}
