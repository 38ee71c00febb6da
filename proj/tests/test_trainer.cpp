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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "icl/compare.hpp"
#include "icl/trainer.hpp"
#include "oracles.hpp"

using namespace icl;

namespace {

RunConfig tiny() {
  RunConfig c;
  c.data.train_count = 48;
  c.data.val_count = 12;
  c.data.test_count = 6;
  c.data.min_len = 3;
  c.data.max_len = 6;
  c.data.symbols = 5;
  c.data.seed = 3;
  c.model.embed_dim = 8;
  c.model.hidden_dim = 10;
  c.optim.lr = 1e-2;
  c.optim.batch_size = 8;
  c.optim.bucket = 16;
  c.decode.max_len = 10;
  c.max_epochs = 4;
  c.seed = 5;
  return c;
}

const Dataset& tiny_data() {
  static const Dataset d = load_dataset(tiny().data);
  return d;
}

}  // namespace

TEST(Config, DefaultsAndVersion) {
  const RunConfig c = parse_config(R"({"version": "icl-config-v1"})");
  EXPECT_EQ(to_json(c), to_json(RunConfig{}));
  EXPECT_EQ(c.curriculum.p_start, 0.5);
  EXPECT_EQ(c.curriculum.stride, 0.5);
  EXPECT_EQ(c.max_epochs, 50u);
  EXPECT_EQ(c.model.embed_dim, 32u);
  EXPECT_EQ(c.model.hidden_dim, 64u);
  EXPECT_EQ(c.decode.num_beams, 4u);
  EXPECT_EQ(c.decode.no_repeat_ngram_size, 3u);
  EXPECT_EQ(c.decode.length_penalty, 1.0);
  EXPECT_THROW(parse_config(R"({})"), Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v0"})"), Error);
}

TEST(Config, UnknownKeysAreErrors) {
  try {
    parse_config(R"({"version": "icl-config-v1", "optim": {"learning_rate": 0.1}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("optim.learning_rate"), std::string::npos);
  }
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "extras": {}})"), Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "optim": 3})"), Error);
}

TEST(Config, ParsesValuesAndComments) {
  const RunConfig c = parse_config(R"({
    // comments are allowed
    "version": "icl-config-v1",
    "curriculum": {"algorithm": "icl", "criterion": "SG", "p_start": 0.6, "stride": 0.3},
    "validation": {"every": "steps", "interval": 500, "metric": "rouge2_f1"}
  })");
  EXPECT_EQ(c.curriculum.algorithm, Algorithm::icl);
  EXPECT_EQ(c.curriculum.criterion, Criterion::sg);
  EXPECT_EQ(c.curriculum.p_start, 0.6);
  EXPECT_EQ(c.validation.interval, 500u);
  EXPECT_EQ(c.validation.resolved_direction(), Direction::higher_better);
  EXPECT_EQ(from_json(to_json(c)).validation.metric, "rouge2_f1");
  EXPECT_EQ(to_json(from_json(to_json(c))), to_json(c));
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "validation": {"metric": "meteor"}})"), Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "data": {"val_count": 0}})"), Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "curriculum": {"algorithm": "icl", "p_start": 1.5}})"),
               Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "optim": {"lr": 0}})"), Error);
  EXPECT_THROW(parse_config(R"({"version": "icl-config-v1", "decode": {"num_beams": 0}})"), Error);
  EXPECT_THROW(parse_config("{not json"), Error);
}

TEST(Config, Overrides) {
  RunConfig c = apply_override(RunConfig{}, "optim.lr=0.01");
  EXPECT_EQ(c.optim.lr, 0.01);
  c = apply_override(c, "validation.metric=rouge2_f1");
  EXPECT_EQ(c.validation.resolved_direction(), Direction::higher_better);
  EXPECT_THROW(apply_override(c, "optim.nope=1"), Error);
  EXPECT_THROW(apply_override(c, "lr=1"), Error);
}

TEST(Variants, Parse) {
  const RunConfig base;
  EXPECT_EQ(apply_variant(base, "w/o CL").curriculum.algorithm, Algorithm::none);
  const auto tsg = apply_variant(base, "TCL-SG");
  EXPECT_EQ(tsg.curriculum.algorithm, Algorithm::tcl);
  EXPECT_EQ(tsg.curriculum.criterion, Criterion::sg);
  const auto combo = apply_variant(base, "ICL-SC+InLen");
  EXPECT_EQ(combo.curriculum.algorithm, Algorithm::icl);
  EXPECT_EQ(combo.curriculum.criterion, Criterion::sc);
  ASSERT_TRUE(combo.ranking.strategy.has_value());
  EXPECT_EQ(*combo.ranking.strategy, RankStrategy::in_len);
  const auto rank_only = apply_variant(base, "Abstr");
  EXPECT_EQ(rank_only.curriculum.algorithm, Algorithm::none);
  EXPECT_EQ(*rank_only.ranking.strategy, RankStrategy::abstr);
  const auto abl = apply_variant(base, "ICL-SC@increase:0.6/0.3");
  EXPECT_EQ(abl.curriculum.strategy, Strategy::increase);
  EXPECT_EQ(abl.curriculum.p_start, 0.6);
  EXPECT_EQ(abl.curriculum.stride, 0.3);
  EXPECT_FALSE(apply_variant(combo, "ICL-SC").ranking.strategy.has_value());
  EXPECT_THROW(apply_variant(base, "ICL-XX"), Error);
  EXPECT_THROW(apply_variant(base, "ICL-SC:0.5"), Error);
}

TEST(Train, EmptyValidationSetRejected) {
  Dataset d = tiny_data();
  d.val.samples.clear();
  EXPECT_THROW(train(tiny(), d), Error);
}

TEST(Train, Deterministic) {
  RunConfig c = apply_variant(tiny(), "ICL-SC");
  const auto a = train(c, tiny_data());
  const auto b = train(c, tiny_data());
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
  EXPECT_EQ(a.best, b.best);
  c.seed = 6;
  EXPECT_NE(to_json(train(c, tiny_data()).report).dump(), to_json(a.report).dump());
}

TEST(Train, LossParityWithIclAtZero) {
  auto run = [](RunConfig c) {
    std::vector<double> losses;
    std::vector<std::vector<LossMask>> masks;
    TrainHooks h;
    h.on_step = [&](long, std::size_t, double loss) { losses.push_back(loss); };
    h.on_batch = [&](long, const std::vector<std::vector<int>>&, const std::vector<LossMask>& m) {
      masks.push_back(m);
    };
    c.max_epochs = 2;
    train(c, tiny_data(), h);
    return std::make_pair(losses, masks);
  };
  RunConfig icl0 = apply_variant(tiny(), "ICL-SC:0/0");
  const auto [base_losses, base_masks] = run(apply_variant(tiny(), "w/o CL"));
  const auto [icl_losses, icl_masks] = run(icl0);
  ASSERT_FALSE(base_losses.empty());
  EXPECT_EQ(base_losses, icl_losses);
  ASSERT_EQ(base_masks.size(), icl_masks.size());
  for (std::size_t i = 0; i < base_masks.size(); ++i) {
    for (std::size_t b = 0; b < base_masks[i].size(); ++b) {
      EXPECT_EQ(base_masks[i][b].weights, icl_masks[i][b].weights);
      for (double w : icl_masks[i][b].weights) EXPECT_EQ(w, 1.0);
    }
  }
}

TEST(Train, ReportInvariants) {
  for (const char* variant : {"w/o CL", "ICL-SC:0.6/0.3", "ICL-SG", "TCL-SC"}) {
    RunConfig c = apply_variant(tiny(), variant);
    c.validation.every = "steps";
    c.validation.interval = 2;
    c.max_epochs = 6;
    long counted = 0;
    std::size_t last_epoch = 0;
    TrainHooks h;
    h.on_step = [&](long step, std::size_t epoch, double) {
      ++counted;
      EXPECT_EQ(step, counted);
      last_epoch = epoch;
    };
    const auto r = train(c, tiny_data(), h, variant).report;
    SCOPED_TRACE(variant);
    EXPECT_EQ(r.steps, counted);
    EXPECT_EQ(r.epochs, last_epoch);
    EXPECT_EQ(r.epoch_p.size(), r.epochs);
    ASSERT_FALSE(r.records.empty());
    for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_GT(r.records[i].step, r.records[i - 1].step);
    double best = INFINITY;
    for (const auto& rec : r.records) best = std::min(best, rec.value);
    EXPECT_EQ(r.best_value, best);
    std::size_t improved = 0;
    for (const auto& rec : r.records) {
      if (rec.improved && rec.value == best) ++improved;
    }
    EXPECT_EQ(improved, 1u);
    ASSERT_TRUE(r.test.has_value());
    EXPECT_GE(r.test->scores.exact_match, 0.0);
    EXPECT_LE(r.test->scores.exact_match, 1.0);
    if (r.stop_reason == "max_epochs") EXPECT_EQ(r.epochs, c.max_epochs);
    if (r.epochs < c.max_epochs) EXPECT_EQ(r.stop_reason, "early_stop");
  }
}

TEST(Train, ReplayedAutomatonMatchesRecords) {
  for (const char* variant : {"ICL-SC:0.6/0.3", "ICL-SG:0.9/0.3", "w/o CL"}) {
    RunConfig c = apply_variant(tiny(), variant);
    c.validation.every = "steps";
    c.validation.interval = 1;
    c.max_epochs = 5;
    const auto r = train(c, tiny_data()).report;
    SCOPED_TRACE(variant);
    const bool icl = c.curriculum.algorithm == Algorithm::icl;
    oracle::Automaton a{icl ? oracle::decreasing_phases(c.curriculum.p_start, c.curriculum.stride)
                            : std::vector<double>{0.0},
                        0, 0, c.curriculum.patience, false};
    std::vector<double> trajectory{a.p()};
    for (const auto& rec : r.records) {
      ASSERT_FALSE(a.done);
      EXPECT_NEAR(rec.p, a.p(), 1e-12);
      a.feed(rec.improved);
      if (a.p() != trajectory.back()) trajectory.push_back(a.p());
    }
    EXPECT_EQ(a.done, r.stop_reason == "early_stop");
    ASSERT_EQ(r.events.size() + 1, trajectory.size());
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      EXPECT_NEAR(r.events[i].old_p, trajectory[i], 1e-12);
      EXPECT_NEAR(r.events[i].new_p, trajectory[i + 1], 1e-12);
    }
  }
}

TEST(Train, AblationTrajectoryVisitsAllPhases) {
  RunConfig c = apply_variant(tiny(), "ICL-SC:0.6/0.3");
  c.validation.every = "steps";
  c.validation.interval = 1;
  c.max_epochs = 8;
  const auto r = train(c, tiny_data()).report;
  std::vector<double> ps{0.6};
  for (const auto& e : r.events) ps.push_back(e.new_p);
  EXPECT_EQ(ps, (std::vector<double>{0.6, 0.3, 0.0}));
}

TEST(Train, TclFollowsLinearSchedule) {
  RunConfig c = apply_variant(tiny(), "TCL-SC");
  c.curriculum.tcl_steps = 12;
  c.curriculum.f0 = 0.1;
  c.max_epochs = 3;
  std::vector<std::pair<long, double>> seen;
  TrainHooks h;
  h.on_batch = [&](long step, const std::vector<std::vector<int>>& ys, const std::vector<LossMask>& m) {
    const double p = snap_fraction(1.0 - tcl_fraction(step, 12, 0.1));
    for (std::size_t b = 0; b < ys.size(); ++b) {
      const std::size_t n = ys[b].size() - 1;
      EXPECT_EQ(m[b].weights, with_eos(mask_for(n, {p, Criterion::sc})).weights) << step;
    }
    seen.emplace_back(step, p);
  };
  const auto r = train(c, tiny_data(), h).report;
  EXPECT_NEAR(seen.front().second, 0.9, 1e-12);
  EXPECT_EQ(seen.back().second, 0.0);
  for (const auto& rec : r.records) {
    if (rec.step < 12) EXPECT_TRUE(rec.action == "curriculum" || rec.action == "keep_best") << rec.action;
  }
}

TEST(Compare, RowIsolationAndShape) {
  RunConfig c = tiny();
  c.max_epochs = 2;
  const std::vector<std::string> variants{"w/o CL", "ICL-XX", "ICL-SC", "ICL-SC"};
  const auto rows = run_compare(c, variants, {5}, tiny_data());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[1].status.rfind("error:", 0), 0u);
  EXPECT_FALSE(rows[1].report.has_value());
  EXPECT_EQ(rows[2].status, "ok");
  EXPECT_EQ(compare_row_json(rows[2]).dump(), compare_row_json(rows[3]).dump());
  const auto j = compare_json(rows);
  ASSERT_EQ(j.at("rows").size(), 4u);
  for (const char* key : {"variant", "exact_match", "bleu4", "rougeL", "epochs", "steps"}) {
    EXPECT_TRUE(j.at("rows")[0].contains(key)) << key;
  }
  const std::string csv = compare_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,seed,exact_match,bleu4,rougeL,val_loss,epochs,steps,status");
}

TEST(Outputs, WriteRun) {
  RunConfig c = tiny();
  c.max_epochs = 1;
  const auto r = train(c, tiny_data(), {}, "w/o CL");
  const auto dir = std::filesystem::temp_directory_path() / "icl_write_run";
  std::filesystem::remove_all(dir);
  write_run(dir, r, tiny_data());
  for (const char* f : {"report.json", "curve.csv", "best.ckpt"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "curve.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("step,epoch,p,", 0), 0u) << header;
  const auto ck = load_checkpoint((dir / "best.ckpt").string());
  EXPECT_EQ(ck.params, r.best);
  std::filesystem::remove_all(dir);
}
