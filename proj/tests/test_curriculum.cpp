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

#include <cmath>
#include <map>

#include "icl/curriculum.hpp"
#include "oracles.hpp"

using namespace icl;

namespace {

ValidationVerdict verdict(bool improved) { return {improved, 0.0, "loss"}; }

}  // namespace

TEST(Schedule, PhaseSets) {
  EXPECT_EQ(new_schedule(0.6, 0.3, Strategy::decrease).phase_set, (std::vector<double>{0.6, 0.3, 0.0}));
  EXPECT_EQ(new_schedule(0.5, 0.5, Strategy::decrease).phase_set, (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(new_schedule(0.9, 0.1, Strategy::decrease).phase_set.size(), 10u);
  EXPECT_EQ(new_schedule(0.6, 0.3, Strategy::decrease).p, 0.6);
  EXPECT_EQ(new_schedule(0.6, 0.3, Strategy::increase).p, 0.0);
  EXPECT_EQ(new_schedule(0.0, 0.0, Strategy::decrease).phase_set, (std::vector<double>{0.0}));
}

TEST(Schedule, IncreaseVisitOrder) {
  auto s = new_schedule(0.6, 0.3, Strategy::increase);
  std::vector<double> seen{s.p};
  for (int i = 0; i < 2; ++i) {
    on_validation(s, verdict(false));
    seen.push_back(s.p);
  }
  EXPECT_EQ(seen, (std::vector<double>{0.0, 0.3, 0.6}));
}

TEST(Schedule, InvalidFractions) {
  EXPECT_THROW(new_schedule(1.2, 0.3, Strategy::decrease), Error);
  EXPECT_THROW(new_schedule(0.5, -0.1, Strategy::decrease), Error);
  EXPECT_THROW(new_schedule(0.5, 0.0, Strategy::decrease), Error);
  EXPECT_THROW(new_schedule(0.5, 0.5, Strategy::decrease, 0), Error);
}

TEST(Schedule, HandTrace) {
  auto s = new_schedule(0.6, 0.3, Strategy::decrease);
  const bool stream[] = {true, true, false, true, false, false, false, false};
  using K = ScheduleAction::Kind;
  const K kinds[] = {K::keep_best,      K::keep_best,      K::advance_phase,  K::keep_best,
                     K::advance_phase,  K::count_patience, K::count_patience, K::terminate};
  const double ps[] = {0.6, 0.6, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0};
  const int pats[] = {0, 0, 0, 0, 0, 1, 2, 3};
  for (int i = 0; i < 8; ++i) {
    const auto a = on_validation(s, verdict(stream[i]));
    EXPECT_EQ(a.kind, kinds[i]) << i;
    EXPECT_EQ(s.p, ps[i]) << i;
    EXPECT_EQ(s.patience, pats[i]) << i;
  }
  EXPECT_EQ(s.status, ScheduleStatus::terminated);
  EXPECT_THROW(on_validation(s, verdict(true)), Error);
  ASSERT_EQ(s.phase_history.size(), 3u);
  EXPECT_EQ(s.phase_history[1].validation, 3u);
  EXPECT_EQ(s.phase_history[2].validation, 5u);
}

TEST(Schedule, AllImprovingNeverTerminates) {
  auto s = new_schedule(0.6, 0.3, Strategy::decrease);
  for (int i = 0; i < 1000; ++i) on_validation(s, verdict(true));
  EXPECT_EQ(s.p, 0.6);
  EXPECT_EQ(s.status, ScheduleStatus::running);
}

TEST(Schedule, ClampBranch) {
  auto s = new_schedule(0.2, 0.3, Strategy::decrease);
  EXPECT_EQ(s.phase_set, (std::vector<double>{0.2, 0.0}));
  on_validation(s, verdict(false));
  EXPECT_EQ(s.p, 0.0);
}

TEST(Schedule, PatienceResetsOnImprovement) {
  auto s = new_schedule(0.0, 0.0, Strategy::decrease);
  on_validation(s, verdict(false));
  on_validation(s, verdict(false));
  on_validation(s, verdict(true));
  EXPECT_EQ(s.patience, 0);
  on_validation(s, verdict(false));
  on_validation(s, verdict(false));
  EXPECT_EQ(s.status, ScheduleStatus::running);
  on_validation(s, verdict(false));
  EXPECT_EQ(s.status, ScheduleStatus::terminated);
}

// Random verdict streams against an independently written automaton.
TEST(Schedule, RandomStreamsProperty) {
  Rng rng(1234);
  const std::pair<double, double> grids[] = {{0.6, 0.3}, {0.5, 0.5}, {0.9, 0.1}, {0.3, 0.6}, {1.0, 0.25}, {0.5, 0.2}};
  for (int trial = 0; trial < 10000; ++trial) {
    const auto [ps, st] = grids[trial % 6];
    const int limit = 1 + static_cast<int>(uniform_index(rng, 4));
    auto s = new_schedule(ps, st, Strategy::decrease, limit);
    oracle::Automaton ref{oracle::decreasing_phases(ps, st), 0, 0, limit, false};
    const double bias = uniform01(rng);
    std::size_t phase_changes = 0;
    double prev = s.p;
    for (int k = 0; k < 200 && !ref.done; ++k) {
      const bool imp = uniform01(rng) < bias;
      on_validation(s, verdict(imp));
      ref.feed(imp);
      ASSERT_NEAR(s.p, ref.p(), 1e-9);
      ASSERT_EQ(s.patience, ref.patience);
      ASSERT_EQ(s.status == ScheduleStatus::terminated, ref.done);
      ASSERT_LE(s.p, prev);
      if (s.p != prev) ++phase_changes;
      prev = s.p;
      if (ref.done) ASSERT_EQ(s.p, 0.0);
    }
    ASSERT_LE(phase_changes, static_cast<std::size_t>(std::ceil(ps / st - 1e-9)));
    ASSERT_EQ(s.phase_history.size(), phase_changes + 1);
  }
}

TEST(Schedule, DeterministicHistory) {
  auto run = [](std::uint64_t seed) {
    auto s = new_schedule(0.6, 0.3, Strategy::random, 3, seed);
    for (int epoch = 0; epoch < 40 && s.status == ScheduleStatus::running; ++epoch) {
      redraw(s);
      on_validation(s, verdict(epoch % 3 == 0));
    }
    std::vector<double> ps;
    for (const auto& r : s.phase_history) ps.push_back(r.p);
    return ps;
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7), run(8));
}

TEST(Schedule, RandomDrawsUniformWithinThreeSigma) {
  auto s = new_schedule(0.6, 0.3, Strategy::random, 3, 99);
  std::map<double, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    redraw(s);
    counts[s.p]++;
  }
  ASSERT_EQ(counts.size(), 3u);
  const double expect = draws / 3.0, sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (const auto& [p, n] : counts) {
    EXPECT_TRUE(p == 0.0 || p == 0.3 || p == 0.6);
    EXPECT_LT(std::abs(n - expect), 3 * sigma) << p;
  }
}

TEST(CurrentCut, Examples) {
  auto s = new_schedule(0.6, 0.3, Strategy::decrease);
  EXPECT_EQ(current_cut(s, 5), 3u);
  EXPECT_EQ(current_cut(s, 1), 1u);
  s.p = 0.3;
  EXPECT_EQ(current_cut(s, 1), 1u);
}

TEST(Tcl, Fraction) {
  EXPECT_DOUBLE_EQ(tcl_fraction(0, 10, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(tcl_fraction(5, 10, 0.1), 0.55);
  EXPECT_DOUBLE_EQ(tcl_fraction(10, 10, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(tcl_fraction(1000, 10, 0.1), 1.0);
  EXPECT_THROW(tcl_fraction(0, 0, 0.1), Error);
  EXPECT_THROW(tcl_fraction(0, 10, 0.0), Error);
  double prev = 0;
  for (long step = 0; step <= 20; ++step) {
    const double f = tcl_fraction(step, 20, 0.1);
    EXPECT_GE(f, prev);
    prev = f;
  }
}

TEST(EstimateSteps, Examples) {
  const std::vector<std::pair<long, double>> a{{1, 10}, {2, 60}, {3, 100}};
  EXPECT_EQ(estimate_curriculum_steps(a, 0.7), 3);
  const std::vector<std::pair<long, double>> b{{1, 70}, {2, 100}};
  EXPECT_EQ(estimate_curriculum_steps(b, 0.7), 1);
  EXPECT_THROW(estimate_curriculum_steps(std::vector<std::pair<long, double>>{}), Error);
  const std::vector<std::pair<long, double>> mono{{10, 1}, {20, 2}, {30, 3}, {40, 4}};
  EXPECT_LE(estimate_curriculum_steps(mono), 40);
}
