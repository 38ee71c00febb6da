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

// Prefix-fraction schedules: the validation-driven automaton (decrease, with
// increase/random ablations) and the fixed-length token-wise schedule.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icl/common.hpp"
#include "icl/loss.hpp"

namespace icl {

enum class Strategy { decrease, increase, random };

inline Strategy parse_strategy(std::string_view s) {
  if (s == "decrease") return Strategy::decrease;
  if (s == "increase") return Strategy::increase;
  if (s == "random") return Strategy::random;
  throw Error("unknown strategy '" + std::string(s) + "' (expected decrease|increase|random)");
}

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::decrease: return "decrease";
    case Strategy::increase: return "increase";
    case Strategy::random: return "random";
  }
  return "?";
}

enum class ScheduleStatus { running, terminated };

struct PhaseRecord {
  std::size_t validation = 0;  // number of validations seen when p took effect
  double p = 0.0;
  bool operator==(const PhaseRecord&) const = default;
};

struct ValidationVerdict {
  bool improved = false;
  double value = 0.0;
  std::string metric;
};

struct ScheduleAction {
  enum class Kind { keep_best, advance_phase, count_patience, terminate };
  Kind kind = Kind::keep_best;
  double new_p = 0.0;
  int patience = 0;
};

inline std::string to_string(ScheduleAction::Kind k) {
  switch (k) {
    case ScheduleAction::Kind::keep_best: return "keep_best";
    case ScheduleAction::Kind::advance_phase: return "advance_phase";
    case ScheduleAction::Kind::count_patience: return "count_patience";
    case ScheduleAction::Kind::terminate: return "terminate";
  }
  return "?";
}

struct CurriculumState {
  double p_start = 0.0;
  double stride = 0.0;
  double p = 0.0;
  Strategy strategy = Strategy::decrease;
  int patience_limit = 3;
  std::uint64_t seed = 0;

  // {p_start, p_start - s, ..., 0}, strictly decreasing, last element exactly 0.
  std::vector<double> phase_set;
  // Order in which phases are visited (decrease: phase_set, increase: reversed).
  std::vector<double> order;
  std::size_t phase = 0;
  int patience = 0;
  std::size_t validations = 0;
  std::vector<PhaseRecord> phase_history;
  ScheduleStatus status = ScheduleStatus::running;
  Rng rng;
};

// Snaps to a 1e-12 grid so repeated subtraction yields 0.3 rather than 0.30000000000000004.
inline double snap_fraction(double x) { return std::round(x * 1e12) / 1e12; }

inline std::vector<double> make_phase_set(double p_start, double stride) {
  if (!(p_start >= 0.0 && p_start <= 1.0)) throw Error("p_start must lie in [0, 1]");
  if (!(stride >= 0.0 && stride <= 1.0)) throw Error("stride must lie in [0, 1]");
  if (p_start > 0.0 && stride == 0.0) throw Error("stride must be positive when p_start > 0");
  std::vector<double> set;
  for (std::size_t k = 0;; ++k) {
    const double v = snap_fraction(p_start - static_cast<double>(k) * stride);
    if (v <= 1e-9) break;
    set.push_back(v);
  }
  set.push_back(0.0);
  return set;
}

inline CurriculumState new_schedule(double p_start, double stride, Strategy strategy, int patience_limit = 3,
                                    std::uint64_t seed = 0) {
  if (patience_limit < 1) throw Error("patience limit must be >= 1");
  CurriculumState s;
  s.p_start = p_start;
  s.stride = stride;
  s.strategy = strategy;
  s.patience_limit = patience_limit;
  s.seed = seed;
  s.rng.seed(seed);
  s.phase_set = make_phase_set(p_start, stride);
  s.order = s.phase_set;
  if (strategy == Strategy::increase) std::reverse(s.order.begin(), s.order.end());
  if (strategy == Strategy::random) {
    s.p = s.phase_set[uniform_index(s.rng, s.phase_set.size())];
  } else {
    s.p = s.order.front();
  }
  s.phase_history.push_back({0, s.p});
  return s;
}

// Draws a fresh p for the random strategy; no-op for the others.
inline void redraw(CurriculumState& s) {
  if (s.strategy != Strategy::random || s.status != ScheduleStatus::running) return;
  s.p = s.phase_set[uniform_index(s.rng, s.phase_set.size())];
  s.phase_history.push_back({s.validations, s.p});
}

// Feeds one validation outcome to the automaton.
//
// Improvement resets patience. Otherwise the schedule moves to the next phase
// if one remains; once on the final phase (p == 0 for decrease) each miss adds
// one to patience and the run terminates at the limit. The random strategy has
// no phase order, so every miss counts towards patience.
inline ScheduleAction on_validation(CurriculumState& s, const ValidationVerdict& v) {
  if (s.status == ScheduleStatus::terminated) throw Error("on_validation: schedule already terminated");
  ++s.validations;
  using Kind = ScheduleAction::Kind;
  if (v.improved) {
    s.patience = 0;
    return {Kind::keep_best, s.p, 0};
  }
  if (s.strategy != Strategy::random && s.phase + 1 < s.order.size()) {
    ++s.phase;
    s.p = s.order[s.phase];
    s.phase_history.push_back({s.validations, s.p});
    return {Kind::advance_phase, s.p, s.patience};
  }
  ++s.patience;
  if (s.patience >= s.patience_limit) {
    s.status = ScheduleStatus::terminated;
    return {Kind::terminate, s.p, s.patience};
  }
  return {Kind::count_patience, s.p, s.patience};
}

inline std::size_t current_cut(const CurriculumState& s, std::size_t n) { return cutting_point(n, s.p); }

// Loss-bearing fraction of the token-wise schedule: grows linearly from f0 to 1
// over `curriculum_steps`, then stays at 1 (ordinary training).
inline double tcl_fraction(long step, long curriculum_steps, double f0) {
  if (curriculum_steps < 1) throw Error("tcl_fraction: curriculum steps must be >= 1");
  if (!(f0 > 0.0 && f0 <= 1.0)) throw Error("tcl_fraction: f0 must lie in (0, 1]");
  if (step < 0) step = 0;
  if (step >= curriculum_steps) return 1.0;
  return std::min(1.0, f0 + (1.0 - f0) * static_cast<double>(step) / static_cast<double>(curriculum_steps));
}

// Smallest step whose value reaches ratio * (final value of the curve).
inline long estimate_curriculum_steps(std::span<const std::pair<long, double>> curve, double ratio = 0.7) {
  if (curve.empty()) throw Error("estimate_curriculum_steps: empty curve");
  const double target = ratio * curve.back().second;
  std::optional<long> best;
  for (const auto& [step, value] : curve) {
    if (value >= target && (!best || step < *best)) best = step;
  }
  if (!best) throw Error("estimate_curriculum_steps: no point reaches the target");
  return *best;
}

}  // namespace icl
