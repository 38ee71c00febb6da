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

// Greedy and beam-search generation over any incremental step model.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include "icl/common.hpp"
#include "icl/data.hpp"

namespace icl {

struct DecodeConfig {
  std::size_t num_beams = 4;
  double length_penalty = 1.0;
  std::size_t no_repeat_ngram_size = 3;  // 0 disables
  std::size_t min_len = 0;
  std::size_t max_len = 100;
  int eos_id = kEos;                     // -1: no end token
  std::vector<int> suppress{kPad, kBos};  // never generated

  void validate() const {
    if (num_beams < 1) throw Error("decode config: num_beams must be >= 1");
    if (min_len > max_len) throw Error("decode config: min_len exceeds max_len");
  }
};

// A model that can be stepped token by token from a start state.
template <class M>
concept StepModel = requires(const M& m, const typename M::State& s, int token) {
  { m.start() } -> std::convertible_to<typename M::State>;
  { m.advance(s, token) } -> std::convertible_to<typename M::State>;
  { m.logprobs(s) } -> std::convertible_to<const std::vector<double>&>;
};

// True where the next token may not be produced after `tokens`.
inline std::vector<bool> banned_tokens(const std::vector<int>& tokens, std::size_t vocab, const DecodeConfig& cfg) {
  std::vector<bool> banned(vocab, false);
  auto ban = [&](int id) {
    if (id >= 0 && static_cast<std::size_t>(id) < vocab) banned[static_cast<std::size_t>(id)] = true;
  };
  for (int id : cfg.suppress) ban(id);
  if (tokens.size() < cfg.min_len) ban(cfg.eos_id);
  const std::size_t k = cfg.no_repeat_ngram_size;
  if (k > 0 && tokens.size() + 1 >= k) {
    // Ban every token that would complete an n-gram already present.
    const std::size_t len = tokens.size();
    for (std::size_t i = 0; i + k <= len; ++i) {
      bool same = true;
      for (std::size_t j = 0; j + 1 < k && same; ++j) same = tokens[i + j] == tokens[len - (k - 1) + j];
      if (same) ban(tokens[i + k - 1]);
    }
  }
  return banned;
}

inline double normalized_score(double logprob_sum, std::size_t length, double length_penalty) {
  return logprob_sum / std::pow(static_cast<double>(std::max<std::size_t>(length, 1)), length_penalty);
}

// Argmax decoding; ties go to the lowest token id.
template <StepModel M>
std::vector<int> greedy(const M& model, const DecodeConfig& cfg) {
  cfg.validate();
  std::vector<int> tokens;
  auto state = model.start();
  while (tokens.size() < cfg.max_len) {
    const std::vector<double>& lp = model.logprobs(state);
    const auto banned = banned_tokens(tokens, lp.size(), cfg);
    int best = -1;
    for (std::size_t v = 0; v < lp.size(); ++v) {
      if (banned[v] || !std::isfinite(lp[v])) continue;
      if (best < 0 || lp[v] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(v);
    }
    if (best < 0 || best == cfg.eos_id) break;
    tokens.push_back(best);
    state = model.advance(state, best);
  }
  return tokens;
}

struct Hypothesis {
  std::vector<int> tokens;  // without EOS
  double logprob = 0.0;     // sum of token log-probabilities, EOS included when present
  double score = 0.0;       // length-normalised
  bool finished = false;    // ended with EOS
};

struct BeamResult {
  Hypothesis best;
  std::vector<Hypothesis> hypotheses;  // completed, best first
};

namespace detail {
inline bool better_hypothesis(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}
}  // namespace detail

// Beam search with length-normalised completion scores. Each step keeps the
// num_beams best extensions overall; extensions ending in EOS move to the
// completed pool, so one beam reduces exactly to greedy decoding.
template <StepModel M>
BeamResult beam_search(const M& model, const DecodeConfig& cfg) {
  cfg.validate();
  using State = typename M::State;
  struct Live {
    std::vector<int> tokens;
    double logprob;
    State state;
  };
  struct Candidate {
    double logprob;
    std::size_t parent;
    int token;
  };

  std::vector<Live> live;
  live.push_back({{}, 0.0, model.start()});
  std::vector<Hypothesis> done;
  auto finish = [&](std::vector<int> tokens, double logprob, bool eos) {
    const std::size_t len = tokens.size() + (eos ? 1 : 0);
    done.push_back({std::move(tokens), logprob, normalized_score(logprob, len, cfg.length_penalty), eos});
  };

  for (std::size_t step = 0; step < cfg.max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const std::vector<double>& lp = model.logprobs(live[i].state);
      const auto banned = banned_tokens(live[i].tokens, lp.size(), cfg);
      bool any = false;
      for (std::size_t v = 0; v < lp.size(); ++v) {
        if (banned[v] || !std::isfinite(lp[v])) continue;
        cands.push_back({live[i].logprob + lp[v], i, static_cast<int>(v)});
        any = true;
      }
      if (!any) finish(live[i].tokens, live[i].logprob, false);
    }
    // Score first, then the extended token sequence in lexicographic order.
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      const auto& ta = live[a.parent].tokens;
      const auto& tb = live[b.parent].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    });
    std::vector<Live> next;
    for (std::size_t k = 0; k < std::min(cfg.num_beams, cands.size()); ++k) {
      const Candidate& c = cands[k];
      const Live& parent = live[c.parent];
      if (c.token == cfg.eos_id) {
        finish(parent.tokens, c.logprob, true);
        continue;
      }
      std::vector<int> tokens = parent.tokens;
      tokens.push_back(c.token);
      next.push_back({std::move(tokens), c.logprob, model.advance(parent.state, c.token)});
    }
    live = std::move(next);

    if (!done.empty() && !live.empty()) {
      double best_done = -std::numeric_limits<double>::infinity();
      for (const auto& h : done) best_done = std::max(best_done, h.score);
      bool can_improve = false;
      for (const auto& l : live) {
        // Log-probability sums only fall, so the best reachable score uses the
        // most favourable completion length.
        const std::size_t len = cfg.length_penalty > 0.0 ? cfg.max_len : l.tokens.size() + 1;
        if (normalized_score(l.logprob, len, cfg.length_penalty) > best_done) can_improve = true;
      }
      if (!can_improve) live.clear();
    }
  }
  for (auto& l : live) finish(std::move(l.tokens), l.logprob, false);

  BeamResult result;
  std::sort(done.begin(), done.end(), detail::better_hypothesis);
  result.hypotheses = std::move(done);
  if (!result.hypotheses.empty()) result.best = result.hypotheses.front();
  return result;
}

template <StepModel M>
std::vector<int> generate(const M& model, const DecodeConfig& cfg) {
  return cfg.num_beams == 1 ? greedy(model, cfg) : beam_search(model, cfg).best.tokens;
}

}  // namespace icl
