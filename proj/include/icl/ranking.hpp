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

// Sample-wise difficulty scores and the easy-to-hard corpus feed.

#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "icl/common.hpp"
#include "icl/data.hpp"
#include "icl/metrics.hpp"

namespace icl {

enum class RankStrategy { in_len, out_len, compr, abstr };

inline RankStrategy parse_rank_strategy(std::string_view s) {
  if (s == "inlen" || s == "InLen") return RankStrategy::in_len;
  if (s == "outlen" || s == "OutLen") return RankStrategy::out_len;
  if (s == "compr" || s == "CompR") return RankStrategy::compr;
  if (s == "abstr" || s == "Abstr") return RankStrategy::abstr;
  throw Error("unknown ranking strategy '" + std::string(s) + "' (expected inlen|outlen|compr|abstr)");
}

inline std::string to_string(RankStrategy s) {
  switch (s) {
    case RankStrategy::in_len: return "InLen";
    case RankStrategy::out_len: return "OutLen";
    case RankStrategy::compr: return "CompR";
    case RankStrategy::abstr: return "Abstr";
  }
  return "?";
}

// Difficulty of an encoded sample; higher is harder.
//   InLen:  input length
//   OutLen: output length
//   CompR:  -(output length / input length), smaller ratios are harder
//   Abstr:  -(ROUGE-2 recall of the output against the input)
inline double difficulty(const TrainingSample& s, RankStrategy strategy) {
  const auto in_len = static_cast<double>(s.input_ids.size());
  const auto out_len = static_cast<double>(s.output_ids.size());
  switch (strategy) {
    case RankStrategy::in_len: return in_len;
    case RankStrategy::out_len: return out_len;
    case RankStrategy::compr:
      if (s.input_ids.empty()) throw Error("CompR: sample has an empty input");
      return -(out_len / in_len);
    case RankStrategy::abstr:
      if (s.input_ids.empty()) throw Error("Abstr: sample has an empty input");
      // The input plays the candidate so recall is measured over output bigrams.
      return -rouge_n(s.input_ids, s.output_ids, 2).recall;
  }
  return 0.0;
}

struct DifficultyScore {
  std::size_t index = 0;
  RankStrategy strategy = RankStrategy::in_len;
  double raw_score = 0.0;
  std::size_t rank = 0;
};

// Easy-to-hard permutation: stable ascending sort, ties keep corpus order.
inline std::vector<std::size_t> order_corpus(const Corpus& corpus, RankStrategy strategy) {
  if (corpus.empty()) throw Error("empty corpus");
  std::vector<double> scores;
  scores.reserve(corpus.size());
  for (const auto& s : corpus.samples) scores.push_back(difficulty(s, strategy));
  std::vector<std::size_t> perm(corpus.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return perm;
}

inline std::vector<DifficultyScore> rank_corpus(const Corpus& corpus, RankStrategy strategy) {
  const auto perm = order_corpus(corpus, strategy);
  std::vector<DifficultyScore> out(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) out[i] = {i, strategy, difficulty(corpus.samples[i], strategy), 0};
  for (std::size_t r = 0; r < perm.size(); ++r) out[perm[r]].rank = r;
  return out;
}

// Sample order for a 1-based epoch: the ranked permutation for the first
// `sorted_epochs` epochs, a seeded shuffle afterwards.
inline std::vector<std::size_t> curriculum_feed(const std::vector<std::size_t>& permutation, std::size_t sorted_epochs,
                                                std::size_t epoch, std::uint64_t seed) {
  if (epoch >= 1 && epoch <= sorted_epochs) return permutation;
  std::vector<std::size_t> order = permutation;
  std::sort(order.begin(), order.end());
  Rng rng(mix_seed(seed, epoch));
  shuffle(order, rng);
  return order;
}

}  // namespace icl
