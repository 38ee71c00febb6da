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

// ROUGE-N, ROUGE-L, corpus BLEU, exact match, perplexity and the improvement
// tracker used to drive validation decisions.
//
// Token types are generic so the same code scores strings and vocabulary ids.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icl/data.hpp"
#include "icl/tensor.hpp"

namespace icl {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

template <class T>
std::map<std::vector<T>, std::size_t> ngram_counts(const std::vector<T>& seq, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  if (n == 0 || seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[std::vector<T>(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

// Clipped overlap: sum over n-grams of min(count in a, count in b).
template <class T>
std::size_t clipped_overlap(const std::map<std::vector<T>, std::size_t>& a,
                            const std::map<std::vector<T>, std::size_t>& b) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : a) {
    const auto it = b.find(gram);
    if (it != b.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

template <class T>
PRF rouge_n(const std::vector<T>& candidate, const std::vector<T>& reference, std::size_t n) {
  if (n < 1) throw Error("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  const std::size_t overlap = clipped_overlap(cand, ref);
  const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  PRF out;
  if (cand_total) out.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  if (ref_total) out.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

template <class T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Plain F1 (beta = 1) over the longest common subsequence.
template <class T>
PRF rouge_l(const std::vector<T>& candidate, const std::vector<T>& reference) {
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  PRF out;
  if (!candidate.empty()) out.precision = lcs / static_cast<double>(candidate.size());
  if (!reference.empty()) out.recall = lcs / static_cast<double>(reference.size());
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

// Corpus BLEU-1..max_n from pooled clipped counts, no smoothing.
template <class T>
std::vector<double> bleu(const std::vector<std::vector<T>>& candidates, const std::vector<std::vector<T>>& references,
                         std::size_t max_n = 4) {
  if (candidates.size() != references.size()) {
    throw Error("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                std::to_string(references.size()) + " references");
  }
  if (max_n < 1) throw Error("bleu: max_n must be >= 1");
  std::vector<double> matches(max_n, 0.0), totals(max_n, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= max_n; ++n) {
      matches[n - 1] += static_cast<double>(clipped_overlap(ngram_counts(candidates[i], n), ngram_counts(references[i], n)));
      if (candidates[i].size() >= n) totals[n - 1] += static_cast<double>(candidates[i].size() - n + 1);
    }
  }
  std::vector<double> scores(max_n, 0.0);
  if (cand_len == 0.0) return scores;
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (totals[n - 1] == 0.0 || matches[n - 1] == 0.0) break;  // this and all higher orders are 0
    log_sum += std::log(matches[n - 1] / totals[n - 1]);
    scores[n - 1] = bp * std::exp(log_sum / static_cast<double>(n));
  }
  return scores;
}

template <class T>
double exact_match(const std::vector<std::vector<T>>& candidates, const std::vector<std::vector<T>>& references) {
  if (candidates.size() != references.size()) throw Error("exact_match: length mismatch");
  if (candidates.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) hits += candidates[i] == references[i];
  return static_cast<double>(hits) / static_cast<double>(candidates.size());
}

// Corpus-level text scores; ROUGE values are means of per-sample F1.
struct TextScores {
  double exact_match = 0.0;
  std::vector<double> bleu;  // BLEU-1..4
  double rouge1_f1 = 0.0;
  double rouge2_f1 = 0.0;
  double rougeL_f1 = 0.0;
};

template <class T>
TextScores score_corpus(const std::vector<std::vector<T>>& candidates, const std::vector<std::vector<T>>& references) {
  TextScores s;
  s.exact_match = exact_match(candidates, references);
  s.bleu = bleu(candidates, references, 4);
  if (candidates.empty()) return s;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    s.rouge1_f1 += rouge_n(candidates[i], references[i], 1).f1;
    s.rouge2_f1 += rouge_n(candidates[i], references[i], 2).f1;
    s.rougeL_f1 += rouge_l(candidates[i], references[i]).f1;
  }
  const double n = static_cast<double>(candidates.size());
  s.rouge1_f1 /= n;
  s.rouge2_f1 /= n;
  s.rougeL_f1 /= n;
  return s;
}

// ---------------------------------------------------------------------------
// Perplexity

struct NllTotals {
  double total_nll = 0.0;
  std::size_t positions = 0;
  double mean() const { return positions ? total_nll / static_cast<double>(positions) : 0.0; }
  double perplexity() const { return std::exp(mean()); }
};

// `teacher_forced(input_ids, target_ids)` must return a |target| x V matrix of
// log-probabilities. Every output position plus the trailing EOS is scored.
template <class LogProbFn>
NllTotals corpus_nll(LogProbFn&& teacher_forced, const Corpus& corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  NllTotals acc;
  for (const auto& s : corpus.samples) {
    std::vector<int> target = s.output_ids;
    target.push_back(kEos);
    const Tensor lp = teacher_forced(s.input_ids, target);
    for (std::size_t t = 0; t < target.size(); ++t) acc.total_nll -= lp.at(t, static_cast<std::size_t>(target[t]));
    acc.positions += target.size();
  }
  return acc;
}

template <class LogProbFn>
double perplexity(LogProbFn&& teacher_forced, const Corpus& corpus) {
  return corpus_nll(std::forward<LogProbFn>(teacher_forced), corpus).perplexity();
}

// ---------------------------------------------------------------------------
// Improvement tracking

enum class Direction { lower_better, higher_better };

inline std::string to_string(Direction d) { return d == Direction::lower_better ? "lower_better" : "higher_better"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "lower_better") return Direction::lower_better;
  if (s == "higher_better") return Direction::higher_better;
  throw Error("unknown direction '" + std::string(s) + "' (expected lower_better|higher_better)");
}

// Validation metrics known to the trainer and their natural direction.
inline Direction metric_direction(std::string_view metric) {
  if (metric == "loss" || metric == "perplexity") return Direction::lower_better;
  if (metric == "rouge1_f1" || metric == "rouge2_f1" || metric == "rougeL_f1" || metric == "bleu4" ||
      metric == "exact_match") {
    return Direction::higher_better;
  }
  throw Error("unknown validation metric '" + std::string(metric) + "'");
}

class ImprovementTracker {
 public:
  struct Observation {
    bool improved = false;
    double best = 0.0;
  };

  ImprovementTracker(std::string metric, Direction direction) : metric_(std::move(metric)), direction_(direction) {}

  // Strict improvement over the best value so far; the first value always improves.
  Observation observe(double value) {
    const bool improved = !best_ || (direction_ == Direction::lower_better ? value < *best_ : value > *best_);
    if (improved) best_ = value;
    return {improved, *best_};
  }

  const std::string& metric() const { return metric_; }
  Direction direction() const { return direction_; }
  std::optional<double> best() const { return best_; }

 private:
  std::string metric_;
  Direction direction_;
  std::optional<double> best_;
};

}  // namespace icl
