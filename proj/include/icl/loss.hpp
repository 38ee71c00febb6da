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

// Cutting points, per-position loss masks and the masked negative
// log-likelihood used by every curriculum variant.
//
// Positions are 1-based in the comments below (t = 1..n) and 0-based in code.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icl/tensor.hpp"

namespace icl {

struct LossMask {
  std::vector<double> weights;
  double normalizer = 0.0;

  std::size_t size() const { return weights.size(); }
  std::size_t active() const {
    std::size_t k = 0;
    for (double w : weights) k += w > 0.0;
    return k;
  }
};

enum class Criterion { sc, sg };

inline std::string to_string(Criterion c) { return c == Criterion::sc ? "SC" : "SG"; }

inline Criterion parse_criterion(std::string_view s) {
  if (s == "sc" || s == "SC") return Criterion::sc;
  if (s == "sg" || s == "SG") return Criterion::sg;
  throw Error("unknown criterion '" + std::string(s) + "' (expected sc|sg)");
}

enum class Weighting { hard, linear, exponential };

inline Weighting parse_weighting(std::string_view s) {
  if (s == "hard") return Weighting::hard;
  if (s == "linear") return Weighting::linear;
  if (s == "exp" || s == "exponential") return Weighting::exponential;
  throw Error("unknown weighting '" + std::string(s) + "' (expected hard|linear|exp)");
}

inline std::string to_string(Weighting w) {
  switch (w) {
    case Weighting::hard: return "hard";
    case Weighting::linear: return "linear";
    case Weighting::exponential: return "exp";
  }
  return "?";
}

struct CutSpec {
  double p = 0.0;  // prefix fraction
  Criterion criterion = Criterion::sc;
  Weighting weighting = Weighting::hard;
  // linear: weight at the far edge of the loss region, in (0, 1];
  // exp: decay rate per position, >= 0.
  double ramp = 0.5;
};

// c = ceil(n * p) clamped to [1, n]; p == 0 gives c = 1 (loss on the whole output).
inline std::size_t cutting_point(std::size_t n, double p) {
  if (n < 1) throw Error("cutting_point: output length must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("cutting_point: p = " + std::to_string(p) + " outside [0, 1]");
  // The 1e-9 slack keeps products like 10 * 0.7 = 7.000000000000001 at 7.
  const double raw = std::ceil(static_cast<double>(n) * p - 1e-9);
  if (raw <= 1.0) return 1;
  return std::min(n, static_cast<std::size_t>(raw));
}

// Loss on t = c..n.
inline LossMask sc_mask(std::size_t n, std::size_t c) {
  if (c < 1 || c > n) {
    throw Error("sc_mask: cut " + std::to_string(c) + " outside [1, " + std::to_string(n) + "]");
  }
  LossMask m;
  m.weights.assign(n, 0.0);
  for (std::size_t t = c - 1; t < n; ++t) m.weights[t] = 1.0;
  m.normalizer = static_cast<double>(n - c + 1);
  return m;
}

// Loss on t = 1..count.
inline LossMask sg_mask(std::size_t n, std::size_t count) {
  if (count < 1 || count > n) {
    throw Error("sg_mask: count " + std::to_string(count) + " outside [1, " + std::to_string(n) + "]");
  }
  LossMask m;
  m.weights.assign(n, 0.0);
  for (std::size_t t = 0; t < count; ++t) m.weights[t] = 1.0;
  m.normalizer = static_cast<double>(count);
  return m;
}

namespace detail {
// Scales the active region by a ramp that is 1 at `anchor` and decays away from it.
inline void apply_ramp(LossMask& m, const CutSpec& spec) {
  if (spec.weighting == Weighting::hard) return;
  if (spec.weighting == Weighting::linear && !(spec.ramp > 0.0 && spec.ramp <= 1.0)) {
    throw Error("linear ramp floor must be in (0, 1]");
  }
  if (spec.weighting == Weighting::exponential && !(spec.ramp >= 0.0)) {
    throw Error("exponential ramp rate must be >= 0");
  }
  std::vector<std::size_t> region;
  for (std::size_t t = 0; t < m.size(); ++t)
    if (m.weights[t] > 0.0) region.push_back(t);
  // SG grows from the front, SC from the back: distance is measured from that edge.
  if (spec.criterion == Criterion::sc) std::reverse(region.begin(), region.end());
  const std::size_t len = region.size();
  double total = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    double w = 1.0;
    if (spec.weighting == Weighting::linear) {
      w = len == 1 ? 1.0 : 1.0 - (1.0 - spec.ramp) * static_cast<double>(k) / static_cast<double>(len - 1);
    } else {
      w = std::exp(-spec.ramp * static_cast<double>(k));
    }
    m.weights[region[k]] = w;
    total += w;
  }
  m.normalizer = total;
}
}  // namespace detail

// SC: loss on t = c..n. SG: loss on the same number of leading positions.
inline LossMask mask_for(std::size_t n, const CutSpec& spec) {
  const std::size_t c = cutting_point(n, spec.p);
  LossMask m = spec.criterion == Criterion::sc ? sc_mask(n, c) : sg_mask(n, n - c + 1);
  detail::apply_ramp(m, spec);
  return m;
}

// Extends a content mask with the EOS position, which inherits the weight of y_n.
inline LossMask with_eos(const LossMask& m) {
  if (m.weights.empty()) throw Error("with_eos: empty mask");
  LossMask out = m;
  out.weights.push_back(m.weights.back());
  out.normalizer += m.weights.back();
  return out;
}

// -(sum_t w_t log P(y_t | y_<t, X)) / normalizer for one sample.
inline double masked_nll(const Tensor& logprobs, std::span<const int> gold, const LossMask& mask) {
  if (logprobs.rank() != 2) throw Error("masked_nll: log-probabilities must be a matrix");
  const std::size_t rows = logprobs.shape[0], vocab = logprobs.shape[1];
  if (rows != gold.size() || rows != mask.size()) {
    throw Error("masked_nll: length mismatch (rows " + std::to_string(rows) + ", gold " +
                std::to_string(gold.size()) + ", mask " + std::to_string(mask.size()) + ")");
  }
  if (!(mask.normalizer > 0.0)) throw Error("masked_nll: mask normalizer must be positive");
  double total = 0.0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (gold[t] < 0 || static_cast<std::size_t>(gold[t]) >= vocab) {
      throw Error("masked_nll: gold id " + std::to_string(gold[t]) + " out of range");
    }
    if (mask.weights[t] != 0.0) total += mask.weights[t] * logprobs.at(t, static_cast<std::size_t>(gold[t]));
  }
  return -total / mask.normalizer;
}

struct MaskedExample {
  const Tensor* logprobs;
  std::span<const int> gold;
  const LossMask* mask;
};

// Batch loss: plain mean of per-sample losses.
inline double masked_nll_batch(std::span<const MaskedExample> batch) {
  if (batch.empty()) throw Error("masked_nll_batch: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += masked_nll(*ex.logprobs, ex.gold, *ex.mask);
  return total / static_cast<double>(batch.size());
}

}  // namespace icl
