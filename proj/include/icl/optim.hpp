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

#pragma once

#include <cmath>
#include <map>
#include <string>

#include "icl/tensor.hpp"

namespace icl {

// Named parameter (or gradient) tensors in deterministic name order.
using TensorMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  long step = 0;
  TensorMap first_moment;
  TensorMap second_moment;
};

inline OptimizerState make_adam(AdamConfig config = {}) {
  if (!(config.lr > 0.0)) throw Error("adam: learning rate must be positive");
  return OptimizerState{config, 0, {}, {}};
}

// One bias-corrected Adam update of every parameter in `params`.
inline void adam_step(OptimizerState& state, TensorMap& params, const TensorMap& grads) {
  for (const auto& [name, p] : params) {
    const auto it = grads.find(name);
    if (it == grads.end()) throw Error("adam: missing gradient for '" + name + "'");
    if (it->second.shape != p.shape) {
      throw Error("adam: gradient shape " + shape_str(it->second.shape) + " does not match parameter '" +
                  name + "' " + shape_str(p.shape));
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double corr1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.shape);
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.shape);
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape != p.shape || v.shape != p.shape) {
      throw Error("adam: accumulator shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.values[i];
      m.values[i] = c.beta1 * m.values[i] + (1.0 - c.beta1) * gi;
      v.values[i] = c.beta2 * v.values[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m.values[i] / corr1;
      const double vhat = v.values[i] / corr2;
      p.values[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

// Rescales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping. max_norm <= 0 leaves them untouched.
inline double clip_global_norm(TensorMap& grads, double max_norm) {
  double ss = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.values) ss += x * x;
  }
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (double& x : g.values) x *= k;
    }
  }
  return norm;
}

}  // namespace icl
