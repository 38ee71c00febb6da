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

// Recurrent encoder-decoder with dot-product attention.
//
// Encoder: embedding -> stacked GRU over X + [EOS]. Decoder: embedding of the
// previous gold (or generated) token -> stacked GRU initialised from the
// encoder's final states -> attention over the top encoder layer -> tanh
// combination -> output projection -> log-softmax.

#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "icl/autodiff.hpp"
#include "icl/data.hpp"
#include "icl/loss.hpp"
#include "icl/optim.hpp"

namespace icl {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t layers = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || layers < 1) {
      throw Error("model config: all dimensions must be >= 1");
    }
  }
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  TensorMap tensors;

  const Tensor& at(const std::string& name) const {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw Error("model: no parameter named '" + name + "'");
    return it->second;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors) n += t.size();
    return n;
  }
  bool operator==(const ModelParams&) const = default;
};

namespace detail {
inline std::string layer_name(const char* side, std::size_t l, const char* what) {
  return std::string(side) + ".l" + std::to_string(l) + "." + what;
}

// name -> shape for every parameter.
inline std::map<std::string, Shape> parameter_shapes(const ModelConfig& c) {
  const std::size_t V = c.vocab_size, E = c.embed_dim, H = c.hidden_dim;
  std::map<std::string, Shape> s;
  s["enc.embed"] = {V, E};
  s["dec.embed"] = {V, E};
  for (const char* side : {"enc", "dec"}) {
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::size_t in = l == 0 ? E : H;
      s[layer_name(side, l, "w_gates")] = {in + H, 2 * H};
      s[layer_name(side, l, "b_gates")] = {1, 2 * H};
      s[layer_name(side, l, "w_cand")] = {in, H};
      s[layer_name(side, l, "u_cand")] = {H, H};
      s[layer_name(side, l, "b_cand")] = {1, H};
    }
  }
  s["attn.w_combine"] = {2 * H, H};
  s["attn.b_combine"] = {1, H};
  s["out.w"] = {H, V};
  s["out.b"] = {1, V};
  return s;
}
}  // namespace detail

// Closed-form parameter count for a configuration.
inline std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t V = c.vocab_size, E = c.embed_dim, H = c.hidden_dim;
  std::size_t n = 2 * V * E + 2 * H * H + H + H * V + V;
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::size_t in = l == 0 ? E : H;
    n += 2 * ((in + H) * 2 * H + 2 * H + in * H + H * H + H);
  }
  return n;
}

// Uniform(-0.08, 0.08) everywhere except a zero output bias.
inline ModelParams init_model(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(config.seed);
  for (const auto& [name, shape] : detail::parameter_shapes(config)) {
    Tensor t(shape);
    if (name != "out.b") {
      for (double& v : t.values) v = uniform(rng, -0.08, 0.08);
    }
    p.tensors.emplace(name, std::move(t));
  }
  return p;
}

// Parameters bound as leaves of one tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ModelParams& params, bool requires_grad) : config_(params.config) {
    for (const auto& [name, t] : params.tensors) vars_.emplace(name, tape.leaf(t, requires_grad));
  }
  Var operator[](const std::string& name) const {
    const auto it = vars_.find(name);
    if (it == vars_.end()) throw Error("model: no parameter named '" + name + "'");
    return it->second;
  }
  const ModelConfig& config() const { return config_; }
  const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  ModelConfig config_;
  std::map<std::string, Var> vars_;
};

struct EncoderOutput {
  Var keys;       // B x L x H, top layer
  Var mask_bias;  // B x L, 0 for real positions and -1e9 for padding
  std::vector<Var> final_hidden;  // per layer, B x H
};

namespace detail {
inline Var gru_cell(const BoundParams& bp, const char* side, std::size_t layer, Var x, Var h) {
  const std::size_t H = bp.config().hidden_dim;
  Var gates = sigmoid(add(matmul(concat({x, h}), bp[layer_name(side, layer, "w_gates")]),
                          bp[layer_name(side, layer, "b_gates")]));
  Var z = slice(gates, 0, H);
  Var r = slice(gates, H, 2 * H);
  Var cand = tanh(add(add(matmul(x, bp[layer_name(side, layer, "w_cand")]),
                          matmul(mul(r, h), bp[layer_name(side, layer, "u_cand")])),
                      bp[layer_name(side, layer, "b_cand")]));
  return add(h, mul(z, sub(cand, h)));
}

inline void check_ids(std::span<const int> ids, std::size_t vocab, const char* what) {
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw Error(std::string(what) + ": token id " + std::to_string(id) + " out of range for vocabulary of " +
                  std::to_string(vocab));
    }
  }
}
}  // namespace detail

// Encodes a batch of inputs (each gets an EOS appended).
inline EncoderOutput encode(Tape& tape, const BoundParams& bp, std::span<const std::vector<int>> inputs) {
  const ModelConfig& c = bp.config();
  const std::size_t B = inputs.size(), H = c.hidden_dim;
  if (B == 0) throw Error("encode: empty batch");
  std::size_t L = 0;
  for (const auto& x : inputs) {
    detail::check_ids(x, c.vocab_size, "encode");
    L = std::max(L, x.size() + 1);
  }
  std::vector<Var> hidden(c.layers, tape.constant(Tensor({B, H})));
  std::vector<Var> tops;
  Tensor bias({B, L});
  for (std::size_t t = 0; t < L; ++t) {
    std::vector<int> ids(B);
    Tensor live({B, 1});
    bool padded = false;
    for (std::size_t b = 0; b < B; ++b) {
      const auto& x = inputs[b];
      if (t < x.size()) {
        ids[b] = x[t];
      } else if (t == x.size()) {
        ids[b] = kEos;
      } else {
        ids[b] = kPad;
      }
      live.values[b] = t <= x.size() ? 1.0 : 0.0;
      if (t > x.size()) {
        padded = true;
        bias.values[b * L + t] = -1e9;
      }
    }
    Var in = embedding_lookup(bp["enc.embed"], ids);
    Var live_v = padded ? tape.constant(std::move(live)) : Var{};
    for (std::size_t l = 0; l < c.layers; ++l) {
      Var next = detail::gru_cell(bp, "enc", l, in, hidden[l]);
      hidden[l] = padded ? add(hidden[l], mul(sub(next, hidden[l]), live_v)) : next;
      in = hidden[l];
    }
    tops.push_back(hidden.back());
  }
  return {stack_steps(tops), tape.constant(std::move(bias)), hidden};
}

struct DecoderStep {
  Var logprobs;  // B x V
  Var logits;
  std::vector<Var> hidden;
};

inline DecoderStep decode_step(const BoundParams& bp, const EncoderOutput& enc, std::span<const Var> hidden,
                               std::span<const int> prev_tokens) {
  const ModelConfig& c = bp.config();
  detail::check_ids(prev_tokens, c.vocab_size, "decode_step");
  Var in = embedding_lookup(bp["dec.embed"], prev_tokens);
  DecoderStep out;
  for (std::size_t l = 0; l < c.layers; ++l) {
    in = detail::gru_cell(bp, "dec", l, in, hidden[l]);
    out.hidden.push_back(in);
  }
  Var alpha = softmax_rows(add(attention_scores(enc.keys, in), enc.mask_bias));
  Var context = attention_context(alpha, enc.keys);
  Var combined = tanh(add(matmul(concat({in, context}), bp["attn.w_combine"]), bp["attn.b_combine"]));
  out.logits = add(matmul(combined, bp["out.w"]), bp["out.b"]);
  out.logprobs = log_softmax_rows(out.logits);
  return out;
}

// Teacher-forced log-probabilities for a batch: element t is the B x V matrix
// for position t + 1, fed BOS at t = 0 and targets[b][t - 1] afterwards.
inline std::vector<Var> teacher_forced_batch(Tape& tape, const BoundParams& bp, std::span<const std::vector<int>> inputs,
                                             std::span<const std::vector<int>> targets,
                                             std::vector<Var>* logits = nullptr) {
  if (inputs.size() != targets.size()) throw Error("teacher_forced: inputs and targets differ in batch size");
  const EncoderOutput enc = encode(tape, bp, inputs);
  std::size_t T = 0;
  for (const auto& y : targets) {
    detail::check_ids(y, bp.config().vocab_size, "teacher_forced");
    T = std::max(T, y.size());
  }
  std::vector<Var> hidden = enc.final_hidden;
  std::vector<Var> rows;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> prev(targets.size());
    for (std::size_t b = 0; b < targets.size(); ++b) {
      prev[b] = t == 0 ? kBos : (t - 1 < targets[b].size() ? targets[b][t - 1] : kPad);
    }
    DecoderStep step = decode_step(bp, enc, hidden, prev);
    rows.push_back(step.logprobs);
    if (logits) logits->push_back(step.logits);
    hidden = std::move(step.hidden);
  }
  return rows;
}

// Batch mean of per-sample masked NLL. masks[b] covers targets[b] exactly;
// positions beyond a sample's length carry no weight.
inline Var batch_masked_loss(Tape& tape, const BoundParams& bp, std::span<const std::vector<int>> inputs,
                             std::span<const std::vector<int>> targets, std::span<const LossMask> masks,
                             std::vector<Var>* logits = nullptr) {
  const std::size_t B = targets.size(), V = bp.config().vocab_size;
  if (masks.size() != B) throw Error("batch_masked_loss: mask count does not match batch");
  for (std::size_t b = 0; b < B; ++b) {
    if (masks[b].size() != targets[b].size()) throw Error("batch_masked_loss: mask length does not match target");
    if (!(masks[b].normalizer > 0.0)) throw Error("batch_masked_loss: mask normalizer must be positive");
  }
  const std::vector<Var> rows = teacher_forced_batch(tape, bp, inputs, targets, logits);
  Var total{};
  for (std::size_t t = 0; t < rows.size(); ++t) {
    Tensor pick({B, V});
    for (std::size_t b = 0; b < B; ++b) {
      if (t < targets[b].size() && masks[b].weights[t] != 0.0) {
        pick.at(b, static_cast<std::size_t>(targets[b][t])) =
            masks[b].weights[t] / (masks[b].normalizer * static_cast<double>(B));
      }
    }
    Var term = sum_all(mul(rows[t], tape.constant(std::move(pick))));
    total = t == 0 ? term : add(total, term);
  }
  return scale(total, -1.0);
}

// Rows 1..|y| of log P(y_t | y_<t, x). Append EOS to y to score termination.
inline Tensor teacher_forced_logprobs(const ModelParams& params, std::span<const int> x, std::span<const int> y) {
  if (y.empty()) throw Error("teacher_forced_logprobs: output must have at least one token");
  Tape tape(false);
  BoundParams bp(tape, params, false);
  const std::vector<std::vector<int>> xs{{x.begin(), x.end()}};
  const std::vector<std::vector<int>> ys{{y.begin(), y.end()}};
  const auto rows = teacher_forced_batch(tape, bp, xs, ys);
  const std::size_t V = params.config.vocab_size;
  Tensor out({y.size(), V});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Tensor& r = tape.value(rows[t]);
    std::copy(r.values.begin(), r.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(t * V));
  }
  return out;
}

// Incremental decoder for one input, used by greedy and beam search.
class Seq2SeqScorer {
 public:
  struct State {
    std::vector<Tensor> hidden;  // per layer, 1 x H
    std::vector<double> logprobs;
  };

  Seq2SeqScorer(const ModelParams& params, std::span<const int> x) : params_(&params) {
    Tape tape(false);
    BoundParams bp(tape, params, false);
    const std::vector<std::vector<int>> xs{{x.begin(), x.end()}};
    const EncoderOutput enc = encode(tape, bp, xs);
    keys_ = tape.value(enc.keys);
    bias_ = tape.value(enc.mask_bias);
    for (const Var& h : enc.final_hidden) start_hidden_.push_back(tape.value(h));
  }

  std::size_t vocab_size() const { return params_->config.vocab_size; }

  State start() const { return step(start_hidden_, kBos); }
  State advance(const State& s, int token) const { return step(s.hidden, token); }
  const std::vector<double>& logprobs(const State& s) const { return s.logprobs; }

 private:
  State step(const std::vector<Tensor>& hidden, int token) const {
    Tape tape(false);
    BoundParams bp(tape, *params_, false);
    EncoderOutput enc{tape.leaf(keys_, false), tape.leaf(bias_, false), {}};
    std::vector<Var> h;
    for (const Tensor& t : hidden) h.push_back(tape.leaf(t, false));
    const int prev[1] = {token};
    DecoderStep d = decode_step(bp, enc, h, prev);
    State out;
    for (const Var& v : d.hidden) out.hidden.push_back(tape.value(v));
    out.logprobs = tape.value(d.logprobs).values;
    return out;
  }

  const ModelParams* params_;
  Tensor keys_, bias_;
  std::vector<Tensor> start_hidden_;
};

// Next-token log-distribution after `prefix` (empty prefix = BOS only).
inline std::vector<double> step_logprobs(const ModelParams& params, std::span<const int> x, std::span<const int> prefix) {
  Seq2SeqScorer scorer(params, x);
  detail::check_ids(prefix, params.config.vocab_size, "step_logprobs");
  auto state = scorer.start();
  for (int tok : prefix) state = scorer.advance(state, tok);
  return state.logprobs;
}

}  // namespace icl
