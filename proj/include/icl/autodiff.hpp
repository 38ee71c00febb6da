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

// Define-by-run reverse-mode automatic differentiation over Tensor.
//
// Every op appends a node to a Tape. Nodes are created in topological order,
// so backward() is a single reverse sweep that visits each node once and
// accumulates parent gradients in a fixed order.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "icl/tensor.hpp"

namespace icl {

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

namespace detail {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline ConstMap as_mat(const Tensor& t) {
  return ConstMap(t.values.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
inline MutMap as_mat(Tensor& t) {
  return MutMap(t.values.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
}  // namespace detail

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  // With record == false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // References an external tensor without copying; it must outlive the tape.
  Var leaf(const Tensor& t, bool requires_grad = true) {
    Node n;
    n.external = &t;
    n.requires_grad = record_ && requires_grad;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var constant(Tensor t) {
    Node n;
    n.owned = std::move(t);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor& value(Var v) const { return node(v.id).val(); }
  const Tensor& value(std::size_t id) const { return node(id).val(); }
  bool requires_grad(std::size_t id) const { return node(id).requires_grad; }

  // Gradient of the last backward() target w.r.t. v (zeros if unreached).
  Tensor grad(Var v) const {
    const Node& n = node(v.id);
    if (n.grad.values.empty()) return Tensor(n.val().shape);
    return n.grad;
  }

  // Zero-initialised accumulation buffer for a node's gradient.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.values.empty()) n.grad = Tensor(n.val().shape);
    return n.grad;
  }

  Var push(const std::string& op, Tensor value, std::vector<std::size_t> parents,
           BackwardFn fn) {
    for (double x : value.values) {
      if (!std::isfinite(x)) {
        throw NumericError(op + ": non-finite value in output of shape " +
                           shape_str(value.shape));
      }
    }
    Node n;
    n.owned = std::move(value);
    if (record_) {
      for (std::size_t p : parents) n.requires_grad = n.requires_grad || node(p).requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  void backward(Var loss) {
    if (loss.tape != this) throw Error("backward: variable belongs to another tape");
    if (value(loss).size() != 1) {
      throw Error("backward: loss must be scalar, got shape " + shape_str(value(loss).shape));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    grad_buffer(loss.id).values[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.values.empty()) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Tensor& val() const { return external ? *external : owned; }
  };

  const Node& node(std::size_t id) const { return nodes_.at(id); }

  bool record_;
  std::deque<Node> nodes_;
};

namespace detail {

inline void require_same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw Error(std::string(op) + ": operands on different tapes");
}

[[noreturn]] inline void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

inline void require_2d(const char* op, const Tensor& t) {
  if (t.rank() != 2) throw Error(std::string(op) + ": expected a matrix, got " + shape_str(t.shape));
}

enum class Broadcast { same, row, col };

// b may match a exactly, be a 1 x C row, or an R x 1 column.
inline Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return Broadcast::same;
  if (a.rank() == 2 && b.rank() == 2) {
    if (b.shape[0] == 1 && b.shape[1] == a.shape[1]) return Broadcast::row;
    if (b.shape[1] == 1 && b.shape[0] == a.shape[0]) return Broadcast::col;
  }
  shape_error(op, a.shape, b.shape);
}

// Calls fn(i, j) for every output index i and the matching index j into the
// broadcast operand. The branch on kind stays outside the loops.
template <class Fn>
inline void for_each_broadcast(Broadcast kind, std::size_t rows, std::size_t cols, Fn&& fn) {
  switch (kind) {
    case Broadcast::same:
      for (std::size_t i = 0; i < rows * cols; ++i) fn(i, i);
      return;
    case Broadcast::row:
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) fn(r * cols + c, c);
      return;
    case Broadcast::col:
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) fn(r * cols + c, r);
      return;
  }
}

template <class F, class DA, class DB>
Var binary(const char* op, Var a, Var b, F f, DA da, DB db) {
  require_same_tape(op, a, b);
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  const Broadcast kind = broadcast_kind(op, x, y);
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape);
  {
    double* o = out.values.data();
    const double* xv = x.values.data();
    const double* yv = y.values.data();
    for_each_broadcast(kind, rows, cols, [&](std::size_t i, std::size_t j) { o[i] = f(xv[i], yv[j]); });
  }
  const std::size_t ia = a.id, ib = b.id;
  return tape.push(op, std::move(out), {ia, ib},
                   [ia, ib, kind, rows, cols, da, db](Tape& t, const Tensor& g) {
                     const double* xv = t.value(ia).values.data();
                     const double* yv = t.value(ib).values.data();
                     const double* gv = g.values.data();
                     if (t.requires_grad(ia)) {
                       double* ga = t.grad_buffer(ia).values.data();
                       for_each_broadcast(kind, rows, cols,
                                          [&](std::size_t i, std::size_t j) { ga[i] += gv[i] * da(xv[i], yv[j]); });
                     }
                     if (t.requires_grad(ib)) {
                       double* gb = t.grad_buffer(ib).values.data();
                       for_each_broadcast(kind, rows, cols,
                                          [&](std::size_t i, std::size_t j) { gb[j] += gv[i] * db(xv[i], yv[j]); });
                     }
                   });
}

template <class F, class D>
Var unary(const char* op, Var a, F f, D d) {
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = f(x.values[i]);
  const std::size_t ia = a.id;
  // d receives (input, output) so tanh/sigmoid can reuse the forward value.
  return tape.push(op, std::move(out), {ia}, [ia, d, self = tape.size()](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i] * d(xv.values[i], yv.values[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

inline Var add(Var a, Var b) {
  return detail::binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Var sub(Var a, Var b) {
  return detail::binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Var mul(Var a, Var b) {
  return detail::binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Var scale(Var a, double k) {
  return detail::unary(
      "scale", a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

inline Var tanh(Var a) {
  return detail::unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Var a) {
  return detail::unary(
      "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var log(Var a) {
  return detail::unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

// ---------------------------------------------------------------------------
// Linear algebra and reductions

inline Var matmul(Var a, Var b) {
  detail::require_same_tape("matmul", a, b);
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  detail::require_2d("matmul", x);
  detail::require_2d("matmul", y);
  if (x.shape[1] != y.shape[0]) detail::shape_error("matmul", x.shape, y.shape);
  Tensor out({x.shape[0], y.shape[1]});
  detail::as_mat(out).noalias() = detail::as_mat(x) * detail::as_mat(y);
  const std::size_t ia = a.id, ib = b.id;
  return tape.push("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) {
      detail::as_mat(t.grad_buffer(ia)).noalias() +=
          detail::as_mat(g) * detail::as_mat(t.value(ib)).transpose();
    }
    if (t.requires_grad(ib)) {
      detail::as_mat(t.grad_buffer(ib)).noalias() +=
          detail::as_mat(t.value(ia)).transpose() * detail::as_mat(g);
    }
  });
}

inline Var sum_all(Var a) {
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  double s = 0.0;
  for (double v : x.values) s += v;
  const std::size_t ia = a.id;
  return tape.push("sum_all", Tensor::scalar(s), {ia}, [ia](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(ia);
    for (double& v : ga.values) v += g.values[0];
  });
}

// Numerically stable row-wise softmax of a matrix.
inline Var softmax_rows(Var a) {
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  detail::require_2d("softmax_rows", x);
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  Tensor out(x.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &x.values[r * cols];
    double* o = &out.values[r * cols];
    double m = in[0];
    for (std::size_t c = 1; c < cols; ++c) m = std::max(m, in[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - m));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  const std::size_t ia = a.id;
  return tape.push("softmax_rows", std::move(out), {ia},
                   [ia, rows, cols, self = tape.size()](Tape& t, const Tensor& g) {
                     const Tensor& y = t.value(self);
                     Tensor& ga = t.grad_buffer(ia);
                     for (std::size_t r = 0; r < rows; ++r) {
                       double dot = 0.0;
                       for (std::size_t c = 0; c < cols; ++c) dot += g.values[r * cols + c] * y.values[r * cols + c];
                       for (std::size_t c = 0; c < cols; ++c) {
                         const std::size_t i = r * cols + c;
                         ga.values[i] += y.values[i] * (g.values[i] - dot);
                       }
                     }
                   });
}

// Row-wise log(softmax(x)) computed without forming the probabilities.
inline Var log_softmax_rows(Var a) {
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  detail::require_2d("log_softmax_rows", x);
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  Tensor out(x.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &x.values[r * cols];
    double m = in[0];
    for (std::size_t c = 1; c < cols; ++c) m = std::max(m, in[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[c] - m);
    const double lse = m + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) out.values[r * cols + c] = in[c] - lse;
  }
  const std::size_t ia = a.id;
  return tape.push("log_softmax_rows", std::move(out), {ia},
                   [ia, rows, cols, self = tape.size()](Tape& t, const Tensor& g) {
                     const Tensor& y = t.value(self);
                     Tensor& ga = t.grad_buffer(ia);
                     for (std::size_t r = 0; r < rows; ++r) {
                       double gs = 0.0;
                       for (std::size_t c = 0; c < cols; ++c) gs += g.values[r * cols + c];
                       for (std::size_t c = 0; c < cols; ++c) {
                         const std::size_t i = r * cols + c;
                         ga.values[i] += g.values[i] - std::exp(y.values[i]) * gs;
                       }
                     }
                   });
}

// ---------------------------------------------------------------------------
// Shape manipulation

// Concatenates matrices with equal row counts along columns.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat: no operands");
  Tape& tape = *parts[0].tape;
  std::vector<std::size_t> ids, widths;
  const std::size_t rows = tape.value(parts[0]).rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != &tape) throw Error("concat: operands on different tapes");
    const Tensor& v = tape.value(p);
    detail::require_2d("concat", v);
    if (v.shape[0] != rows) detail::shape_error("concat", tape.value(parts[0]).shape, v.shape);
    ids.push_back(p.id);
    widths.push_back(v.shape[1]);
    total += v.shape[1];
  }
  Tensor out({rows, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = tape.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < widths[k]; ++c) out.values[r * total + off + c] = v.values[r * widths[k] + c];
    off += widths[k];
  }
  return tape.push("concat", std::move(out), ids, [ids, widths, rows, total](Tape& t, const Tensor& g) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        Tensor& gk = t.grad_buffer(ids[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gk.values[r * widths[k] + c] += g.values[r * total + o + c];
      }
      o += widths[k];
    }
  });
}

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

// Columns [begin, end) of a matrix.
inline Var slice(Var a, std::size_t begin, std::size_t end) {
  Tape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  detail::require_2d("slice", x);
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  if (begin >= end || end > cols) {
    throw Error("slice: columns [" + std::to_string(begin) + ", " + std::to_string(end) +
                ") out of range for shape " + shape_str(x.shape));
  }
  const std::size_t w = end - begin;
  Tensor out({rows, w});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out.values[r * w + c] = x.values[r * cols + begin + c];
  const std::size_t ia = a.id;
  return tape.push("slice", std::move(out), {ia}, [ia, rows, cols, begin, w](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) ga.values[r * cols + begin + c] += g.values[r * w + c];
  });
}

// Gathers rows of a V x E table.
inline Var embedding_lookup(Var table, std::span<const int> ids) {
  Tape& tape = *table.tape;
  const Tensor& w = tape.value(table);
  detail::require_2d("embedding_lookup", w);
  const std::size_t vocab = w.shape[0], dim = w.shape[1];
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw Error("embedding_lookup: id " + std::to_string(id) + " out of range for table " +
                  shape_str(w.shape));
    }
  }
  Tensor out({ids.size(), dim});
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) out.values[r * dim + c] = w.values[static_cast<std::size_t>(ids[r]) * dim + c];
  const std::size_t it = table.id;
  std::vector<int> idv(ids.begin(), ids.end());
  return tape.push("embedding_lookup", std::move(out), {it}, [it, idv, dim](Tape& t, const Tensor& g) {
    Tensor& gw = t.grad_buffer(it);
    for (std::size_t r = 0; r < idv.size(); ++r)
      for (std::size_t c = 0; c < dim; ++c) gw.values[static_cast<std::size_t>(idv[r]) * dim + c] += g.values[r * dim + c];
  });
}

// Stacks L matrices of shape B x H into a B x L x H tensor.
inline Var stack_steps(std::span<const Var> steps) {
  if (steps.empty()) throw Error("stack_steps: no operands");
  Tape& tape = *steps[0].tape;
  const Shape first = tape.value(steps[0]).shape;
  detail::require_2d("stack_steps", tape.value(steps[0]));
  const std::size_t batch = first[0], dim = first[1], len = steps.size();
  std::vector<std::size_t> ids;
  Tensor out({batch, len, dim});
  for (std::size_t l = 0; l < len; ++l) {
    const Tensor& v = tape.value(steps[l]);
    if (v.shape != first) detail::shape_error("stack_steps", first, v.shape);
    ids.push_back(steps[l].id);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t h = 0; h < dim; ++h) out.values[(b * len + l) * dim + h] = v.values[b * dim + h];
  }
  return tape.push("stack_steps", std::move(out), ids, [ids, batch, len, dim](Tape& t, const Tensor& g) {
    for (std::size_t l = 0; l < len; ++l) {
      if (!t.requires_grad(ids[l])) continue;
      Tensor& gl = t.grad_buffer(ids[l]);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t h = 0; h < dim; ++h) gl.values[b * dim + h] += g.values[(b * len + l) * dim + h];
    }
  });
}

namespace detail {
// Row b of a B x L x H tensor as an L x H matrix.
inline ConstMap slab(const Tensor& t, std::size_t b) {
  const std::size_t len = t.shape[1], dim = t.shape[2];
  return ConstMap(t.values.data() + b * len * dim, static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(dim));
}
inline MutMap slab(Tensor& t, std::size_t b) {
  const std::size_t len = t.shape[1], dim = t.shape[2];
  return MutMap(t.values.data() + b * len * dim, static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(dim));
}
inline Eigen::Map<const Eigen::RowVectorXd> row(const Tensor& t, std::size_t b) {
  return Eigen::Map<const Eigen::RowVectorXd>(t.values.data() + b * t.cols(), static_cast<Eigen::Index>(t.cols()));
}
inline Eigen::Map<Eigen::RowVectorXd> row(Tensor& t, std::size_t b) {
  return Eigen::Map<Eigen::RowVectorXd>(t.values.data() + b * t.cols(), static_cast<Eigen::Index>(t.cols()));
}
}  // namespace detail

// scores[b, l] = keys[b, l, :] . query[b, :]
inline Var attention_scores(Var keys, Var query) {
  detail::require_same_tape("attention_scores", keys, query);
  Tape& tape = *keys.tape;
  const Tensor& k = tape.value(keys);
  const Tensor& q = tape.value(query);
  if (k.rank() != 3 || q.rank() != 2 || k.shape[0] != q.shape[0] || k.shape[2] != q.shape[1]) {
    detail::shape_error("attention_scores", k.shape, q.shape);
  }
  const std::size_t batch = k.shape[0], len = k.shape[1];
  Tensor out({batch, len});
  for (std::size_t b = 0; b < batch; ++b) {
    detail::row(out, b).noalias() = detail::row(q, b) * detail::slab(k, b).transpose();
  }
  const std::size_t ik = keys.id, iq = query.id;
  return tape.push("attention_scores", std::move(out), {ik, iq}, [ik, iq, batch](Tape& t, const Tensor& g) {
    const Tensor& kv = t.value(ik);
    const Tensor& qv = t.value(iq);
    if (t.requires_grad(ik)) {
      Tensor& gk = t.grad_buffer(ik);
      for (std::size_t b = 0; b < batch; ++b)
        detail::slab(gk, b).noalias() += detail::row(g, b).transpose() * detail::row(qv, b);
    }
    if (t.requires_grad(iq)) {
      Tensor& gq = t.grad_buffer(iq);
      for (std::size_t b = 0; b < batch; ++b) detail::row(gq, b).noalias() += detail::row(g, b) * detail::slab(kv, b);
    }
  });
}

// context[b, :] = sum_l weights[b, l] * values[b, l, :]
inline Var attention_context(Var weights, Var values) {
  detail::require_same_tape("attention_context", weights, values);
  Tape& tape = *weights.tape;
  const Tensor& w = tape.value(weights);
  const Tensor& v = tape.value(values);
  if (v.rank() != 3 || w.rank() != 2 || w.shape[0] != v.shape[0] || w.shape[1] != v.shape[1]) {
    detail::shape_error("attention_context", w.shape, v.shape);
  }
  const std::size_t batch = v.shape[0], dim = v.shape[2];
  Tensor out({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) detail::row(out, b).noalias() = detail::row(w, b) * detail::slab(v, b);
  const std::size_t iw = weights.id, iv = values.id;
  return tape.push("attention_context", std::move(out), {iw, iv}, [iw, iv, batch](Tape& t, const Tensor& g) {
    const Tensor& wv = t.value(iw);
    const Tensor& vv = t.value(iv);
    if (t.requires_grad(iw)) {
      Tensor& gw = t.grad_buffer(iw);
      for (std::size_t b = 0; b < batch; ++b)
        detail::row(gw, b).noalias() += detail::row(g, b) * detail::slab(vv, b).transpose();
    }
    if (t.requires_grad(iv)) {
      Tensor& gv = t.grad_buffer(iv);
      for (std::size_t b = 0; b < batch; ++b)
        detail::slab(gv, b).noalias() += detail::row(wv, b).transpose() * detail::row(g, b);
    }
  });
}

// ---------------------------------------------------------------------------
// Gradient checking

// Builds a scalar loss from leaf variables bound to the given parameters.
using LossBuilder = std::function<Var(Tape&, std::span<const Var>)>;

inline std::vector<Tensor> autodiff_gradient(const LossBuilder& f, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p));
  Var loss = f(tape, leaves);
  tape.backward(loss);
  std::vector<Tensor> grads;
  for (const Var& v : leaves) grads.push_back(tape.grad(v));
  return grads;
}

// Central differences, one coordinate at a time.
inline std::vector<Tensor> numeric_gradient(const LossBuilder& f, std::span<const Tensor> params, double eps) {
  if (!(eps > 0.0)) throw Error("numeric_gradient: eps must be positive");
  std::vector<Tensor> work(params.begin(), params.end());
  auto eval = [&] {
    Tape tape(false);
    std::vector<Var> leaves;
    for (const Tensor& p : work) leaves.push_back(tape.leaf(p, false));
    return tape.value(f(tape, leaves)).item();
  };
  std::vector<Tensor> grads;
  for (std::size_t k = 0; k < work.size(); ++k) {
    Tensor g(work[k].shape);
    for (std::size_t i = 0; i < work[k].size(); ++i) {
      const double orig = work[k].values[i];
      work[k].values[i] = orig + eps;
      const double up = eval();
      work[k].values[i] = orig - eps;
      const double down = eval();
      work[k].values[i] = orig;
      g.values[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// max over coordinates of |a - b| / max(1e-12, |a| + |b|)
inline double max_relative_error(std::span<const Tensor> a, std::span<const Tensor> b) {
  if (a.size() != b.size()) throw Error("max_relative_error: gradient list length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].shape != b[k].shape) detail::shape_error("max_relative_error", a[k].shape, b[k].shape);
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      const double x = a[k].values[i], y = b[k].values[i];
      worst = std::max(worst, std::abs(x - y) / std::max(1e-12, std::abs(x) + std::abs(y)));
    }
  }
  return worst;
}

inline double grad_check(const LossBuilder& f, std::span<const Tensor> params, double eps = 1e-5) {
  const auto ad = autodiff_gradient(f, params);
  const auto fd = numeric_gradient(f, params, eps);
  return max_relative_error(ad, fd);
}

}  // namespace icl
