#pragma once

// Reverse-mode differentiation over dense matrices. A Tape records one
// forward pass; backward() replays it in reverse. Parameters are leaves whose
// gradients accumulate straight into Parameter::grad.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "newsrel/error.hpp"
#include "newsrel/random.hpp"
#include "newsrel/tensor.hpp"

namespace newsrel {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
};

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  // record_grad == false builds an inference-only tape: no closures, no grads.
  explicit Tape(bool record_grad = true) : record_(record_grad) { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix m) { return push(std::move(m), false, nullptr); }

  Var param(Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.sink = &p.grad;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  Var push(Matrix value, bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  const Matrix& value(Var v) const { return value(v.id); }
  const Matrix& value(std::size_t id) const {
    const auto& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool recording() const { return record_; }

  // Gradient buffer of a node, allocated on first touch.
  Matrix& grad(Var v) { return grad(v.id); }
  Matrix& grad(std::size_t id) {
    auto& n = nodes_[id];
    if (n.sink) return *n.sink;
    if (!n.has_grad) {
      const auto& val = value(id);
      n.grad = Matrix(val.rows, val.cols);
      n.has_grad = true;
    }
    return n.grad;
  }

  bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }

  void backward(Var loss, double seed = 1.0) {
    auto& g = grad(loss);
    for (auto& x : g.data) x += seed;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.backward && n.has_grad) n.backward(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    Matrix* sink = nullptr;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool record_ = true;
};

namespace ag {

inline bool any_grad(Tape& t, std::initializer_list<Var> vs) {
  for (auto v : vs) {
    if (t.needs_grad(v)) return true;
  }
  return false;
}

inline Var matmul(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols != B.rows) throw ConfigError("matmul: inner dimensions differ");
  Matrix out(A.rows, B.cols);
  gemm_nn(A, B, out, false);
  return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) gemm_nt(g, t.value(b), t.grad(a), true);
    if (t.needs_grad(b)) gemm_tn(t.value(a), g, t.grad(b), true);
  });
}

// a * b^T
inline Var matmul_nt(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols != B.cols) throw ConfigError("matmul_nt: inner dimensions differ");
  Matrix out(A.rows, B.rows);
  gemm_nt(A, B, out, false);
  return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) gemm_nn(g, t.value(b), t.grad(a), true);
    if (t.needs_grad(b)) gemm_tn(g, t.value(a), t.grad(b), true);
  });
}

inline Var add(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (!A.same_shape(B)) throw ConfigError("add: shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
  return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (auto v : {a, b}) {
      if (!t.needs_grad(v)) continue;
      auto& d = t.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i];
    }
  });
}

// a + broadcast of the 1 x C row `bias` onto every row.
inline Var add_bias(Tape& t, Var a, Var bias) {
  const auto& A = t.value(a);
  const auto& B = t.value(bias);
  if (B.rows != 1 || B.cols != A.cols) throw ConfigError("add_bias: bias must be 1 x cols");
  Matrix out = A;
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += B.data[c];
  }
  return t.push(std::move(out), any_grad(t, {a, bias}), [a, bias](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) {
      auto& d = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i];
    }
    if (t.needs_grad(bias)) {
      auto& d = t.grad(bias);
      for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) d.data[c] += g(r, c);
      }
    }
  });
}

inline Var mul(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (!A.same_shape(B)) throw ConfigError("mul: shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
  return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) {
      auto& d = t.grad(a);
      const auto& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i] * bv.data[i];
    }
    if (t.needs_grad(b)) {
      auto& d = t.grad(b);
      const auto& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i] * av.data[i];
    }
  });
}

inline Var scale(Tape& t, Var a, double s) {
  Matrix out = t.value(a);
  for (auto& x : out.data) x *= s;
  return t.push(std::move(out), t.needs_grad(a), [a, s](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += s * g.data[i];
  });
}

namespace detail {

// Elementwise map whose derivative is expressed through (input, output).
template <typename F, typename D>
Var unary(Tape& t, Var a, F f, D df) {
  Matrix out = t.value(a);
  for (auto& x : out.data) x = f(x);
  return t.push(std::move(out), t.needs_grad(a), [a, df](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(a);
    const auto& y = t.value(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i] * df(x.data[i], y.data[i]);
  });
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline Var tanh(Tape& t, Var a) {
  return detail::unary(t, a, [](double x) { return std::tanh(x); },
                       [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Tape& t, Var a) {
  return detail::unary(t, a, detail::sigmoid, [](double, double y) { return y * (1.0 - y); });
}

inline Var relu(Tape& t, Var a) {
  return detail::unary(t, a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

// Exact (erf) GELU.
inline Var gelu(Tape& t, Var a) {
  return detail::unary(
      t, a, [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
      });
}

// Per-row normalization followed by gain (1 x C) and bias (1 x C).
inline Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-12) {
  const auto& X = t.value(x);
  const auto& G = t.value(gain);
  const auto& B = t.value(bias);
  const std::size_t n = X.cols;
  Matrix xhat(X.rows, n);
  std::vector<double> inv_std(X.rows);
  Matrix out(X.rows, n);
  for (std::size_t r = 0; r < X.rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += X(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (X(r, c) - mean) * (X(r, c) - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (X(r, c) - mean) * inv_std[r];
      out(r, c) = xhat(r, c) * G.data[c] + B.data[c];
    }
  }
  return t.push(std::move(out), any_grad(t, {x, gain, bias}),
                [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                      std::size_t self) {
                  const auto& g = t.grad(self);
                  const auto& G = t.value(gain);
                  const std::size_t n = g.cols;
                  if (t.needs_grad(gain)) {
                    auto& dg = t.grad(gain);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                      for (std::size_t c = 0; c < n; ++c) dg.data[c] += g(r, c) * xhat(r, c);
                    }
                  }
                  if (t.needs_grad(bias)) {
                    auto& db = t.grad(bias);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                      for (std::size_t c = 0; c < n; ++c) db.data[c] += g(r, c);
                    }
                  }
                  if (t.needs_grad(x)) {
                    auto& dx = t.grad(x);
                    std::vector<double> dxhat(n);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                      double sum = 0.0;
                      double sum_xh = 0.0;
                      for (std::size_t c = 0; c < n; ++c) {
                        dxhat[c] = g(r, c) * G.data[c];
                        sum += dxhat[c];
                        sum_xh += dxhat[c] * xhat(r, c);
                      }
                      const double inv_n = 1.0 / static_cast<double>(n);
                      for (std::size_t c = 0; c < n; ++c) {
                        dx(r, c) += inv_std[r] * (dxhat[c] - inv_n * sum - xhat(r, c) * inv_n * sum_xh);
                      }
                    }
                  }
                });
}

// Row-wise softmax restricted to columns whose key_mask entry is 1; masked
// columns get probability exactly 0. Rows with no unmasked column are zero.
inline Var masked_softmax(Tape& t, Var x, std::span<const std::uint8_t> key_mask) {
  const auto& X = t.value(x);
  if (key_mask.size() != X.cols) throw ConfigError("masked_softmax: mask length differs from columns");
  Matrix out(X.rows, X.cols);
  for (std::size_t r = 0; r < X.rows; ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < X.cols; ++c) {
      if (key_mask[c]) mx = std::max(mx, X(r, c));
    }
    if (mx == -INFINITY) continue;
    double sum = 0.0;
    for (std::size_t c = 0; c < X.cols; ++c) {
      if (!key_mask[c]) continue;
      out(r, c) = std::exp(X(r, c) - mx);
      sum += out(r, c);
    }
    for (std::size_t c = 0; c < X.cols; ++c) out(r, c) /= sum;
  }
  return t.push(std::move(out), t.needs_grad(x), [x](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& p = t.value(self);
    auto& d = t.grad(x);
    for (std::size_t r = 0; r < g.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols; ++c) dot += g(r, c) * p(r, c);
      for (std::size_t c = 0; c < g.cols; ++c) d(r, c) += p(r, c) * (g(r, c) - dot);
    }
  });
}

inline Var slice_cols(Tape& t, Var a, std::size_t c0, std::size_t n) {
  const auto& A = t.value(a);
  if (c0 + n > A.cols) throw ConfigError("slice_cols: out of range");
  Matrix out(A.rows, n);
  for (std::size_t r = 0; r < A.rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r, c) = A(r, c0 + c);
  }
  return t.push(std::move(out), t.needs_grad(a), [a, c0](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) d(r, c0 + c) += g(r, c);
    }
  });
}

inline Var slice_rows(Tape& t, Var a, std::size_t r0, std::size_t n) {
  const auto& A = t.value(a);
  if (r0 + n > A.rows) throw ConfigError("slice_rows: out of range");
  Matrix out(n, A.cols);
  std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(r0 * A.cols),
            A.data.begin() + static_cast<std::ptrdiff_t>((r0 + n) * A.cols), out.data.begin());
  return t.push(std::move(out), t.needs_grad(a), [a, r0](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) d.data[r0 * g.cols + i] += g.data[i];
  });
}

inline Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: nothing to concatenate");
  const std::size_t rows = t.value(parts[0]).rows;
  std::size_t cols = 0;
  bool req = false;
  for (auto p : parts) {
    if (t.value(p).rows != rows) throw ConfigError("concat_cols: row counts differ");
    cols += t.value(p).cols;
    req = req || t.needs_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& P = t.value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < P.cols; ++c) out(r, off + c) = P(r, c);
    }
    off += P.cols;
  }
  return t.push(std::move(out), req, [parts](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (auto p : parts) {
      const std::size_t pc = t.value(p).cols;
      if (t.needs_grad(p)) {
        auto& d = t.grad(p);
        for (std::size_t r = 0; r < g.rows; ++r) {
          for (std::size_t c = 0; c < pc; ++c) d(r, c) += g(r, off + c);
        }
      }
      off += pc;
    }
  });
}

// Stacks every window of k consecutive rows into one row:
// (T x C) -> ((T - k + 1) x (k * C)). Requires T >= k.
inline Var unfold_rows(Tape& t, Var a, std::size_t k) {
  const auto& A = t.value(a);
  if (k == 0 || A.rows < k) throw ConfigError("unfold_rows: window larger than sequence");
  const std::size_t n = A.rows - k + 1;
  Matrix out(n, k * A.cols);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(i * A.cols),
              A.data.begin() + static_cast<std::ptrdiff_t>((i + k) * A.cols),
              out.data.begin() + static_cast<std::ptrdiff_t>(i * k * A.cols));
  }
  return t.push(std::move(out), t.needs_grad(a), [a, k](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    const std::size_t width = k * d.cols;
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < width; ++j) d.data[i * d.cols + j] += g.data[i * width + j];
    }
  });
}

// Rows of a at the given indices, in order.
inline Var select_rows(Tape& t, Var a, std::vector<std::size_t> rows) {
  const auto& A = t.value(a);
  Matrix out(rows.size(), A.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= A.rows) throw ConfigError("select_rows: index out of range");
    std::copy(A.row(rows[i]).begin(), A.row(rows[i]).end(), out.row(i).begin());
  }
  return t.push(std::move(out), t.needs_grad(a), [a, rows = std::move(rows)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < g.cols; ++c) d(rows[i], c) += g(i, c);
    }
  });
}

// Column-wise maximum over rows -> 1 x C. First maximal row wins ties.
inline Var max_rows(Tape& t, Var a) {
  const auto& A = t.value(a);
  if (A.rows == 0) throw ConfigError("max_rows: empty input");
  Matrix out(1, A.cols);
  std::vector<std::size_t> arg(A.cols, 0);
  for (std::size_t c = 0; c < A.cols; ++c) {
    out.data[c] = A(0, c);
    for (std::size_t r = 1; r < A.rows; ++r) {
      if (A(r, c) > out.data[c]) {
        out.data[c] = A(r, c);
        arg[c] = r;
      }
    }
  }
  return t.push(std::move(out), t.needs_grad(a), [a, arg = std::move(arg)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t c = 0; c < g.cols; ++c) d(arg[c], c) += g.data[c];
  });
}

// Appends zero rows until the input has at least min_rows rows.
inline Var pad_rows(Tape& t, Var a, std::size_t min_rows) {
  const auto& A = t.value(a);
  if (A.rows >= min_rows) return a;
  Matrix out(min_rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), out.data.begin());
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += g.data[i];
  });
}

// Inverted dropout. rng == nullptr or rate == 0 is the identity.
inline Var dropout(Tape& t, Var a, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  const auto& A = t.value(a);
  Matrix keep(A.rows, A.cols);
  const double s = 1.0 / (1.0 - rate);
  for (auto& k : keep.data) k = uniform01(*rng) >= rate ? s : 0.0;
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= keep.data[i];
  return t.push(std::move(out), t.needs_grad(a), [a, keep = std::move(keep)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& d = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i] * keep.data[i];
  });
}

// Embedding lookup: row i of the result is row ids[i] of the table.
inline Var gather(Tape& t, Parameter& table, std::span<const int> ids) {
  Matrix out(ids.size(), table.value.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto id = static_cast<std::size_t>(ids[i]);
    if (ids[i] < 0 || id >= table.value.rows) {
      throw ConfigError("gather: id " + std::to_string(ids[i]) + " outside table of " +
                        std::to_string(table.value.rows) + " rows (" + table.name + ")");
    }
    std::copy(table.value.row(id).begin(), table.value.row(id).end(), out.row(i).begin());
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return t.push(std::move(out), t.recording(), [&table, idv = std::move(idv)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      auto dst = table.grad.row(static_cast<std::size_t>(idv[i]));
      auto src = g.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

// Numerically stable log-softmax of a 1 x K row.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[arg]) arg = i;
  }
  const double mx = logits[arg];
  double rest = 0.0;  // sum of exp(v - mx) over all but the maximum
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != arg) rest += std::exp(logits[i] - mx);
  }
  // log1p keeps saturated losses accurate to full relative precision.
  const double log_norm = std::log1p(rest);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = (logits[i] - mx) - log_norm;
  return out;
}

// weight * (-log softmax(logits)[label]) as a 1 x 1 node.
inline Var cross_entropy(Tape& t, Var logits, int label, double weight = 1.0) {
  const auto& L = t.value(logits);
  if (L.rows != 1 || label < 0 || static_cast<std::size_t>(label) >= L.cols) {
    throw ConfigError("cross_entropy: expects 1 x K logits and label < K");
  }
  const auto lp = log_softmax(L.row(0));
  Matrix out(1, 1, -weight * lp[static_cast<std::size_t>(label)]);
  return t.push(std::move(out), t.needs_grad(logits), [logits, label, weight, lp](Tape& t, std::size_t self) {
    const double g = t.grad(self).data[0];
    auto& d = t.grad(logits);
    for (std::size_t k = 0; k < lp.size(); ++k) {
      // p - 1 via expm1 for the label term.
      const double dk = static_cast<int>(k) == label ? std::expm1(lp[k]) : std::exp(lp[k]);
      d.data[k] += g * weight * dk;
    }
  });
}

}  // namespace ag
}  // namespace newsrel
