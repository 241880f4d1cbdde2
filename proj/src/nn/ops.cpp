// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "reno/errors.hpp"

namespace reno::nn {

namespace {

template <typename Scalar>
Tensor<Scalar>* grad_if_needed(Tape<Scalar>& tape, Var v) {
  return tape.requires_grad(v) ? &tape.grad(v) : nullptr;
}

void require_rank(const Shape& shape, std::size_t rank, const char* op) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + to_string(shape));
  }
}

}  // namespace

template <typename Scalar>
Var linear(Tape<Scalar>& tape, Var x, Var weights, std::optional<Var> bias) {
  const auto& xv = tape.value(x);
  const auto& wv = tape.value(weights);
  if (wv.rank() != 2 || xv.rank() < 1 || xv.shape().back() != wv.dim(0)) {
    throw DimensionError("linear: input " + to_string(xv.shape()) + " does not conform to weights " +
                         to_string(wv.shape()));
  }
  const std::size_t d_in = wv.dim(0);
  const std::size_t d_out = wv.dim(1);
  const std::size_t rows = xv.size() / d_in;
  if (bias && (tape.value(*bias).rank() != 1 || tape.value(*bias).dim(0) != d_out)) {
    throw DimensionError("linear: bias " + to_string(tape.value(*bias).shape()) + " does not match weights " +
                         to_string(wv.shape()));
  }

  Shape out_shape = xv.shape();
  out_shape.back() = d_out;
  Tensor<Scalar> out(out_shape);
  const Scalar* xp = xv.ptr();
  const Scalar* wp = wv.ptr();
  Scalar* op = out.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    Scalar* orow = op + r * d_out;
    if (bias) std::copy_n(tape.value(*bias).ptr(), d_out, orow);
    const Scalar* xrow = xp + r * d_in;
    for (std::size_t k = 0; k < d_in; ++k) {
      const Scalar a = xrow[k];
      if (a == Scalar{0}) continue;
      const Scalar* wrow = wp + k * d_out;
      for (std::size_t j = 0; j < d_out; ++j) orow[j] += a * wrow[j];
    }
  }

  auto backward = [x, weights, bias, rows, d_in, d_out](Tape<Scalar>& t, Var self) {
    const Scalar* gp = t.grad(self).ptr();
    if (auto* gw = grad_if_needed(t, weights)) {
      const Scalar* xp = t.value(x).ptr();
      Scalar* gwp = gw->ptr();
      for (std::size_t r = 0; r < rows; ++r) {
        const Scalar* grow = gp + r * d_out;
        const Scalar* xrow = xp + r * d_in;
        for (std::size_t k = 0; k < d_in; ++k) {
          const Scalar a = xrow[k];
          if (a == Scalar{0}) continue;
          Scalar* gwrow = gwp + k * d_out;
          for (std::size_t j = 0; j < d_out; ++j) gwrow[j] += a * grow[j];
        }
      }
    }
    if (bias) {
      if (auto* gb = grad_if_needed(t, *bias)) {
        Scalar* gbp = gb->ptr();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < d_out; ++j) gbp[j] += gp[r * d_out + j];
        }
      }
    }
    if (auto* gx = grad_if_needed(t, x)) {
      const Scalar* wp = t.value(weights).ptr();
      Scalar* gxp = gx->ptr();
      for (std::size_t r = 0; r < rows; ++r) {
        const Scalar* grow = gp + r * d_out;
        for (std::size_t k = 0; k < d_in; ++k) {
          const Scalar* wrow = wp + k * d_out;
          Scalar acc{0};
          for (std::size_t j = 0; j < d_out; ++j) acc += grow[j] * wrow[j];
          gxp[r * d_in + k] += acc;
        }
      }
    }
  };
  if (bias) return tape.record(std::move(out), {x, weights, *bias}, backward);
  return tape.record(std::move(out), {x, weights}, backward);
}

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out = tape.value(x);
  std::vector<std::size_t> active(out.size());
  PiecewisePattern* pattern = tape.pattern();
  if (pattern && pattern->mode() == PiecewisePattern::Mode::Replay) {
    active = pattern->next(out.size());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) active[i] = out[i] > Scalar{0};
    if (pattern) pattern->record(active);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!active[i]) out[i] = Scalar{0};
  }
  return tape.record(std::move(out), {x}, [x, active = std::move(active)](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (active[i]) gx[i] += g[i];
    }
  });
}

template <typename Scalar>
Var dropout(Tape<Scalar>& tape, Var x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const auto& xv = tape.value(x);
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  Tensor<Scalar> mask(xv.shape());
  Tensor<Scalar> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < rate ? Scalar{0} : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  return tape.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

template <typename Scalar>
Var conv1d(Tape<Scalar>& tape, Var x, Var filters, Var bias) {
  const auto& xv = tape.value(x);
  const auto& fv = tape.value(filters);
  require_rank(xv.shape(), 3, "conv1d input");
  require_rank(fv.shape(), 3, "conv1d filters");
  const std::size_t batch = xv.dim(0), c_in = xv.dim(1), length = xv.dim(2);
  const std::size_t c_out = fv.dim(0), kernel = fv.dim(2);
  if (fv.dim(1) != c_in || tape.value(bias).size() != c_out) {
    throw DimensionError("conv1d: input " + to_string(xv.shape()) + " does not conform to filters " +
                         to_string(fv.shape()));
  }
  if (length < kernel) {
    throw InputTooShortError("conv1d: input length " + std::to_string(length) + " is shorter than kernel " +
                             std::to_string(kernel));
  }
  const std::size_t out_len = length - kernel + 1;
  Tensor<Scalar> out({batch, c_out, out_len});
  const Scalar* bp = tape.value(bias).ptr();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      Scalar* orow = out.ptr() + (b * c_out + o) * out_len;
      std::fill_n(orow, out_len, bp[o]);
      for (std::size_t c = 0; c < c_in; ++c) {
        const Scalar* xrow = xv.ptr() + (b * c_in + c) * length;
        const Scalar* w = fv.ptr() + (o * c_in + c) * kernel;
        for (std::size_t k = 0; k < kernel; ++k) {
          const Scalar wk = w[k];
          const Scalar* xs = xrow + k;
          for (std::size_t t = 0; t < out_len; ++t) orow[t] += wk * xs[t];
        }
      }
    }
  }
  return tape.record(std::move(out), {x, filters, bias},
                     [x, filters, bias, batch, c_in, c_out, kernel, length, out_len](Tape<Scalar>& t, Var self) {
                       const Scalar* gp = t.grad(self).ptr();
                       const Scalar* xp = t.value(x).ptr();
                       const Scalar* fp = t.value(filters).ptr();
                       auto* gf = grad_if_needed(t, filters);
                       auto* gb = grad_if_needed(t, bias);
                       auto* gx = grad_if_needed(t, x);
                       for (std::size_t b = 0; b < batch; ++b) {
                         for (std::size_t o = 0; o < c_out; ++o) {
                           const Scalar* grow = gp + (b * c_out + o) * out_len;
                           if (gb) {
                             Scalar acc{0};
                             for (std::size_t s = 0; s < out_len; ++s) acc += grow[s];
                             (*gb)[o] += acc;
                           }
                           for (std::size_t c = 0; c < c_in; ++c) {
                             const std::size_t wbase = (o * c_in + c) * kernel;
                             const Scalar* xrow = xp + (b * c_in + c) * length;
                             for (std::size_t k = 0; k < kernel; ++k) {
                               if (gf) {
                                 Scalar acc{0};
                                 for (std::size_t s = 0; s < out_len; ++s) acc += grow[s] * xrow[s + k];
                                 (*gf)[wbase + k] += acc;
                               }
                               if (gx) {
                                 const Scalar wk = fp[wbase + k];
                                 Scalar* gxrow = gx->ptr() + (b * c_in + c) * length + k;
                                 for (std::size_t s = 0; s < out_len; ++s) gxrow[s] += wk * grow[s];
                               }
                             }
                           }
                         }
                       }
                     });
}

namespace {

// Shared by fixed and adaptive pooling: window i spans [starts[i], ends[i]).
template <typename Scalar>
Var pool_windows(Tape<Scalar>& tape, Var x, const std::vector<std::size_t>& starts,
                 const std::vector<std::size_t>& ends) {
  const auto& xv = tape.value(x);
  const std::size_t rows = xv.dim(0) * xv.dim(1);
  const std::size_t length = xv.dim(2);
  const std::size_t out_len = starts.size();
  Tensor<Scalar> out({xv.dim(0), xv.dim(1), out_len});
  std::vector<std::size_t> argmax(rows * out_len);
  PiecewisePattern* pattern = tape.pattern();
  const bool replay = pattern && pattern->mode() == PiecewisePattern::Mode::Replay;
  if (replay) argmax = pattern->next(argmax.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const Scalar* row = xv.ptr() + r * length;
    for (std::size_t i = 0; i < out_len; ++i) {
      std::size_t& chosen = argmax[r * out_len + i];
      if (!replay) {
        std::size_t best = starts[i];
        for (std::size_t p = starts[i] + 1; p < ends[i]; ++p) {
          if (row[p] > row[best]) best = p;
        }
        chosen = r * length + best;
      }
      out[r * out_len + i] = xv[chosen];
    }
  }
  if (pattern && !replay) pattern->record(argmax);
  return tape.record(std::move(out), {x}, [x, argmax = std::move(argmax)](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
  });
}

}  // namespace

template <typename Scalar>
Var max_pool1d(Tape<Scalar>& tape, Var x, std::size_t window, std::size_t stride) {
  const auto& xv = tape.value(x);
  require_rank(xv.shape(), 3, "max_pool1d");
  if (window == 0 || stride == 0) throw ConfigError("max_pool1d: window and stride must be positive");
  if (xv.dim(2) < window) {
    throw InputTooShortError("max_pool1d: length " + std::to_string(xv.dim(2)) + " is shorter than window " +
                             std::to_string(window));
  }
  const std::size_t out_len = (xv.dim(2) - window) / stride + 1;
  std::vector<std::size_t> starts(out_len), ends(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    starts[i] = i * stride;
    ends[i] = starts[i] + window;
  }
  return pool_windows(tape, x, starts, ends);
}

template <typename Scalar>
Var adaptive_max_pool1d(Tape<Scalar>& tape, Var x, std::size_t out_length) {
  const auto& xv = tape.value(x);
  require_rank(xv.shape(), 3, "adaptive_max_pool1d");
  if (out_length == 0) throw ConfigError("adaptive_max_pool1d: output length must be positive");
  const std::size_t length = xv.dim(2);
  std::vector<std::size_t> starts(out_length), ends(out_length);
  for (std::size_t i = 0; i < out_length; ++i) {
    starts[i] = (i * length) / out_length;
    ends[i] = ((i + 1) * length + out_length - 1) / out_length;
  }
  return pool_windows(tape, x, starts, ends);
}

template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, Shape shape) {
  Tensor<Scalar> out = tape.value(x).reshaped(std::move(shape));
  return tape.record(std::move(out), {x}, [x](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename Scalar>
Var swap_last_axes(Tape<Scalar>& tape, Var x) {
  const auto& xv = tape.value(x);
  require_rank(xv.shape(), 3, "swap_last_axes");
  const std::size_t batch = xv.dim(0), rows = xv.dim(1), cols = xv.dim(2);
  Tensor<Scalar> out({batch, cols, rows});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[(b * cols + j) * rows + i] = xv[(b * rows + i) * cols + j];
    }
  }
  return tape.record(std::move(out), {x}, [x, batch, rows, cols](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) gx[(b * rows + i) * cols + j] += g[(b * cols + j) * rows + i];
      }
    }
  });
}

template <typename Scalar>
Var softmax(Tape<Scalar>& tape, Var x) {
  const auto& xv = tape.value(x);
  const std::size_t n = xv.shape().back();
  const std::size_t rows = xv.size() / n;
  Tensor<Scalar> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Scalar* in = xv.ptr() + r * n;
    Scalar* o = out.ptr() + r * n;
    const Scalar peak = *std::max_element(in, in + n);
    Scalar total{0};
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  return tape.record(std::move(out), {x}, [x, rows, n](Tape<Scalar>& t, Var self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * n;
      Scalar dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < n; ++j) gx[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

template <typename Scalar>
Var batched_matmul(Tape<Scalar>& tape, Var lhs, Var rhs, bool transpose_rhs) {
  const auto& a = tape.value(lhs);
  const auto& b = tape.value(rhs);
  require_rank(a.shape(), 3, "batched_matmul lhs");
  require_rank(b.shape(), 3, "batched_matmul rhs");
  const std::size_t groups = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_rhs ? b.dim(1) : b.dim(2);
  const std::size_t k_rhs = transpose_rhs ? b.dim(2) : b.dim(1);
  if (b.dim(0) != groups || k_rhs != k) {
    throw DimensionError("batched_matmul: " + to_string(a.shape()) + " does not conform to " + to_string(b.shape()) +
                         (transpose_rhs ? " (transposed)" : ""));
  }
  // Element (p, q) of the rhs operand as used in the product, i.e. B[p][q]
  // with B of shape [k, n].
  auto rhs_at = [transpose_rhs, k, n](std::size_t g, std::size_t p, std::size_t q) {
    return transpose_rhs ? (g * n + q) * k + p : (g * k + p) * n + q;
  };
  Tensor<Scalar> out({groups, m, n});
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Scalar acc{0};
        for (std::size_t p = 0; p < k; ++p) acc += a[(g * m + i) * k + p] * b[rhs_at(g, p, j)];
        out[(g * m + i) * n + j] = acc;
      }
    }
  }
  return tape.record(std::move(out), {lhs, rhs}, [lhs, rhs, groups, m, k, n, rhs_at](Tape<Scalar>& t, Var self) {
    const auto& g_out = t.grad(self);
    const auto& a = t.value(lhs);
    const auto& b = t.value(rhs);
    auto* ga = grad_if_needed(t, lhs);
    auto* gb = grad_if_needed(t, rhs);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const Scalar go = g_out[(g * m + i) * n + j];
          for (std::size_t p = 0; p < k; ++p) {
            if (ga) (*ga)[(g * m + i) * k + p] += go * b[rhs_at(g, p, j)];
            if (gb) (*gb)[rhs_at(g, p, j)] += go * a[(g * m + i) * k + p];
          }
        }
      }
    }
  });
}

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var x, double factor) {
  Tensor<Scalar> out = tape.value(x);
  const auto f = static_cast<Scalar>(factor);
  for (auto& v : out.data()) v *= f;
  return tape.record(std::move(out), {x}, [x, f](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += f * g[i];
  });
}

namespace {

// Index maps between [batch, tokens, heads*dk] and [batch*heads, tokens, dk].
struct HeadLayout {
  std::size_t batch, tokens, heads, dk;
  std::size_t merged(std::size_t b, std::size_t t, std::size_t h, std::size_t d) const {
    return (b * tokens + t) * heads * dk + h * dk + d;
  }
  std::size_t split(std::size_t b, std::size_t t, std::size_t h, std::size_t d) const {
    return ((b * heads + h) * tokens + t) * dk + d;
  }
};

template <typename Scalar, typename Fn>
void for_each_head_element(const HeadLayout& l, Fn&& fn) {
  for (std::size_t b = 0; b < l.batch; ++b)
    for (std::size_t t = 0; t < l.tokens; ++t)
      for (std::size_t h = 0; h < l.heads; ++h)
        for (std::size_t d = 0; d < l.dk; ++d) fn(l.merged(b, t, h, d), l.split(b, t, h, d));
}

}  // namespace

template <typename Scalar>
Var split_heads(Tape<Scalar>& tape, Var x, std::size_t heads) {
  const auto& xv = tape.value(x);
  require_rank(xv.shape(), 3, "split_heads");
  if (heads == 0 || xv.dim(2) % heads != 0) {
    throw ConfigError("split_heads: width " + std::to_string(xv.dim(2)) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const HeadLayout l{xv.dim(0), xv.dim(1), heads, xv.dim(2) / heads};
  Tensor<Scalar> out({l.batch * heads, l.tokens, l.dk});
  for_each_head_element<Scalar>(l, [&](std::size_t m, std::size_t s) { out[s] = xv[m]; });
  return tape.record(std::move(out), {x}, [x, l](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for_each_head_element<Scalar>(l, [&](std::size_t m, std::size_t s) { gx[m] += g[s]; });
  });
}

template <typename Scalar>
Var merge_heads(Tape<Scalar>& tape, Var x, std::size_t heads) {
  const auto& xv = tape.value(x);
  require_rank(xv.shape(), 3, "merge_heads");
  if (heads == 0 || xv.dim(0) % heads != 0) {
    throw ConfigError("merge_heads: leading extent " + std::to_string(xv.dim(0)) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const HeadLayout l{xv.dim(0) / heads, xv.dim(1), heads, xv.dim(2)};
  Tensor<Scalar> out({l.batch, l.tokens, heads * l.dk});
  for_each_head_element<Scalar>(l, [&](std::size_t m, std::size_t s) { out[m] = xv[s]; });
  return tape.record(std::move(out), {x}, [x, l](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(x);
    for_each_head_element<Scalar>(l, [&](std::size_t m, std::size_t s) { gx[s] += g[m]; });
  });
}

template <typename Scalar>
Var concat_features(Tape<Scalar>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(0) != bv.dim(0)) {
    throw DimensionError("concat_features: cannot concatenate " + to_string(av.shape()) + " and " +
                         to_string(bv.shape()));
  }
  const std::size_t rows = av.dim(0), da = av.dim(1), db = bv.dim(1);
  Tensor<Scalar> out({rows, da + db});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.ptr() + r * da, da, out.ptr() + r * (da + db));
    std::copy_n(bv.ptr() + r * db, db, out.ptr() + r * (da + db) + da);
  }
  return tape.record(std::move(out), {a, b}, [a, b, rows, da, db](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    auto* ga = grad_if_needed(t, a);
    auto* gb = grad_if_needed(t, b);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < da && ga; ++j) (*ga)[r * da + j] += g[r * (da + db) + j];
      for (std::size_t j = 0; j < db && gb; ++j) (*gb)[r * db + j] += g[r * (da + db) + da + j];
    }
  });
}

template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, Var a, double wa, Var b, double wb) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError("weighted_sum: shapes " + to_string(av.shape()) + " and " + to_string(bv.shape()) +
                         " differ");
  }
  const auto ca = static_cast<Scalar>(wa);
  const auto cb = static_cast<Scalar>(wb);
  Tensor<Scalar> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * av[i] + cb * bv[i];
  return tape.record(std::move(out), {a, b}, [a, b, ca, cb](Tape<Scalar>& t, Var self) {
    const auto& g = t.grad(self);
    if (auto* ga = grad_if_needed(t, a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += ca * g[i];
    }
    if (auto* gb = grad_if_needed(t, b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += cb * g[i];
    }
  });
}

#define RENO_INSTANTIATE_OPS(T)                                                   \
  template Var linear<T>(Tape<T>&, Var, Var, std::optional<Var>);                 \
  template Var relu<T>(Tape<T>&, Var);                                            \
  template Var dropout<T>(Tape<T>&, Var, double, Rng&, bool);                     \
  template Var conv1d<T>(Tape<T>&, Var, Var, Var);                                \
  template Var max_pool1d<T>(Tape<T>&, Var, std::size_t, std::size_t);            \
  template Var adaptive_max_pool1d<T>(Tape<T>&, Var, std::size_t);                \
  template Var reshape<T>(Tape<T>&, Var, Shape);                                  \
  template Var swap_last_axes<T>(Tape<T>&, Var);                                  \
  template Var softmax<T>(Tape<T>&, Var);                                         \
  template Var batched_matmul<T>(Tape<T>&, Var, Var, bool);                       \
  template Var scale<T>(Tape<T>&, Var, double);                                   \
  template Var split_heads<T>(Tape<T>&, Var, std::size_t);                        \
  template Var merge_heads<T>(Tape<T>&, Var, std::size_t);                        \
  template Var concat_features<T>(Tape<T>&, Var, Var);                            \
  template Var weighted_sum<T>(Tape<T>&, Var, double, Var, double);

RENO_INSTANTIATE_OPS(float)
RENO_INSTANTIATE_OPS(double)

}  // namespace reno::nn
