#include "dfd/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

namespace dfd::num {
namespace {

// Reductions run in at least double precision.
template <typename T>
using Acc = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

// c[m×n] += a[m×k] · b[k×n]
template <typename T>
void gemm_nn(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[k×n] += aᵀ · g for a[m×k], g[m×n]
template <typename T>
void gemm_tn(const T* __restrict a, const T* __restrict g, T* __restrict c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

template <typename T>
std::vector<T> transposed(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) {
    throw ShapeError(std::string(op) + " expects a rank-2 tensor, got " + shape_str(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

template <typename T>
void accumulate(Tensor<T>& dst, std::span<const T> src) {
  auto d = dst.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) {
    throw ShapeError("softmax axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  AxisSplit out{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.inner *= s[i];
  return out;
}

// Max-shifted softmax along one axis.
template <typename T>
void softmax_into(std::span<const T> x, std::span<T> y, const AxisSplit& ax) {
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t in = 0; in < ax.inner; ++in) {
      const std::size_t base = o * ax.n * ax.inner + in;
      T mx = x[base];
      for (std::size_t j = 1; j < ax.n; ++j) mx = std::max(mx, x[base + j * ax.inner]);
      Acc<T> total = 0.0;
      for (std::size_t j = 0; j < ax.n; ++j) {
        const T e = std::exp(x[base + j * ax.inner] - mx);
        y[base + j * ax.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < ax.n; ++j) {
        y[base + j * ax.inner] = static_cast<T>(y[base + j * ax.inner] / total);
      }
    }
  }
}

// Elementwise op whose derivative is expressed through (x, y).
template <typename T, typename F, typename DF>
Var<T> unary(const Var<T>& x, F f, DF df) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  auto xs = xv.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  return x.tape().record(std::move(out), {x},
                         [x, df](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& gy) {
                           if (!t.needs_grad(x)) return;
                           auto xs = x.value().data();
                           auto ys = y.data();
                           auto g = gy.data();
                           auto gx = t.grad(x).data();
                           for (std::size_t i = 0; i < gx.size(); ++i) {
                             gx[i] += g[i] * df(xs[i], ys[i]);
                           }
                         });
}

}  // namespace

// ---- Plain tensor math ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a.shape(), "matmul");
  require_rank2(b.shape(), "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  gemm_nn(a.data().data(), b.data().data(), c.data().data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  Tensor<T> y(x.shape());
  softmax_into<T>(x.data(), y.data(), split_axis(x.shape(), axis));
  return y;
}

template <typename T>
T cross_entropy(const Tensor<T>& probs, std::span<const std::size_t> labels) {
  require_rank2(probs.shape(), "cross_entropy");
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  Acc<T> total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] >= classes) {
      throw InputError("cross_entropy: label " + std::to_string(labels[r]) + " out of range [0, " +
                       std::to_string(classes) + ")");
    }
    const Acc<T> p = std::max(static_cast<Acc<T>>(probs.at(r, labels[r])), Acc<T>(kProbFloor));
    total -= std::log(p);
  }
  return static_cast<T>(total / static_cast<Acc<T>>(batch));
}

// ---- Traced ops ----

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  Tensor<T> c = matmul(a.value(), b.value());
  return a.tape().record(std::move(c), {a, b},
                         [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           const Tensor<T>& av = a.value();
                           const Tensor<T>& bv = b.value();
                           const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
                           if (t.needs_grad(a)) {
                             // dA = G · Bᵀ
                             const auto bt = transposed(bv.data().data(), k, n);
                             gemm_nn(g.data().data(), bt.data(), t.grad(a).data().data(), m, n, k);
                           }
                           if (t.needs_grad(b)) {
                             // dB = Aᵀ · G
                             gemm_tn(av.data().data(), g.data().data(), t.grad(b).data().data(), m,
                                     k, n);
                           }
                         });
}

template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_rank2(av.shape(), "matmul_nt");
  require_rank2(bv.shape(), "matmul_nt");
  if (av.dim(1) != bv.dim(1)) {
    throw ShapeError("matmul_nt: inner dimensions disagree: " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()) + "^T");
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  const auto bt = transposed(bv.data().data(), n, k);
  Tensor<T> c({m, n});
  gemm_nn(av.data().data(), bt.data(), c.data().data(), m, k, n);
  return a.tape().record(std::move(c), {a, b},
                         [a, b, m, k, n](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (t.needs_grad(a)) {
                             // dA = G · B
                             gemm_nn(g.data().data(), b.value().data().data(),
                                     t.grad(a).data().data(), m, n, k);
                           }
                           if (t.needs_grad(b)) {
                             // dB = Gᵀ · A
                             gemm_tn(g.data().data(), a.value().data().data(),
                                     t.grad(b).data().data(), m, n, k);
                           }
                         });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  accumulate(out, b.value().data());
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (t.needs_grad(a)) accumulate(t.grad(a), g.data());
                           if (t.needs_grad(b)) accumulate(t.grad(b), g.data());
                         });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  auto o = out.data();
  auto bs = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bs[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (t.needs_grad(a)) accumulate(t.grad(a), g.data());
                           if (t.needs_grad(b)) {
                             auto gb = t.grad(b).data();
                             auto gs = g.data();
                             for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gs[i];
                           }
                         });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out = a.value();
  auto o = out.data();
  auto bs = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bs[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           auto gs = g.data();
                           if (t.needs_grad(a)) {
                             auto ga = t.grad(a).data();
                             auto bs = b.value().data();
                             for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gs[i] * bs[i];
                           }
                           if (t.needs_grad(b)) {
                             auto gb = t.grad(b).data();
                             auto as = a.value().data();
                             for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gs[i] * as[i];
                           }
                         });
}

template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& bias) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv.shape(), "add_row");
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (bias.value().size() != n) {
    throw ShapeError("add_row: bias " + shape_str(bias.shape()) + " does not match rows of " +
                     shape_str(xv.shape()));
  }
  Tensor<T> out = xv;
  auto bs = bias.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < n; ++j) row[j] += bs[j];
  }
  return x.tape().record(std::move(out), {x, bias},
                         [x, bias, m, n](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (t.needs_grad(x)) accumulate(t.grad(x), g.data());
                           if (t.needs_grad(bias)) {
                             auto gb = t.grad(bias).data();
                             for (std::size_t r = 0; r < m; ++r) {
                               auto row = g.row(r);
                               for (std::size_t j = 0; j < n; ++j) gb[j] += row[j];
                             }
                           }
                         });
}

template <typename T>
Var<T> affine(const Var<T>& x, T scale, T shift) {
  return unary(
      x, [scale, shift](T v) { return scale * v + shift; }, [scale](T, T) { return scale; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary(
      x, [](T v) { return T{1} / (T{1} + std::exp(-v)); },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary(
      x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  constexpr T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T a = static_cast<T>(0.044715);
  return unary(
      x,
      [](T v) { return T{0.5} * v * (T{1} + std::tanh(c * (v + a * v * v * v))); },
      [](T v, T) {
        const T th = std::tanh(c * (v + a * v * v * v));
        return T{0.5} * (T{1} + th) +
               T{0.5} * v * (T{1} - th * th) * c * (T{1} + T{3} * a * v * v);
      });
}

template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis) {
  const AxisSplit ax = split_axis(x.shape(), axis);
  Tensor<T> y = softmax(x.value(), axis);
  return x.tape().record(std::move(y), {x},
                         [x, ax](Tape<T>& t, const Tensor<T>& yv, const Tensor<T>& g) {
                           if (!t.needs_grad(x)) return;
                           auto ys = yv.data();
                           auto gs = g.data();
                           auto gx = t.grad(x).data();
                           for (std::size_t o = 0; o < ax.outer; ++o) {
                             for (std::size_t in = 0; in < ax.inner; ++in) {
                               const std::size_t base = o * ax.n * ax.inner + in;
                               T dot = 0;
                               for (std::size_t j = 0; j < ax.n; ++j) {
                                 const std::size_t idx = base + j * ax.inner;
                                 dot += gs[idx] * ys[idx];
                               }
                               for (std::size_t j = 0; j < ax.n; ++j) {
                                 const std::size_t idx = base + j * ax.inner;
                                 gx[idx] += ys[idx] * (gs[idx] - dot);
                               }
                             }
                           }
                         });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& probs, std::span<const std::size_t> labels) {
  const T loss = cross_entropy(probs.value(), labels);
  std::vector<std::size_t> lbl(labels.begin(), labels.end());
  return probs.tape().record(
      Tensor<T>::scalar(loss), {probs},
      [probs, lbl = std::move(lbl)](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        if (!t.needs_grad(probs)) return;
        const Tensor<T>& pv = probs.value();
        Tensor<T>& gp = t.grad(probs);
        const T scale = g[0] / static_cast<T>(lbl.size());
        for (std::size_t r = 0; r < lbl.size(); ++r) {
          const T p = pv.at(r, lbl[r]);
          if (static_cast<double>(p) > kProbFloor) gp.at(r, lbl[r]) -= scale / p;
        }
      });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  Acc<T> total = 0.0;
  for (T v : x.value().data()) total += v;
  return x.tape().record(Tensor<T>::scalar(static_cast<T>(total)), {x},
                         [x](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (!t.needs_grad(x)) return;
                           for (T& v : t.grad(x).data()) v += g[0];
                         });
}

template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const std::size_t> ids) {
  const Tensor<T>& tv = table.value();
  require_rank2(tv.shape(), "embedding");
  const std::size_t dim = tv.dim(1);
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  Tensor<T> out({ids.size(), dim});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.dim(0)) {
      throw InputError("embedding: id " + std::to_string(ids[i]) + " out of range for table " +
                       shape_str(tv.shape()));
    }
    std::copy_n(tv.row(ids[i]).begin(), dim, out.row(i).begin());
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return table.tape().record(
      std::move(out), {table},
      [table, idx = std::move(idx), dim](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        if (!t.needs_grad(table)) return;
        Tensor<T>& gt = t.grad(table);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          auto dst = gt.row(idx[i]);
          auto src = g.row(i);
          for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
        }
      });
}

template <typename T>
Var<T> gather_rows(const Var<T>& x, std::span<const std::size_t> rows) {
  require_rank2(x.shape(), "gather_rows");
  return embedding(x, rows);
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t begin, std::size_t end) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv.shape(), "slice_cols");
  if (begin >= end || end > xv.dim(1)) {
    throw ShapeError("slice_cols: bad range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") for " + shape_str(xv.shape()));
  }
  const std::size_t m = xv.dim(0), w = end - begin;
  Tensor<T> out({m, w});
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(xv.row(r).begin() + static_cast<std::ptrdiff_t>(begin), w, out.row(r).begin());
  }
  return x.tape().record(std::move(out), {x},
                         [x, begin, w, m](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           if (!t.needs_grad(x)) return;
                           Tensor<T>& gx = t.grad(x);
                           for (std::size_t r = 0; r < m; ++r) {
                             auto dst = gx.row(r).subspan(begin, w);
                             auto src = g.row(r);
                             for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                           }
                         });
}

template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_rank2(av.shape(), "concat_cols");
  require_rank2(bv.shape(), "concat_cols");
  if (av.dim(0) != bv.dim(0)) {
    throw ShapeError("concat_cols: row mismatch " + shape_str(av.shape()) + " vs " +
                     shape_str(bv.shape()));
  }
  const std::size_t m = av.dim(0), na = av.dim(1), nb = bv.dim(1);
  Tensor<T> out({m, na + nb});
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.row(r).begin(), na, out.row(r).begin());
    std::copy_n(bv.row(r).begin(), nb, out.row(r).begin() + static_cast<std::ptrdiff_t>(na));
  }
  return a.tape().record(std::move(out), {a, b},
                         [a, b, m, na, nb](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                           const bool ga = t.needs_grad(a), gb = t.needs_grad(b);
                           for (std::size_t r = 0; r < m; ++r) {
                             auto src = g.row(r);
                             if (ga) {
                               auto dst = t.grad(a).row(r);
                               for (std::size_t j = 0; j < na; ++j) dst[j] += src[j];
                             }
                             if (gb) {
                               auto dst = t.grad(b).row(r);
                               for (std::size_t j = 0; j < nb; ++j) dst[j] += src[na + j];
                             }
                           }
                         });
}

template <typename T>
Var<T> select_rows(std::span<const std::uint8_t> take_a, const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "select_rows");
  require_rank2(a.shape(), "select_rows");
  const std::size_t m = a.value().dim(0);
  if (take_a.size() != m) throw ShapeError("select_rows: mask length does not match rows");
  Tensor<T> out = b.value();
  for (std::size_t r = 0; r < m; ++r) {
    if (take_a[r]) std::copy(a.value().row(r).begin(), a.value().row(r).end(), out.row(r).begin());
  }
  std::vector<std::uint8_t> mask(take_a.begin(), take_a.end());
  return a.tape().record(
      std::move(out), {a, b},
      [a, b, mask = std::move(mask)](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        const bool ga = t.needs_grad(a), gb = t.needs_grad(b);
        for (std::size_t r = 0; r < mask.size(); ++r) {
          const bool to_a = mask[r] != 0;
          if (to_a && !ga) continue;
          if (!to_a && !gb) continue;
          auto dst = (to_a ? t.grad(a) : t.grad(b)).row(r);
          auto src = g.row(r);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw UsageError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> mask(x.shape());
  for (T& m : mask.data()) m = rng.bernoulli(rate) ? T{0} : keep_scale;
  return mul(x, x.tape().constant(std::move(mask)));
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv.shape(), "layer_norm");
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw ShapeError("layer_norm: affine parameters do not match width of " +
                     shape_str(xv.shape()));
  }
  Tensor<T> xhat(xv.shape());
  std::vector<T> rstd(m);
  Tensor<T> out(xv.shape());
  auto gs = gamma.value().data();
  auto bs = beta.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    auto xr = xv.row(r);
    Acc<T> mean = 0.0;
    for (T v : xr) mean += v;
    mean /= static_cast<Acc<T>>(n);
    Acc<T> var = 0.0;
    for (T v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<Acc<T>>(n);
    const Acc<T> rs = 1 / std::sqrt(var + static_cast<Acc<T>>(eps));
    rstd[r] = static_cast<T>(rs);
    auto hr = xhat.row(r);
    auto orow = out.row(r);
    for (std::size_t j = 0; j < n; ++j) {
      hr[j] = static_cast<T>((xr[j] - mean) * rs);
      orow[j] = gs[j] * hr[j] + bs[j];
    }
  }
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), rstd = std::move(rstd), m, n](
          Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        auto gs = gamma.value().data();
        if (t.needs_grad(gamma) || t.needs_grad(beta)) {
          auto dg = t.grad(gamma).data();
          auto db = t.grad(beta).data();
          for (std::size_t r = 0; r < m; ++r) {
            auto gr = g.row(r);
            auto hr = xhat.row(r);
            for (std::size_t j = 0; j < n; ++j) {
              dg[j] += gr[j] * hr[j];
              db[j] += gr[j];
            }
          }
        }
        if (!t.needs_grad(x)) return;
        Tensor<T>& gx = t.grad(x);
        std::vector<T> dh(n);
        for (std::size_t r = 0; r < m; ++r) {
          auto gr = g.row(r);
          auto hr = xhat.row(r);
          T mean_dh = 0, mean_dh_h = 0;
          for (std::size_t j = 0; j < n; ++j) {
            dh[j] = gr[j] * gs[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * hr[j];
          }
          mean_dh /= static_cast<T>(n);
          mean_dh_h /= static_cast<T>(n);
          auto dst = gx.row(r);
          for (std::size_t j = 0; j < n; ++j) {
            dst[j] += rstd[r] * (dh[j] - mean_dh - hr[j] * mean_dh_h);
          }
        }
      });
}

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionLayout& layout,
                 std::vector<Tensor<T>>* probs_out) {
  const Tensor<T>& qv = q.value();
  require_rank2(qv.shape(), "attention");
  require_same(qv.shape(), k.shape(), "attention");
  require_same(qv.shape(), v.shape(), "attention");
  const std::size_t B = layout.batch, L = layout.seq_len, H = layout.heads;
  const std::size_t width = qv.dim(1);
  if (B * L != qv.dim(0) || layout.lengths.size() != B) {
    throw ShapeError("attention: layout " + std::to_string(B) + "x" + std::to_string(L) +
                     " does not match input " + shape_str(qv.shape()));
  }
  if (H == 0 || width % H != 0) {
    throw ShapeError("attention: width " + std::to_string(width) + " not divisible by " +
                     std::to_string(H) + " heads");
  }
  for (std::size_t len : layout.lengths) {
    if (len > L) throw ShapeError("attention: sequence length exceeds layout");
  }
  const std::size_t dh = width / H;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const bool causal = layout.causal;

  // probs[(b*H + h)*L*L + i*L + j]
  std::vector<T> probs(B * H * L * L, T{0});
  Tensor<T> out(qv.shape());
  const Tensor<T>& kv = k.value();
  const Tensor<T>& vv = v.value();
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t len = layout.lengths[b];
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t col = h * dh;
      T* P = probs.data() + (b * H + h) * L * L;
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t kmax = causal ? i + 1 : len;
        auto qi = qv.row(b * L + i).subspan(col, dh);
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < kmax; ++j) {
          auto kj = kv.row(b * L + j).subspan(col, dh);
          T s = 0;
          for (std::size_t d = 0; d < dh; ++d) s += qi[d] * kj[d];
          s *= scale;
          P[i * L + j] = s;
          mx = std::max(mx, s);
        }
        Acc<T> total = 0.0;
        for (std::size_t j = 0; j < kmax; ++j) {
          const T e = std::exp(P[i * L + j] - mx);
          P[i * L + j] = e;
          total += e;
        }
        auto oi = out.row(b * L + i).subspan(col, dh);
        for (std::size_t j = 0; j < kmax; ++j) {
          P[i * L + j] = static_cast<T>(P[i * L + j] / total);
          const T p = P[i * L + j];
          auto vj = vv.row(b * L + j).subspan(col, dh);
          for (std::size_t d = 0; d < dh; ++d) oi[d] += p * vj[d];
        }
      }
      if (probs_out) {
        probs_out->emplace_back(Shape{L, L}, std::vector<T>(P, P + L * L));
      }
    }
  }

  return q.tape().record(
      std::move(out), {q, k, v},
      [q, k, v, layout, probs = std::move(probs), dh, scale](Tape<T>& t, const Tensor<T>&,
                                                             const Tensor<T>& g) {
        const std::size_t B = layout.batch, L = layout.seq_len, H = layout.heads;
        const bool gq = t.needs_grad(q), gk = t.needs_grad(k), gv = t.needs_grad(v);
        if (!gq && !gk && !gv) return;
        Tensor<T>* dq = gq ? &t.grad(q) : nullptr;
        Tensor<T>* dk = gk ? &t.grad(k) : nullptr;
        Tensor<T>* dv = gv ? &t.grad(v) : nullptr;
        const Tensor<T>& qv = q.value();
        const Tensor<T>& kv = k.value();
        const Tensor<T>& vv = v.value();
        std::vector<T> dp(L);
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t len = layout.lengths[b];
          for (std::size_t h = 0; h < H; ++h) {
            const std::size_t col = h * dh;
            const T* P = probs.data() + (b * H + h) * L * L;
            for (std::size_t i = 0; i < len; ++i) {
              const std::size_t kmax = layout.causal ? i + 1 : len;
              auto gi = g.row(b * L + i).subspan(col, dh);
              T dot = 0;
              for (std::size_t j = 0; j < kmax; ++j) {
                auto vj = vv.row(b * L + j).subspan(col, dh);
                T s = 0;
                for (std::size_t d = 0; d < dh; ++d) s += gi[d] * vj[d];
                dp[j] = s;
                dot += P[i * L + j] * s;
                if (dv) {
                  auto dvj = dv->row(b * L + j).subspan(col, dh);
                  const T p = P[i * L + j];
                  for (std::size_t d = 0; d < dh; ++d) dvj[d] += p * gi[d];
                }
              }
              if (!dq && !dk) continue;
              auto qi = qv.row(b * L + i).subspan(col, dh);
              for (std::size_t j = 0; j < kmax; ++j) {
                const T ds = P[i * L + j] * (dp[j] - dot) * scale;
                auto kj = kv.row(b * L + j).subspan(col, dh);
                if (dq) {
                  auto dqi = dq->row(b * L + i).subspan(col, dh);
                  for (std::size_t d = 0; d < dh; ++d) dqi[d] += ds * kj[d];
                }
                if (dk) {
                  auto dkj = dk->row(b * L + j).subspan(col, dh);
                  for (std::size_t d = 0; d < dh; ++d) dkj[d] += ds * qi[d];
                }
              }
            }
          }
        }
      });
}

#define DFD_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                     \
  template T cross_entropy(const Tensor<T>&, std::span<const std::size_t>);                      \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                          \
  template Var<T> matmul_nt(const Var<T>&, const Var<T>&);                                       \
  template Var<T> add(const Var<T>&, const Var<T>&);                                             \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                             \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                             \
  template Var<T> add_row(const Var<T>&, const Var<T>&);                                         \
  template Var<T> affine(const Var<T>&, T, T);                                                   \
  template Var<T> sigmoid(const Var<T>&);                                                        \
  template Var<T> tanh(const Var<T>&);                                                           \
  template Var<T> relu(const Var<T>&);                                                           \
  template Var<T> gelu(const Var<T>&);                                                           \
  template Var<T> softmax(const Var<T>&, std::size_t);                                           \
  template Var<T> cross_entropy(const Var<T>&, std::span<const std::size_t>);                    \
  template Var<T> sum(const Var<T>&);                                                            \
  template Var<T> embedding(const Var<T>&, std::span<const std::size_t>);                        \
  template Var<T> gather_rows(const Var<T>&, std::span<const std::size_t>);                      \
  template Var<T> slice_cols(const Var<T>&, std::size_t, std::size_t);                           \
  template Var<T> concat_cols(const Var<T>&, const Var<T>&);                                     \
  template Var<T> select_rows(std::span<const std::uint8_t>, const Var<T>&, const Var<T>&);      \
  template Var<T> dropout(const Var<T>&, double, Rng&);                                          \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, double);               \
  template Var<T> attention(const Var<T>&, const Var<T>&, const Var<T>&, const AttentionLayout&, \
                            std::vector<Tensor<T>>*);

DFD_INSTANTIATE_OPS(float)
DFD_INSTANTIATE_OPS(double)
DFD_INSTANTIATE_OPS(long double)

#undef DFD_INSTANTIATE_OPS

}  // namespace dfd::num
