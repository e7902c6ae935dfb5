#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dfd/numerics/rng.hpp"
#include "dfd/numerics/tape.hpp"
#include "dfd/numerics/tensor.hpp"

namespace dfd::num {

// Probabilities below this are clamped inside cross_entropy.
inline constexpr double kProbFloor = 1e-12;

// ---- Plain tensor math (no tape) ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

template <typename T>
T cross_entropy(const Tensor<T>& probs, std::span<const std::size_t> labels);

// ---- Traced ops ----

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

// a · bᵀ for a[m×k], b[n×k].
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

// x[m×n] + bias[n] broadcast over rows.
template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& bias);

// scale * x + shift, elementwise.
template <typename T>
Var<T> affine(const Var<T>& x, T scale, T shift);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

template <typename T>
Var<T> tanh(const Var<T>& x);

template <typename T>
Var<T> relu(const Var<T>& x);

// tanh approximation of GELU.
template <typename T>
Var<T> gelu(const Var<T>& x);

template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis);

// Mean over rows of −log max(p[label], 1e-12). Returns a scalar.
template <typename T>
Var<T> cross_entropy(const Var<T>& probs, std::span<const std::size_t> labels);

template <typename T>
Var<T> sum(const Var<T>& x);

// Rows of `table` selected by `ids`: out[i] = table[ids[i]].
template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const std::size_t> ids);

template <typename T>
Var<T> gather_rows(const Var<T>& x, std::span<const std::size_t> rows);

template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t begin, std::size_t end);

template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b);

// Row-wise select: out[r] = take_a[r] ? a[r] : b[r]. Exact copy, so
// unselected rows pass through bit-for-bit.
template <typename T>
Var<T> select_rows(std::span<const std::uint8_t> take_a, const Var<T>& a, const Var<T>& b);

// Inverted dropout with a mask drawn from `rng`; identity when rate == 0.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng);

// Normalizes each row to zero mean and unit variance, then applies
// gamma/beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps = 1e-5);

// Layout for multi-head attention over a batch packed as [batch*seq_len × width].
// Example b owns rows [b*seq_len, (b+1)*seq_len); only its first lengths[b]
// positions are real. Keys beyond the length are masked out; query rows beyond
// it produce zeros.
struct AttentionLayout {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t heads = 1;
  std::vector<std::size_t> lengths;
  bool causal = false;
};

// Scaled dot-product attention per head. When `probs_out` is non-null the
// attention weights are appended, one [seq_len × seq_len] tensor per
// (example, head), row = query.
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionLayout& layout,
                 std::vector<Tensor<T>>* probs_out = nullptr);

}  // namespace dfd::num
