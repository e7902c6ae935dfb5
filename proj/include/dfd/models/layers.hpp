#pragma once

#include <string>

#include "dfd/numerics/ops.hpp"
#include "dfd/numerics/parameters.hpp"
#include "dfd/numerics/tape.hpp"

namespace dfd::models {

// Options shared by every forward pass. Dropout runs only in train mode
// and then needs an Rng.
struct ForwardOptions {
  bool train = false;
  num::Rng* rng = nullptr;
};

template <typename T>
num::Var<T> linear(const num::Var<T>& x, const num::Var<T>& w, const num::Var<T>& b) {
  return num::add_row(num::matmul(x, w), b);
}

template <typename T>
num::Var<T> linear(num::Tape<T>& tape, num::ParameterSet<T>& p, const std::string& prefix,
                   const num::Var<T>& x) {
  return linear(x, tape.param(p.get(prefix + ".W")), tape.param(p.get(prefix + ".b")));
}

template <typename T>
num::Var<T> layer_norm(num::Tape<T>& tape, num::ParameterSet<T>& p, const std::string& prefix,
                       const num::Var<T>& x) {
  return num::layer_norm(x, tape.param(p.get(prefix + ".gamma")), tape.param(p.get(prefix + ".beta")));
}

template <typename T>
num::Var<T> maybe_dropout(const num::Var<T>& x, double rate, const ForwardOptions& opt) {
  if (!opt.train || rate == 0.0) return x;
  if (opt.rng == nullptr) throw UsageError("train-mode forward pass needs an Rng for dropout");
  return num::dropout(x, rate, *opt.rng);
}

// Parameter registration helpers.
template <typename T>
void add_linear(num::ParameterSet<T>& p, const std::string& prefix, std::size_t in, std::size_t out,
                double sd, num::Rng& rng) {
  p.add(prefix + ".W", num::normal_tensor<T>({in, out}, sd, rng));
  p.add(prefix + ".b", num::Tensor<T>({out}));
}

template <typename T>
void add_layer_norm(num::ParameterSet<T>& p, const std::string& prefix, std::size_t width) {
  num::Tensor<T> gamma({width});
  gamma.fill(T{1});
  p.add(prefix + ".gamma", std::move(gamma));
  p.add(prefix + ".beta", num::Tensor<T>({width}));
}

// Multi-head self-attention sublayer: fused QKV projection, attention,
// output projection. `probs_out` collects the attention weights.
template <typename T>
num::Var<T> self_attention(num::Tape<T>& tape, num::ParameterSet<T>& p, const std::string& prefix,
                           const num::Var<T>& x, const num::AttentionLayout& layout,
                           std::vector<num::Tensor<T>>* probs_out) {
  const std::size_t d = x.shape()[1];
  auto qkv = linear(tape, p, prefix + ".qkv", x);
  auto q = num::slice_cols(qkv, 0, d);
  auto k = num::slice_cols(qkv, d, 2 * d);
  auto v = num::slice_cols(qkv, 2 * d, 3 * d);
  return linear(tape, p, prefix + ".proj", num::attention(q, k, v, layout, probs_out));
}

template <typename T>
num::Var<T> feed_forward(num::Tape<T>& tape, num::ParameterSet<T>& p, const std::string& prefix,
                         const num::Var<T>& x) {
  return linear(tape, p, prefix + ".out", num::gelu(linear(tape, p, prefix + ".in", x)));
}

template <typename T>
void add_attention_block(num::ParameterSet<T>& p, const std::string& prefix, std::size_t d,
                         std::size_t ffn, double sd, num::Rng& rng) {
  add_linear(p, prefix + ".attn.qkv", d, 3 * d, sd, rng);
  add_linear(p, prefix + ".attn.proj", d, d, sd, rng);
  add_layer_norm(p, prefix + ".ln1", d);
  add_linear(p, prefix + ".ffn.in", d, ffn, sd, rng);
  add_linear(p, prefix + ".ffn.out", ffn, d, sd, rng);
  add_layer_norm(p, prefix + ".ln2", d);
}

}  // namespace dfd::models
