#include "dfd/models/encoder.hpp"

#include "dfd/error.hpp"

namespace dfd::models {

using num::Tape;
using num::Var;

num::ParameterSet<float> init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::Rng rng(seed);
  num::ParameterSet<float> p;
  constexpr double kSd = 0.02;
  const std::size_t d = cfg.hidden;
  p.add("tok_emb", num::normal_tensor<float>({cfg.vocab_size, d}, kSd, rng));
  p.add("pos_emb", num::normal_tensor<float>({cfg.max_positions, d}, kSd, rng));
  add_layer_norm(p, "emb_ln", d);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    add_attention_block(p, "layer" + std::to_string(l), d, cfg.ffn_dim, kSd, rng);
  }
  add_linear(p, "head", d, cfg.classes, kSd, rng);
  return p;
}

template <typename T>
Var<T> encoder_states(Tape<T>& tape, const EncoderConfig& cfg, num::ParameterSet<T>& p,
                      const Batch& batch, const ForwardOptions& opt,
                      std::vector<num::Tensor<T>>* attention_probs) {
  const std::size_t B = batch.size, L = batch.seq_len;
  if (L > cfg.max_positions) {
    throw ConfigError("encoder: sequence length " + std::to_string(L) + " exceeds max_positions " +
                      std::to_string(cfg.max_positions));
  }
  if (batch.lengths.size() != B || batch.ids.size() != B * L) {
    throw ShapeError("encoder_forward: malformed batch");
  }
  std::vector<std::size_t> positions(B * L);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % L;

  auto x = num::add(num::embedding(tape.param(p.get("tok_emb")), std::span<const std::size_t>(batch.ids)),
                    num::embedding(tape.param(p.get("pos_emb")), std::span<const std::size_t>(positions)));
  x = maybe_dropout(layer_norm(tape, p, "emb_ln", x), cfg.dropout, opt);

  num::AttentionLayout layout;
  layout.batch = B;
  layout.seq_len = L;
  layout.heads = cfg.heads;
  layout.lengths = batch.lengths;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l);
    auto a = self_attention(tape, p, pre + ".attn", x, layout, attention_probs);
    x = layer_norm(tape, p, pre + ".ln1", num::add(x, maybe_dropout(a, cfg.dropout, opt)));
    auto f = feed_forward(tape, p, pre + ".ffn", x);
    x = layer_norm(tape, p, pre + ".ln2", num::add(x, maybe_dropout(f, cfg.dropout, opt)));
  }
  return x;
}

template <typename T>
Var<T> encoder_forward(Tape<T>& tape, const EncoderConfig& cfg, num::ParameterSet<T>& p,
                       const Batch& batch, const ForwardOptions& opt,
                       std::vector<num::Tensor<T>>* attention_probs) {
  auto states = encoder_states(tape, cfg, p, batch, opt, attention_probs);
  std::vector<std::size_t> cls_rows(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) cls_rows[b] = b * batch.seq_len;
  auto cls = num::gather_rows(states, std::span<const std::size_t>(cls_rows));
  return num::softmax(linear(tape, p, "head", cls), 1);
}

#define DFD_INSTANTIATE_ENCODER(T)                                                               \
  template Var<T> encoder_states(Tape<T>&, const EncoderConfig&, num::ParameterSet<T>&,          \
                                 const Batch&, const ForwardOptions&, std::vector<num::Tensor<T>>*); \
  template Var<T> encoder_forward(Tape<T>&, const EncoderConfig&, num::ParameterSet<T>&,         \
                                  const Batch&, const ForwardOptions&, std::vector<num::Tensor<T>>*);

DFD_INSTANTIATE_ENCODER(float)
DFD_INSTANTIATE_ENCODER(double)
DFD_INSTANTIATE_ENCODER(long double)

#undef DFD_INSTANTIATE_ENCODER

}  // namespace dfd::models
