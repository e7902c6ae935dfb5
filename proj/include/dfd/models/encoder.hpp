#pragma once

#include <cstdint>
#include <vector>

#include "dfd/models/batch.hpp"
#include "dfd/models/config.hpp"
#include "dfd/models/layers.hpp"

namespace dfd::models {

// Parameter names: "tok_emb", "pos_emb", "emb_ln.*", then per layer
// "layerN.attn.{qkv,proj}.*", "layerN.ln1.*", "layerN.ffn.{in,out}.*",
// "layerN.ln2.*", and the classification head "head.*". Weights are
// normal(0, 0.02), biases zero, layer-norm gains one.
num::ParameterSet<float> init_encoder(const EncoderConfig& cfg, std::uint64_t seed);

// Post-norm encoder over token + learned position embeddings; the head reads
// the CLS (position 0) row. Returns class probabilities [B × classes].
// Throws ConfigError when the batch is longer than max_positions.
template <typename T>
num::Var<T> encoder_forward(num::Tape<T>& tape, const EncoderConfig& cfg, num::ParameterSet<T>& p,
                            const Batch& batch, const ForwardOptions& opt = {},
                            std::vector<num::Tensor<T>>* attention_probs = nullptr);

// Final hidden states [B*seq_len × hidden], before the head.
template <typename T>
num::Var<T> encoder_states(num::Tape<T>& tape, const EncoderConfig& cfg, num::ParameterSet<T>& p,
                           const Batch& batch, const ForwardOptions& opt = {},
                           std::vector<num::Tensor<T>>* attention_probs = nullptr);

}  // namespace dfd::models
