#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/models/batch.hpp"
#include "dfd/models/checkpoint.hpp"
#include "dfd/models/layers.hpp"
#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::gen {

// Decoder-only language model. Attention is always causal.
struct DecoderConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t context_length = 64;
  std::size_t vocab_size = 0;
  double dropout = 0.0;

  std::size_t ffn_dim() const { return 4 * hidden; }
  void validate() const;
  nlohmann::json to_json() const;
  static DecoderConfig from_json(const nlohmann::json& j);
};

inline constexpr const char* kLmCheckpointName = "lm";

// Parameter names: "tok_emb", "pos_emb", per layer "layerN.ln1.*",
// "layerN.attn.{qkv,proj}.*", "layerN.ln2.*", "layerN.ffn.{in,out}.*", and
// the final "ln_f.*". The output projection is tok_embᵀ (tied).
num::ParameterSet<float> init_decoder(const DecoderConfig& cfg, std::uint64_t seed);

// Pre-norm blocks: x + attn(ln1(x)), then x + ffn(ln2(x)), then ln_f.
// Returns final states [B*seq_len × hidden]. ConfigError when the batch is
// longer than the context.
template <typename T>
num::Var<T> decoder_states(num::Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
                           const models::Batch& batch, const models::ForwardOptions& opt = {});

// Next-token logits for every position, [B*seq_len × vocab_size].
template <typename T>
num::Var<T> decoder_logits(num::Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
                           const models::Batch& batch, const models::ForwardOptions& opt = {});

// Mean next-token cross-entropy over every real position t < length-1
// (inputs[t] predicts inputs[t+1]).
template <typename T>
num::Var<T> lm_loss(num::Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
                    const models::Batch& batch, const models::ForwardOptions& opt = {});

// Prediction rows and their targets for a batch, in row order.
struct NextTokenTargets {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;
};
NextTokenTargets next_token_targets(const models::Batch& batch);

struct LmTrainSpec {
  std::size_t batch_size = 16;
  double lr = 0.001;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static LmTrainSpec from_json(const nlohmann::json& j);
};

// Token ids per text, cut to context_length tokens; texts with fewer
// than two tokens are dropped since they carry no next-token target.
std::vector<std::vector<std::size_t>> lm_sequences(const std::vector<std::string>& texts,
                                                   const tok::Vocabulary& vocab,
                                                   std::size_t context_length);

models::Batch lm_batch(const std::vector<std::vector<std::size_t>>& seqs,
                       std::span<const std::size_t> indices);

// Token-weighted mean next-token loss in eval mode.
double lm_mean_loss(const DecoderConfig& cfg, num::ParameterSet<float>& p,
                    const std::vector<std::vector<std::size_t>>& seqs, std::size_t batch_size = 64);

// Adam with teacher forcing over shuffled mini-batches. The metadata records
// per-epoch mean training loss, the step count and the final perplexity
// exp(lm_mean_loss). InputError when fewer usable texts than one batch.
models::Checkpoint train_lm(const std::vector<std::string>& texts, const tok::Vocabulary& vocab,
                            DecoderConfig cfg, const LmTrainSpec& spec,
                            const std::string& vocab_file = "");

// A loaded generator: checks the vocabulary hash and parameter layout.
struct LanguageModel {
  DecoderConfig config;
  num::ParameterSet<float> params;
  tok::Vocabulary vocab;
  std::string checkpoint_hash;
};
LanguageModel as_language_model(const models::Checkpoint& ckpt, tok::Vocabulary vocab);

}  // namespace dfd::gen
