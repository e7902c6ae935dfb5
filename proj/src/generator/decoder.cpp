#include "dfd/generator/decoder.hpp"

#include <cmath>
#include <numeric>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"
#include "dfd/numerics/adam.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::gen {

using nlohmann::json;
using num::Tape;
using num::Var;

void DecoderConfig::validate() const {
  if (layers == 0 || hidden == 0 || heads == 0) throw ConfigError("lm: layer sizes must be positive");
  if (hidden % heads != 0) {
    throw ConfigError("lm: hidden " + std::to_string(hidden) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (context_length < 2) throw ConfigError("lm: context_length must be at least 2");
  if (vocab_size <= tok::kReservedCount) throw ConfigError("lm: vocab_size must exceed the reserved tokens");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("lm: dropout must lie in [0, 1)");
}

json DecoderConfig::to_json() const {
  return json{{"layers", layers},   {"hidden", hidden},         {"heads", heads},
              {"context_length", context_length}, {"vocab_size", vocab_size}, {"dropout", dropout}};
}

DecoderConfig DecoderConfig::from_json(const json& j) {
  DecoderConfig c;
  jsonu::for_each_key(j, "lm", [&](const std::string& k, const json& v) {
    if (k == "layers") c.layers = jsonu::as_size(v);
    else if (k == "hidden") c.hidden = jsonu::as_size(v);
    else if (k == "heads") c.heads = jsonu::as_size(v);
    else if (k == "context_length") c.context_length = jsonu::as_size(v);
    else if (k == "vocab_size") c.vocab_size = jsonu::as_size(v);
    else if (k == "dropout") c.dropout = jsonu::as_double(v);
    else return false;
    return true;
  });
  return c;
}

num::ParameterSet<float> init_decoder(const DecoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::Rng rng(seed);
  num::ParameterSet<float> p;
  constexpr double kSd = 0.02;
  const std::size_t d = cfg.hidden;
  p.add("tok_emb", num::normal_tensor<float>({cfg.vocab_size, d}, kSd, rng));
  p.add("pos_emb", num::normal_tensor<float>({cfg.context_length, d}, kSd, rng));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    models::add_attention_block(p, "layer" + std::to_string(l), d, cfg.ffn_dim(), kSd, rng);
  }
  models::add_layer_norm(p, "ln_f", d);
  return p;
}

template <typename T>
Var<T> decoder_states(Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
                      const models::Batch& batch, const models::ForwardOptions& opt) {
  const std::size_t B = batch.size, L = batch.seq_len;
  if (L > cfg.context_length) {
    throw ConfigError("lm: sequence length " + std::to_string(L) + " exceeds context_length " +
                      std::to_string(cfg.context_length));
  }
  if (batch.lengths.size() != B || batch.ids.size() != B * L) throw ShapeError("lm: malformed batch");
  std::vector<std::size_t> positions(B * L);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % L;

  auto x = num::add(num::embedding(tape.param(p.get("tok_emb")), std::span<const std::size_t>(batch.ids)),
                    num::embedding(tape.param(p.get("pos_emb")), std::span<const std::size_t>(positions)));
  x = models::maybe_dropout(x, cfg.dropout, opt);

  num::AttentionLayout layout;
  layout.batch = B;
  layout.seq_len = L;
  layout.heads = cfg.heads;
  layout.lengths = batch.lengths;
  layout.causal = true;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l);
    auto a = models::self_attention(tape, p, pre + ".attn", models::layer_norm(tape, p, pre + ".ln1", x),
                                    layout, static_cast<std::vector<num::Tensor<T>>*>(nullptr));
    x = num::add(x, models::maybe_dropout(a, cfg.dropout, opt));
    auto f = models::feed_forward(tape, p, pre + ".ffn", models::layer_norm(tape, p, pre + ".ln2", x));
    x = num::add(x, models::maybe_dropout(f, cfg.dropout, opt));
  }
  return models::layer_norm(tape, p, "ln_f", x);
}

template <typename T>
Var<T> decoder_logits(Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
                      const models::Batch& batch, const models::ForwardOptions& opt) {
  return num::matmul_nt(decoder_states(tape, cfg, p, batch, opt), tape.param(p.get("tok_emb")));
}

NextTokenTargets next_token_targets(const models::Batch& batch) {
  NextTokenTargets out;
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t t = 0; t + 1 < batch.lengths[b]; ++t) {
      out.rows.push_back(b * batch.seq_len + t);
      out.targets.push_back(batch.ids[b * batch.seq_len + t + 1]);
    }
  }
  return out;
}

template <typename T>
Var<T> lm_loss(Tape<T>& tape, const DecoderConfig& cfg, num::ParameterSet<T>& p,
               const models::Batch& batch, const models::ForwardOptions& opt) {
  const auto tt = next_token_targets(batch);
  if (tt.rows.empty()) throw InputError("lm: batch has no next-token targets");
  auto states = decoder_states(tape, cfg, p, batch, opt);
  auto rows = num::gather_rows(states, std::span<const std::size_t>(tt.rows));
  auto probs = num::softmax(num::matmul_nt(rows, tape.param(p.get("tok_emb"))), 1);
  return num::cross_entropy(probs, std::span<const std::size_t>(tt.targets));
}

void LmTrainSpec::validate() const {
  if (batch_size == 0) throw ConfigError("lm_train: batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lm_train: lr must be positive");
  if (epochs == 0) throw ConfigError("lm_train: epochs must be positive");
}

json LmTrainSpec::to_json() const {
  return json{{"batch_size", batch_size}, {"lr", lr}, {"epochs", epochs}, {"max_steps", max_steps}, {"seed", seed}};
}

LmTrainSpec LmTrainSpec::from_json(const json& j) {
  LmTrainSpec s;
  jsonu::for_each_key(j, "lm_train", [&](const std::string& k, const json& v) {
    if (k == "batch_size") s.batch_size = jsonu::as_size(v);
    else if (k == "lr") s.lr = jsonu::as_double(v);
    else if (k == "epochs") s.epochs = jsonu::as_size(v);
    else if (k == "max_steps") s.max_steps = jsonu::as_size(v);
    else if (k == "seed") s.seed = jsonu::as_u64(v);
    else return false;
    return true;
  });
  return s;
}

std::vector<std::vector<std::size_t>> lm_sequences(const std::vector<std::string>& texts,
                                                   const tok::Vocabulary& vocab,
                                                   std::size_t context_length) {
  if (vocab.kind() != tok::VocabKind::word) throw UsageError("lm: needs a word-level vocabulary");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& text : texts) {
    auto ids = tok::token_ids(text, vocab);
    if (ids.size() > context_length) ids.resize(context_length);
    if (ids.size() >= 2) out.push_back(std::move(ids));
  }
  return out;
}

models::Batch lm_batch(const std::vector<std::vector<std::size_t>>& seqs,
                       std::span<const std::size_t> indices) {
  models::Batch b;
  b.size = indices.size();
  for (std::size_t i : indices) b.seq_len = std::max(b.seq_len, seqs.at(i).size());
  b.seq_len = std::max<std::size_t>(b.seq_len, 1);
  b.ids.assign(b.size * b.seq_len, tok::kPad);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& s = seqs[indices[r]];
    std::copy(s.begin(), s.end(), b.ids.begin() + static_cast<std::ptrdiff_t>(r * b.seq_len));
    b.lengths.push_back(s.size());
  }
  return b;
}

double lm_mean_loss(const DecoderConfig& cfg, num::ParameterSet<float>& p,
                    const std::vector<std::vector<std::size_t>>& seqs, std::size_t batch_size) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, seqs.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto batch = lm_batch(seqs, idx);
    const auto tt = next_token_targets(batch);
    if (tt.rows.empty()) continue;
    Tape<float> tape(false);
    const double mean = lm_loss(tape, cfg, p, batch).value().item();
    total += mean * static_cast<double>(tt.rows.size());
    count += tt.rows.size();
  }
  if (count == 0) throw InputError("lm: no next-token targets");
  return total / static_cast<double>(count);
}

models::Checkpoint train_lm(const std::vector<std::string>& texts, const tok::Vocabulary& vocab,
                            DecoderConfig cfg, const LmTrainSpec& spec, const std::string& vocab_file) {
  spec.validate();
  if (cfg.vocab_size == 0) cfg.vocab_size = vocab.size();
  if (cfg.vocab_size != vocab.size()) {
    throw ConfigError("lm: vocab_size " + std::to_string(cfg.vocab_size) + " differs from the vocabulary's " +
                      std::to_string(vocab.size()));
  }
  cfg.validate();
  const auto seqs = lm_sequences(texts, vocab, cfg.context_length);
  if (seqs.size() < spec.batch_size) {
    throw InputError("lm: " + std::to_string(seqs.size()) + " usable texts, fewer than one batch of " +
                     std::to_string(spec.batch_size));
  }

  auto params = init_decoder(cfg, spec.seed);
  num::AdamState<float> adam(params, num::AdamConfig{.lr = spec.lr});
  num::Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  json epoch_losses = json::array();
  std::size_t steps = 0, epochs_run = 0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < spec.epochs && !done; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
      std::span<const std::size_t> idx(order.data() + start, std::min(spec.batch_size, order.size() - start));
      const auto batch = lm_batch(seqs, idx);
      params.zero_grad();
      Tape<float> tape;
      auto loss = lm_loss(tape, cfg, params, batch, models::ForwardOptions{true, &rng});
      tape.backward(loss);
      num::adam_step(params, adam);
      sum += loss.value().item();
      ++batches;
      ++steps;
      if (spec.max_steps != 0 && steps >= spec.max_steps) {
        done = true;
        break;
      }
    }
    ++epochs_run;
    epoch_losses.push_back(sum / static_cast<double>(batches));
  }

  models::Checkpoint ckpt;
  ckpt.name = kLmCheckpointName;
  ckpt.config = cfg.to_json();
  ckpt.vocab_hash = vocab.hash();
  ckpt.vocab_file = vocab_file;
  const double mean_loss = lm_mean_loss(cfg, params, seqs);
  ckpt.params = std::move(params);
  ckpt.metadata = json{{"train", spec.to_json()},
                       {"epochs", epochs_run},
                       {"steps", steps},
                       {"epoch_loss", epoch_losses},
                       {"train_loss", mean_loss},
                       {"perplexity", std::exp(mean_loss)}};
  return ckpt;
}

LanguageModel as_language_model(const models::Checkpoint& ckpt, tok::Vocabulary vocab) {
  if (ckpt.name != kLmCheckpointName) {
    throw IntegrityError("checkpoint \"" + ckpt.name + "\" is not a language model");
  }
  models::require_vocab(ckpt, vocab, "lm");
  LanguageModel lm{DecoderConfig::from_json(ckpt.config), ckpt.params, std::move(vocab), models::checkpoint_hash(ckpt)};
  lm.config.validate();
  models::require_same_layout(init_decoder(lm.config, 0), lm.params, "lm");
  return lm;
}

#define DFD_INSTANTIATE_DECODER(T)                                                               \
  template Var<T> decoder_states(Tape<T>&, const DecoderConfig&, num::ParameterSet<T>&,          \
                                 const models::Batch&, const models::ForwardOptions&);           \
  template Var<T> decoder_logits(Tape<T>&, const DecoderConfig&, num::ParameterSet<T>&,          \
                                 const models::Batch&, const models::ForwardOptions&);           \
  template Var<T> lm_loss(Tape<T>&, const DecoderConfig&, num::ParameterSet<T>&,                 \
                          const models::Batch&, const models::ForwardOptions&);

DFD_INSTANTIATE_DECODER(float)
DFD_INSTANTIATE_DECODER(double)
DFD_INSTANTIATE_DECODER(long double)

#undef DFD_INSTANTIATE_DECODER

}  // namespace dfd::gen
