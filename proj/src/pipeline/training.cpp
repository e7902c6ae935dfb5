#include "dfd/pipeline/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <mutex>
#include <thread>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"
#include "dfd/models/batch.hpp"
#include "dfd/numerics/adam.hpp"
#include "dfd/numerics/fpenv.hpp"

namespace dfd::pipe {

using nlohmann::json;

void TrainSpec::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
  if (patience == 0) throw ConfigError("train: patience must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (max_epochs == 0 || fine_tune_epochs == 0) throw ConfigError("train: epoch counts must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("train: validation_fraction must lie in (0, 1)");
  }
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be non-negative");
}

json TrainSpec::to_json() const {
  return json{{"batch_size", batch_size},
              {"lr", lr},
              {"max_epochs", max_epochs},
              {"patience", patience},
              {"fine_tune_epochs", fine_tune_epochs},
              {"validation_fraction", validation_fraction},
              {"clip_norm", clip_norm},
              {"seed", seed}};
}

TrainSpec TrainSpec::from_json(const json& j) {
  TrainSpec s;
  jsonu::for_each_key(j, "train", [&](const std::string& k, const json& v) {
    if (k == "batch_size") s.batch_size = jsonu::as_size(v);
    else if (k == "lr") s.lr = jsonu::as_double(v);
    else if (k == "max_epochs") s.max_epochs = jsonu::as_size(v);
    else if (k == "patience") s.patience = jsonu::as_size(v);
    else if (k == "fine_tune_epochs") s.fine_tune_epochs = jsonu::as_size(v);
    else if (k == "validation_fraction") s.validation_fraction = jsonu::as_double(v);
    else if (k == "clip_norm") s.clip_norm = jsonu::as_double(v);
    else if (k == "seed") s.seed = jsonu::as_u64(v);
    else return false;
    return true;
  });
  return s;
}

Dataset encode_dataset(const Corpus& corpus, const tok::Vocabulary& vocab, std::size_t max_length) {
  require_labels(corpus, "encode");
  Dataset d;
  d.sequences.reserve(corpus.size());
  for (const auto& doc : corpus) {
    d.sequences.push_back(tok::encode(doc.normalized, vocab, max_length));
    d.labels.push_back(class_index(*doc.label));
  }
  return d;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("early stopping: patience must be at least 1");
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

EarlyStoppingRun run_with_early_stopping(num::ParameterSet<float>& params, std::size_t max_epochs,
                                         std::size_t patience,
                                         const std::function<double(std::size_t)>& train_epoch,
                                         const std::function<double()>& val_loss) {
  EarlyStopping rule(patience);
  EarlyStoppingRun run;
  auto best = params.snapshot();
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(epoch);
    rec.val_loss = val_loss();
    run.history.push_back(rec);
    if (rule.update(epoch, *rec.val_loss)) best = params.snapshot();
    if (rule.should_stop()) {
      run.stopped_early = true;
      break;
    }
  }
  params.restore(best);
  run.best_epoch = rule.best_epoch();
  return run;
}

json history_to_json(const std::vector<EpochRecord>& history) {
  json out = json::array();
  for (const auto& r : history) {
    json e{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
    if (r.val_loss) e["val_loss"] = *r.val_loss;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::vector<std::size_t> labels_of(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.labels[i]);
  return out;
}

double mean_loss_over(const models::ClassifierConfig& cfg, num::ParameterSet<float>& params,
                      const Dataset& data, std::span<const std::size_t> idx, std::size_t batch_size) {
  const num::FlushDenormals ftz;
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const auto chunk = idx.subspan(start, std::min(batch_size, idx.size() - start));
    const auto batch = models::make_batch(data.sequences, chunk);
    const auto labels = labels_of(data, chunk);
    const auto probs = models::predict_proba(cfg, params, batch);
    total += num::cross_entropy(probs, std::span<const std::size_t>(labels)) * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(idx.size());
}

// One pass over `idx` in a fresh shuffled order; returns the mean batch loss.
double train_one_epoch(const models::ClassifierConfig& cfg, num::ParameterSet<float>& params,
                       num::AdamState<float>& adam, const Dataset& data, std::vector<std::size_t>& idx,
                       std::size_t batch_size, double clip_norm, num::Rng& rng) {
  const num::FlushDenormals ftz;
  rng.shuffle(std::span<std::size_t>(idx));
  double sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::span<const std::size_t> chunk(idx.data() + start, std::min(batch_size, idx.size() - start));
    const auto batch = models::make_batch(data.sequences, chunk);
    const auto labels = labels_of(data, chunk);
    params.zero_grad();
    num::Tape<float> tape;
    auto probs = models::classifier_forward(tape, cfg, params, batch, models::ForwardOptions{true, &rng});
    auto loss = num::cross_entropy(probs, std::span<const std::size_t>(labels));
    tape.backward(loss);
    if (clip_norm > 0.0) params.clip_grad_norm(clip_norm);
    num::adam_step(params, adam);
    sum += loss.value().item();
    ++batches;
  }
  return sum / static_cast<double>(batches);
}

void require_trainable(const Dataset& train, const TrainSpec& spec) {
  spec.validate();
  if (train.size() == 0) throw InputError("train: empty training set");
  if (spec.batch_size > train.size()) {
    throw InputError("train: batch_size " + std::to_string(spec.batch_size) + " exceeds the " +
                     std::to_string(train.size()) + " training documents");
  }
}

}  // namespace

double mean_loss(const models::ClassifierConfig& cfg, num::ParameterSet<float>& params, const Dataset& data,
                 std::size_t batch_size) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return mean_loss_over(cfg, params, data, idx, batch_size);
}

TrainResult train_with_early_stopping(const models::ClassifierConfig& cfg, const Dataset& train,
                                      const TrainSpec& spec) {
  require_trainable(train, spec);
  if (train.size() < 2) throw InputError("train: need at least two documents to hold out validation");
  num::Rng rng(spec.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(train.size()))), 1,
      train.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  auto params = models::init_classifier(cfg, spec.seed);
  num::AdamState<float> adam(params, num::AdamConfig{.lr = spec.lr});
  const auto run = run_with_early_stopping(
      params, spec.max_epochs, spec.patience,
      [&](std::size_t) { return train_one_epoch(cfg, params, adam, train, fit, spec.batch_size, spec.clip_norm, rng); },
      [&] { return mean_loss_over(cfg, params, train, val, spec.batch_size); });

  TrainResult result;
  result.history = run.history;
  result.best_epoch = run.best_epoch;
  result.epochs_run = run.history.size();
  result.checkpoint.params = std::move(params);
  return result;
}

TrainResult fine_tune_transformer(const models::ClassifierConfig& cfg, const Dataset& train,
                                  const TrainSpec& spec) {
  require_trainable(train, spec);
  if (!models::is_transformer(cfg)) throw UsageError("fine_tune_transformer: not an encoder config");
  num::Rng rng(spec.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = models::init_classifier(cfg, spec.seed);
  num::AdamState<float> adam(params, num::AdamConfig{.lr = spec.lr});
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= spec.fine_tune_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_one_epoch(cfg, params, adam, train, order, spec.batch_size, 0.0, rng);
    result.history.push_back(rec);
  }
  result.epochs_run = spec.fine_tune_epochs;
  result.checkpoint.params = std::move(params);
  return result;
}

TrainResult train_classifier(const models::ClassifierConfig& cfg, const Dataset& train, const TrainSpec& spec,
                             const tok::Vocabulary& vocab, const std::string& vocab_file) {
  const bool transformer = models::is_transformer(cfg);
  if ((vocab.kind() == tok::VocabKind::subword) != transformer) {
    throw UsageError(std::string("train: ") + (transformer ? "the transformer needs a subword vocabulary"
                                                           : "recurrent models need a word vocabulary"));
  }
  TrainResult r = transformer ? fine_tune_transformer(cfg, train, spec) : train_with_early_stopping(cfg, train, spec);
  r.checkpoint.name = models::classifier_name(cfg);
  r.checkpoint.config = models::config_to_json(cfg);
  r.checkpoint.vocab_hash = vocab.hash();
  r.checkpoint.vocab_file = vocab_file;
  r.checkpoint.metadata = json{{"train", spec.to_json()},
                               {"epochs", r.epochs_run},
                               {"best_epoch", r.best_epoch},
                               {"history", history_to_json(r.history)},
                               {"train_documents", train.size()}};
  return r;
}

std::size_t model_max_length(const models::ClassifierConfig& cfg) {
  if (const auto* r = std::get_if<models::RnnConfig>(&cfg)) return r->seq_length;
  return std::get<models::EncoderConfig>(cfg).max_positions;
}

std::vector<std::array<double, 2>> predict(const models::LoadedClassifier& model,
                                           const std::vector<tok::TokenSequence>& seqs, std::size_t batch_size,
                                           std::size_t threads) {
  std::vector<std::array<double, 2>> out(seqs.size());
  const std::size_t batches = (seqs.size() + batch_size - 1) / batch_size;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::max<std::size_t>(1, std::min(threads, batches));
  // Forward passes only read the parameters.
  auto& params = const_cast<num::ParameterSet<float>&>(model.checkpoint.params);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    const num::FlushDenormals ftz;
    for (std::size_t b = next++; b < batches; b = next++) {
      try {
        std::vector<std::size_t> idx(std::min(batch_size, seqs.size() - b * batch_size));
        std::iota(idx.begin(), idx.end(), b * batch_size);
        const auto probs = models::predict_proba(model.config, params, models::make_batch(seqs, idx));
        for (std::size_t r = 0; r < idx.size(); ++r) out[idx[r]] = {probs.at(r, 0), probs.at(r, 1)};
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

Metrics evaluate(const models::LoadedClassifier& model, const tok::Vocabulary& vocab, const Corpus& test,
                 std::size_t threads) {
  models::require_vocab(model.checkpoint, vocab, "evaluate " + model.checkpoint.name);
  const Dataset data = encode_dataset(test, vocab, model_max_length(model.config));
  const auto probs = predict(model, data.sequences, 256, threads);
  std::vector<Label> predicted, truth;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    predicted.push_back(probs[i][1] > probs[i][0] ? Label::deepfake : Label::human);
    truth.push_back(label_of_class(data.labels[i]));
  }
  return Metrics::from_confusion(count_confusion(predicted, truth, threads));
}

}  // namespace dfd::pipe
