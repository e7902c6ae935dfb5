#pragma once

#include <cstdint>
#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/models/checkpoint.hpp"
#include "dfd/models/classifier.hpp"
#include "dfd/pipeline/corpus.hpp"
#include "dfd/pipeline/metrics.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::pipe {

struct TrainSpec {
  std::size_t batch_size = 100;
  double lr = 0.001;
  std::size_t max_epochs = 50;
  std::size_t patience = 4;
  std::size_t fine_tune_epochs = 4;
  double validation_fraction = 0.1;
  double clip_norm = 5.0;  // recurrent models only; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainSpec from_json(const nlohmann::json& j);
};

// Encoded documents with class indices (human 0, deepfake 1).
struct Dataset {
  std::vector<tok::TokenSequence> sequences;
  std::vector<std::size_t> labels;

  std::size_t size() const { return sequences.size(); }
};

// InputError for unlabeled documents.
Dataset encode_dataset(const Corpus& corpus, const tok::Vocabulary& vocab, std::size_t max_length);

// Stops once `patience` consecutive epochs fail to improve on the best
// validation loss (strictly lower counts as improvement).
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  // Records the loss of a finished 1-based epoch; true when it is the new best.
  bool update(std::size_t epoch, double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t since_best_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct EarlyStoppingRun {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

// Drives train_epoch / val_loss under the early-stopping rule, snapshotting
// the parameters at each new best and restoring the best snapshot at the end.
EarlyStoppingRun run_with_early_stopping(num::ParameterSet<float>& params, std::size_t max_epochs,
                                         std::size_t patience,
                                         const std::function<double(std::size_t)>& train_epoch,
                                         const std::function<double()>& val_loss);

struct TrainResult {
  models::Checkpoint checkpoint;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 for the fixed-epoch regimen
  std::size_t epochs_run = 0;
};

nlohmann::json history_to_json(const std::vector<EpochRecord>& history);

// Mean cross-entropy in eval mode.
double mean_loss(const models::ClassifierConfig& cfg, num::ParameterSet<float>& params, const Dataset& data,
                 std::size_t batch_size);

// Recurrent models: 10% of train (seeded) is held out for validation, Adam
// with global-norm clipping, early stopping, best parameters restored.
// InputError when batch_size exceeds the training set.
TrainResult train_with_early_stopping(const models::ClassifierConfig& cfg, const Dataset& train,
                                      const TrainSpec& spec);

// Encoder: exactly fine_tune_epochs epochs over all of train, no early
// stopping.
TrainResult fine_tune_transformer(const models::ClassifierConfig& cfg, const Dataset& train,
                                  const TrainSpec& spec);

// Dispatches on the architecture and fills in the checkpoint's vocabulary
// fields and metadata.
TrainResult train_classifier(const models::ClassifierConfig& cfg, const Dataset& train, const TrainSpec& spec,
                             const tok::Vocabulary& vocab, const std::string& vocab_file = "");

// Eval-mode class probabilities, one row per sequence, batched in
// `batch_size`.
std::vector<std::array<double, 2>> predict(const models::LoadedClassifier& model,
                                           const std::vector<tok::TokenSequence>& seqs,
                                           std::size_t batch_size = 256, std::size_t threads = 0);

// Argmax predictions over the test corpus, reduced into a confusion matrix.
// IntegrityError when `vocab` is not the checkpoint's vocabulary.
Metrics evaluate(const models::LoadedClassifier& model, const tok::Vocabulary& vocab, const Corpus& test,
                 std::size_t threads = 0);

// Sequence length the checkpoint's architecture was built for.
std::size_t model_max_length(const models::ClassifierConfig& cfg);

}  // namespace dfd::pipe
