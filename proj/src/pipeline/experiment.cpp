#include "dfd/pipeline/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <string>

#include "dfd/error.hpp"
#include "dfd/tokenizer/bpe.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::pipe {

ExperimentResult run_experiment(const Corpus& corpus, const ExperimentSpec& spec,
                                const std::function<void(const std::string&)>& progress) {
  if (spec.models.empty()) throw UsageError("experiment: no models requested");
  auto split = split_corpus(corpus, spec.split);
  const auto train_texts = normalized_texts(split.train);
  ExperimentResult out{std::move(split), tok::build_word_vocab(train_texts, spec.word_min_freq),
                       tok::train_bpe(train_texts, spec.bpe_merges), {}, {}};

  std::vector<ModelResult> rows;
  for (const auto& name : spec.models) {
    const auto start = std::chrono::steady_clock::now();
    const bool transformer = name == "transformer";
    const tok::Vocabulary& vocab = transformer ? out.subword_vocab : out.word_vocab;
    const std::size_t max_length = tok::max_length_for(train_texts, vocab);
    const auto cfg = models::classifier_preset(name, vocab.size(), max_length);
    const Dataset train = encode_dataset(out.split.train, vocab, max_length);

    TrainedModel tm;
    tm.training = train_classifier(cfg, train, spec.train, vocab);
    tm.model = models::as_classifier(tm.training.checkpoint);
    tm.metrics = evaluate(tm.model, vocab, out.split.test, spec.threads);
    tm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back({name, tm.metrics});
    if (progress) {
      char line[160];
      std::snprintf(line, sizeof line, "%-12s acc %6.2f%%  epochs %zu", name.c_str(), tm.metrics.accuracy,
                    tm.training.epochs_run);
      std::string text = line;
      // Fine-tuning runs a fixed epoch count and has no best epoch.
      if (tm.training.best_epoch > 0) text += " (best " + std::to_string(tm.training.best_epoch) + ")";
      std::snprintf(line, sizeof line, "  %.1fs", tm.seconds);
      progress(text + line);
    }
    out.models.emplace(name, std::move(tm));
  }
  out.report = compare(std::move(rows), spec.reference);
  return out;
}

}  // namespace dfd::pipe
