#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/models/checkpoint.hpp"
#include "dfd/pipeline/report.hpp"
#include "dfd/pipeline/split.hpp"
#include "dfd/pipeline/training.hpp"
#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::pipe {

struct ExperimentSpec {
  std::vector<std::string> models{"lstm", "bilstm", "gru", "bigru", "transformer"};
  std::string reference = "transformer";
  SplitSpec split;
  TrainSpec train;
  std::size_t word_min_freq = 1;
  std::size_t bpe_merges = 1000;
  std::size_t threads = 0;  // evaluation only; 0 = hardware concurrency
};

struct TrainedModel {
  models::LoadedClassifier model;
  TrainResult training;
  Metrics metrics;
  double seconds = 0.0;
};

struct ExperimentResult {
  CorpusSplit split;
  tok::Vocabulary word_vocab;
  tok::Vocabulary subword_vocab;
  std::map<std::string, TrainedModel> models;
  ComparisonReport report;
};

// Split, build both vocabularies from the training side, train every model
// with its regimen, evaluate on the test side and compare against the
// reference. `progress` (optional) receives one line per finished model.
ExperimentResult run_experiment(const Corpus& corpus, const ExperimentSpec& spec,
                                const std::function<void(const std::string&)>& progress = {});

}  // namespace dfd::pipe
