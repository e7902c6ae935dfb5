#pragma once

#include <cstdint>
#include <vector>

#include "dfd/pipeline/corpus.hpp"

namespace dfd::pipe {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed_used = 0;  // seed + number of retries
};

// Retries allowed before the stratification rule gives up and keeps the
// first shuffle.
inline constexpr std::size_t kMaxSplitRetries = 1000;

// |train| = floor(train_fraction × N) after a seeded shuffle. When both
// sides could hold both labels but one does not, the shuffle is redone with
// seed + 1, seed + 2, …. InputError for fewer than two documents, a
// missing label, or a single-label corpus.
Split split_indices(const std::vector<Label>& labels, const SplitSpec& spec);

struct CorpusSplit {
  Corpus train;
  Corpus test;
  Split indices;
};
CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec);

std::size_t train_size(std::size_t n, double train_fraction);

}  // namespace dfd::pipe
