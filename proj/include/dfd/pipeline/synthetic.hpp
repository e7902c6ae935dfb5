#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfd/pipeline/corpus.hpp"

namespace dfd::pipe {

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t size = 2000;
  double separability = 1.0;
  std::size_t vocab_size = 500;
  std::size_t min_words = 15;
  std::size_t max_words = 35;
  double zipf_exponent = 1.1;
};

// Toy two-source corpus. Words are random Arabic letter strings. Human texts
// draw i.i.d. words from a Zipf law over one seeded ranking of the
// vocabulary; deepfake texts draw from the mixture
//   (1 − s)·p_human + s·p_shifted
// where p_shifted is the same Zipf law over an independent ranking. At s = 0
// the two sources are identical. Lengths share one distribution, labels
// alternate so the corpus is balanced, and documents are shuffled.
// ConfigError for size < 20, s outside [0, 1], or inconsistent bounds.
Corpus make_synthetic_corpus(const SyntheticSpec& spec);
Corpus make_synthetic_corpus(std::uint64_t seed, std::size_t size, double separability);

// Multinomial naive Bayes over word counts with add-one smoothing, fitted on
// `train`. Returns the test accuracy in percent.
double unigram_oracle_accuracy(const Corpus& train, const Corpus& test);

}  // namespace dfd::pipe
