#include "dfd/pipeline/split.hpp"

#include <cmath>
#include <numeric>

#include "dfd/error.hpp"
#include "dfd/numerics/rng.hpp"

namespace dfd::pipe {

std::size_t train_size(std::size_t n, double train_fraction) {
  // The small offset keeps exact products such as 0.8 × 10 from landing
  // one ulp under the integer.
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
}

namespace {

bool has_both(const std::vector<Label>& labels, std::span<const std::size_t> idx) {
  bool human = false, deepfake = false;
  for (std::size_t i : idx) (labels[i] == Label::human ? human : deepfake) = true;
  return human && deepfake;
}

}  // namespace

Split split_indices(const std::vector<Label>& labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("split: train_fraction must lie in (0, 1)");
  }
  const std::size_t n = labels.size();
  if (n < 2) throw InputError("split: need at least two documents, got " + std::to_string(n));
  std::size_t humans = 0;
  for (Label l : labels) humans += l == Label::human;
  if (humans == 0 || humans == n) throw InputError("split: corpus has a single label");
  const std::size_t n_train = train_size(n, spec.train_fraction);
  const bool feasible = humans >= 2 && n - humans >= 2 && n_train >= 2 && n - n_train >= 2;

  Split first;
  for (std::size_t attempt = 0; attempt <= kMaxSplitRetries; ++attempt) {
    Split s;
    s.seed_used = spec.seed + attempt;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    num::Rng rng(s.seed_used);
    rng.shuffle(std::span<std::size_t>(order));
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    if (!feasible || (has_both(labels, s.train) && has_both(labels, s.test))) return s;
    if (attempt == 0) first = std::move(s);
  }
  return first;
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  require_labels(corpus, "split");
  std::vector<Label> labels;
  for (const auto& d : corpus) labels.push_back(*d.label);
  CorpusSplit out;
  out.indices = split_indices(labels, spec);
  for (std::size_t i : out.indices.train) out.train.push_back(corpus[i]);
  for (std::size_t i : out.indices.test) out.test.push_back(corpus[i]);
  return out;
}

}  // namespace dfd::pipe
