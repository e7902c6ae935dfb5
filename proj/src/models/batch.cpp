#include "dfd/models/batch.hpp"

#include <algorithm>
#include <numeric>

#include "dfd/error.hpp"

namespace dfd::models {

Batch make_batch(const std::vector<tok::TokenSequence>& seqs, std::span<const std::size_t> indices) {
  Batch batch;
  batch.size = indices.size();
  if (batch.size == 0) throw UsageError("make_batch: empty batch");
  std::size_t longest = 1;
  for (std::size_t i : indices) {
    if (i >= seqs.size()) throw UsageError("make_batch: index out of range");
    longest = std::max(longest, seqs[i].true_length);
  }
  batch.seq_len = longest;
  batch.ids.assign(batch.size * longest, tok::kPad);
  batch.lengths.reserve(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& s = seqs[indices[b]];
    std::copy_n(s.ids.begin(), s.true_length, batch.ids.begin() + b * longest);
    batch.lengths.push_back(s.true_length);
  }
  return batch;
}

Batch make_batch(const std::vector<tok::TokenSequence>& seqs) {
  std::vector<std::size_t> all(seqs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(seqs, all);
}

}  // namespace dfd::models
