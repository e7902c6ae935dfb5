#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dfd/tokenizer/encode.hpp"

namespace dfd::models {

// Token ids packed row-major as [size × seq_len]; example b owns
// ids[b*seq_len, (b+1)*seq_len) and its first lengths[b] positions are real.
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> lengths;
};

// Stacks the selected sequences, trimmed to the longest true length among
// them (at least 1). Trailing padding never changes a model's output, so
// trimming is exact.
Batch make_batch(const std::vector<tok::TokenSequence>& seqs, std::span<const std::size_t> indices);
Batch make_batch(const std::vector<tok::TokenSequence>& seqs);

}  // namespace dfd::models
