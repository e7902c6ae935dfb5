#pragma once

#include <cstdint>
#include <iosfwd>

#include "dfd/numerics/tensor.hpp"

namespace dfd::num {

// Blob layout: rank (u64 LE), each dim (u64 LE), then row-major data as
// IEEE-754 binary32 LE.
void write_tensor(std::ostream& out, const Tensor<float>& t);
Tensor<float> read_tensor(std::istream& in);

// Bytes write_tensor() produces for `t`.
std::uint64_t tensor_blob_size(const Tensor<float>& t);

}  // namespace dfd::num
