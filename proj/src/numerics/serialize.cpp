#include "dfd/numerics/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "dfd/error.hpp"

namespace dfd::num {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw IntegrityError("truncated tensor blob header");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor<float>& t) {
  put_u64(out, t.rank());
  for (std::size_t d : t.shape()) put_u64(out, d);
  std::string buf(t.size() * 4, '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(t[i]);
    for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Tensor<float> read_tensor(std::istream& in) {
  const std::uint64_t rank = get_u64(in);
  if (rank == 0 || rank > 3) throw IntegrityError("tensor blob has invalid rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = get_u64(in);
    if (d == 0 || d > (1ull << 32)) throw IntegrityError("tensor blob has invalid dimension");
  }
  const std::size_t n = shape_size(shape);
  std::string buf(n * 4, '\0');
  if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
    throw IntegrityError("truncated tensor blob data");
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
    }
    data[i] = std::bit_cast<float>(bits);
  }
  return Tensor<float>(std::move(shape), std::move(data));
}

std::uint64_t tensor_blob_size(const Tensor<float>& t) {
  return 8 * (1 + t.rank()) + 4 * t.size();
}

}  // namespace dfd::num
