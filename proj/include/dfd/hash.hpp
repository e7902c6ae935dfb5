#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace dfd {

// 64-bit FNV-1a, used for content fingerprints (vocabularies, checkpoints).
class Fnv1a {
 public:
  void add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

inline std::string fnv1a_hex(std::string_view bytes) {
  Fnv1a h;
  h.add(bytes);
  return h.hex();
}

}  // namespace dfd
