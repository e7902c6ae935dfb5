#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dfd/error.hpp"

namespace dfd::jsonu {

using nlohmann::json;

// Calls f(key, value) for every member; f returns false for keys it does not
// know, which become ConfigError. JSON type errors are rethrown as
// ConfigError naming the key.
template <typename F>
void for_each_key(const json& j, const std::string& what, F&& f) {
  if (!j.is_object()) throw ConfigError(what + " config must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (!f(key, value)) throw ConfigError("unknown key " + what + "." + key);
    } catch (const json::exception& e) {
      throw ConfigError(what + "." + key + ": " + e.what());
    }
  }
}

inline std::size_t as_size(const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError("expected a non-negative integer, got " + v.dump());
  }
  return v.get<std::size_t>();
}

inline std::uint64_t as_u64(const json& v) { return static_cast<std::uint64_t>(as_size(v)); }

inline double as_double(const json& v) {
  if (!v.is_number()) throw ConfigError("expected a number, got " + v.dump());
  return v.get<double>();
}

inline bool as_bool(const json& v) {
  if (!v.is_boolean()) throw ConfigError("expected true or false, got " + v.dump());
  return v.get<bool>();
}

inline std::string as_string(const json& v) {
  if (!v.is_string()) throw ConfigError("expected a string, got " + v.dump());
  return v.get<std::string>();
}

}  // namespace dfd::jsonu
