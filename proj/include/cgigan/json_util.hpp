#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include "cgigan/error.hpp"
#include <nlohmann/json.hpp>

namespace cgigan::json_util {

using nlohmann::json;

/// Throws ConfigurationError naming the first key of `j` not in `allowed`.
inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigurationError("section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigurationError("unknown key '" + key + "' in section '" + section + "'");
    }
  }
}

/// Overwrites `out` with `j[key]` when present.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError("bad value for '" + section + "." + key + "': " + e.what());
  }
}

}  // namespace cgigan::json_util
