#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "ceas/errors.hpp"

namespace ceas::detail {

// Reads j[key] into out when present.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

}  // namespace ceas::detail
