#pragma once

#include "pwsml/dataset.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace pwsml {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kFormatVersion = "1";

/// Ordered `key = value` lines. Setting an existing key replaces it in place.
class Manifest {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }
  void set(std::string key, double value);
  void set(std::string key, long long value);
  void set(std::string key, unsigned long long value);
  void set(std::string key, int value) { set(std::move(key), static_cast<long long>(value)); }
  void set(std::string key, std::size_t value) { set(std::move(key), static_cast<unsigned long long>(value)); }
  void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
  void merge(const KeyValues& kv, std::string_view prefix = {});

  std::optional<std::string> get(std::string_view key) const;
  const KeyValues& entries() const noexcept { return entries_; }

  std::string str() const;
  void write(const std::string& path) const;
  static Manifest parse(std::string_view text);
  static Manifest read(const std::string& path);

 private:
  KeyValues entries_;
};

}  // namespace pwsml
