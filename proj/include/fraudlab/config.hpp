#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace fraudlab {

// Flat "[section] key = value" configuration. Lines starting with ';' or '#'
// are comments. Typed getters throw ConfigError naming section and key.
class ConfigFile {
 public:
  ConfigFile();
  ~ConfigFile();
  ConfigFile(const ConfigFile&);
  ConfigFile& operator=(const ConfigFile&);
  ConfigFile(ConfigFile&&) noexcept;
  ConfigFile& operator=(ConfigFile&&) noexcept;

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::string& path);

  bool has_section(std::string_view section) const;
  bool has(std::string_view section, std::string_view key) const;
  std::vector<std::string> sections() const;

  std::string get_string(std::string_view section, std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view section, std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view section, std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view section, std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view section, std::string_view key, bool fallback) const;
  // Comma-separated list of reals; fallback when the key is absent.
  std::vector<double> get_doubles(std::string_view section, std::string_view key,
                                  const std::vector<double>& fallback) const;

  // Throws ConfigError if the section holds a key outside allowed.
  void require_known_keys(std::string_view section, std::initializer_list<std::string_view> allowed) const;

  // FNV-1a over the raw config text, as 16 hex chars.
  const std::string& content_hash() const noexcept { return hash_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string hash_;
};

// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace fraudlab
