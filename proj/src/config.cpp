#include "fraudlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <sstream>

#include "fraudlab/errors.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

namespace pt = boost::property_tree;

struct ConfigFile::Impl {
  pt::ptree tree;

  const pt::ptree* section(std::string_view name) const {
    const auto it = tree.find(std::string(name));
    return it == tree.not_found() ? nullptr : &it->second;
  }

  const std::string* raw(std::string_view sec, std::string_view key) const {
    const pt::ptree* s = section(sec);
    if (s == nullptr) return nullptr;
    const auto it = s->find(std::string(key));
    return it == s->not_found() ? nullptr : &it->second.data();
  }
};

namespace {

[[noreturn]] void bad_value(std::string_view sec, std::string_view key, const std::string& value,
                            std::string_view expected) {
  throw ConfigError("[" + std::string(sec) + "] " + std::string(key) + ": expected " + std::string(expected) +
                    ", got '" + value + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return !text.empty() && ec == std::errc{} && ptr == end;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

ConfigFile::ConfigFile() : impl_(std::make_unique<Impl>()) {}
ConfigFile::~ConfigFile() = default;
ConfigFile::ConfigFile(const ConfigFile& other) : impl_(std::make_unique<Impl>(*other.impl_)), hash_(other.hash_) {}
ConfigFile& ConfigFile::operator=(const ConfigFile& other) {
  if (this != &other) {
    impl_ = std::make_unique<Impl>(*other.impl_);
    hash_ = other.hash_;
  }
  return *this;
}
ConfigFile::ConfigFile(ConfigFile&&) noexcept = default;
ConfigFile& ConfigFile::operator=(ConfigFile&&) noexcept = default;

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, cfg.impl_->tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  cfg.hash_ = hex16(fnv1a64(text));
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) { return parse(read_file(path)); }

bool ConfigFile::has_section(std::string_view section) const { return impl_->section(section) != nullptr; }

bool ConfigFile::has(std::string_view section, std::string_view key) const {
  return impl_->raw(section, key) != nullptr;
}

std::vector<std::string> ConfigFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, child] : impl_->tree) out.push_back(name);
  return out;
}

std::string ConfigFile::get_string(std::string_view section, std::string_view key, std::string_view fallback) const {
  const std::string* v = impl_->raw(section, key);
  return v ? trim(*v) : std::string(fallback);
}

double ConfigFile::get_double(std::string_view section, std::string_view key, double fallback) const {
  const std::string* v = impl_->raw(section, key);
  if (v == nullptr) return fallback;
  double out = 0.0;
  const std::string t = trim(*v);
  if (!parse_number(t, out)) bad_value(section, key, t, "a real number");
  return out;
}

std::int64_t ConfigFile::get_int(std::string_view section, std::string_view key, std::int64_t fallback) const {
  const std::string* v = impl_->raw(section, key);
  if (v == nullptr) return fallback;
  std::int64_t out = 0;
  const std::string t = trim(*v);
  if (!parse_number(t, out)) bad_value(section, key, t, "an integer");
  return out;
}

std::uint64_t ConfigFile::get_uint(std::string_view section, std::string_view key, std::uint64_t fallback) const {
  const std::string* v = impl_->raw(section, key);
  if (v == nullptr) return fallback;
  std::uint64_t out = 0;
  const std::string t = trim(*v);
  if (!parse_number(t, out)) bad_value(section, key, t, "a non-negative integer");
  return out;
}

bool ConfigFile::get_bool(std::string_view section, std::string_view key, bool fallback) const {
  const std::string* v = impl_->raw(section, key);
  if (v == nullptr) return fallback;
  const std::string t = trim(*v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  bad_value(section, key, t, "a boolean");
}

std::vector<double> ConfigFile::get_doubles(std::string_view section, std::string_view key,
                                            const std::vector<double>& fallback) const {
  const std::string* v = impl_->raw(section, key);
  if (v == nullptr) return fallback;
  std::vector<double> out;
  std::string_view rest(*v);
  while (true) {
    const auto comma = rest.find(',');
    const std::string item = trim(rest.substr(0, comma));
    double x = 0.0;
    if (!parse_number(item, x)) bad_value(section, key, *v, "a comma-separated list of reals");
    out.push_back(x);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void ConfigFile::require_known_keys(std::string_view section,
                                    std::initializer_list<std::string_view> allowed) const {
  const pt::ptree* s = impl_->section(section);
  if (s == nullptr) return;
  for (const auto& [key, value] : *s) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError("[" + std::string(section) + "] unknown key '" + key + "'");
  }
}

}  // namespace fraudlab
