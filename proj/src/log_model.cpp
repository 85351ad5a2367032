#include "fraudlab/log_model.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "fraudlab/csv.hpp"
#include "fraudlab/errors.hpp"

namespace fraudlab {

namespace {

constexpr std::string_view kLogHeader =
    "event_id,ts,kind,device_id,vendor_verified,app_id,ip_hash,source";
constexpr std::string_view kCatalogHeader = "app_id,category,rating,release_ts";
constexpr std::string_view kGroundTruthHeader = "event_id,fraud_type";

constexpr std::array<std::string_view, 5> kKindNames = {"download", "search", "view", "install", "update"};
constexpr std::array<std::string_view, 4> kSourceNames = {"client", "portal", "update", "null"};
constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Finance", "Game", "Tools", "Social", "Shopping", "Education", "Life", "Other"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

bool is_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r' || c == ' ' || c == '\t') return false;
  }
  return true;
}

std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void expect_header(csv::LineReader& reader, std::string_view header) {
  std::string_view line;
  if (!reader.next(line)) throw ParseError(1, "header", "missing header row");
  if (line != header) {
    throw ParseError(1, "header", "expected '" + std::string(header) + "', got '" + std::string(line) + "'");
  }
}

void check_arity(const std::vector<std::string_view>& fields, std::size_t expected, std::size_t line) {
  if (fields.size() != expected) {
    throw ParseError(line, "row",
                     "expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
  }
}

void validate_entry(const AppCatalogEntry& entry, std::size_t line) {
  if (!is_token(entry.app_id)) throw ValidationError(line, "app_id format", "app_id must be a non-empty token");
  if (!(entry.rating >= 1.0 && entry.rating <= 5.0)) {
    throw ValidationError(line, "rating range", "rating must lie in [1, 5] for app " + entry.app_id);
  }
}

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(Source source) { return kSourceNames[static_cast<std::size_t>(source)]; }
std::string_view to_string(Category category) { return kCategoryNames[static_cast<std::size_t>(category)]; }

std::optional<EventKind> parse_event_kind(std::string_view text) { return lookup<EventKind>(kKindNames, text); }
std::optional<Source> parse_source(std::string_view text) { return lookup<Source>(kSourceNames, text); }
std::optional<Category> parse_category(std::string_view text) { return lookup<Category>(kCategoryNames, text); }

bool is_hex16(std::string_view token) {
  if (token.size() != 16) return false;
  for (char c : token) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

void validate(const EventRecord& r, std::size_t line) {
  if (r.ts < 0) throw ValidationError(line, "ts non-negative", "timestamp is negative");
  if (!r.device_id.empty() && !is_hex16(r.device_id)) {
    throw ValidationError(line, "device_id format", "device_id must be empty or 16 lowercase hex chars");
  }
  if (!is_hex16(r.ip_hash)) throw ValidationError(line, "ip_hash format", "ip_hash must be 16 lowercase hex chars");
  if (!is_token(r.app_id)) throw ValidationError(line, "app_id format", "app_id must be a non-empty token");
  if ((r.kind == EventKind::kUpdate) != (r.source == Source::kUpdate)) {
    throw ValidationError(line, "kind/source mismatch", "kind=update and source=update must occur together");
  }
  if (r.source == Source::kPortal && r.kind != EventKind::kDownload) {
    throw ValidationError(line, "kind/source mismatch", "source=portal requires kind=download");
  }
  if (r.vendor_verified && r.device_id.empty()) {
    throw ValidationError(line, "vendor_verified requires device_id", "vendor-verified record without device_id");
  }
}

std::vector<EventRecord> parse_log(std::string_view text) {
  csv::LineReader reader(text);
  expect_header(reader, kLogHeader);
  std::vector<EventRecord> records;
  std::unordered_set<std::uint64_t> seen;
  std::string_view line;
  while (reader.next(line)) {
    const std::size_t n = reader.line_number();
    if (line.empty()) throw ParseError(n, "row", "empty row");
    const auto f = csv::split(line);
    check_arity(f, 8, n);
    EventRecord r;
    r.event_id = csv::parse_int<std::uint64_t>(f[0], n, "event_id");
    r.ts = csv::parse_int<std::int64_t>(f[1], n, "ts");
    const auto kind = parse_event_kind(f[2]);
    if (!kind) throw ParseError(n, "kind", "unknown kind '" + std::string(f[2]) + "'");
    r.kind = *kind;
    r.device_id = std::string(f[3]);
    if (f[4] == "1") {
      r.vendor_verified = true;
    } else if (f[4] == "0") {
      r.vendor_verified = false;
    } else {
      throw ParseError(n, "vendor_verified", "expected 0 or 1, got '" + std::string(f[4]) + "'");
    }
    r.app_id = std::string(f[5]);
    r.ip_hash = std::string(f[6]);
    const auto source = parse_source(f[7]);
    if (!source) throw ParseError(n, "source", "unknown source '" + std::string(f[7]) + "'");
    r.source = *source;
    validate(r, n);
    if (!seen.insert(r.event_id).second) {
      throw ValidationError(n, "event_id unique", "duplicate event_id " + std::to_string(r.event_id));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EventRecord> parse_log(std::istream& in) { return parse_log(std::string_view(slurp(in))); }

std::string write_log(std::span<const EventRecord> records) {
  std::string out;
  out.reserve(64 + records.size() * 72);
  out.append(kLogHeader).push_back('\n');
  for (const auto& r : records) {
    out.append(std::to_string(r.event_id)).push_back(',');
    out.append(std::to_string(r.ts)).push_back(',');
    out.append(to_string(r.kind)).push_back(',');
    out.append(r.device_id).push_back(',');
    out.push_back(r.vendor_verified ? '1' : '0');
    out.push_back(',');
    out.append(r.app_id).push_back(',');
    out.append(r.ip_hash).push_back(',');
    out.append(to_string(r.source)).push_back('\n');
  }
  return out;
}

void write_log(std::ostream& out, std::span<const EventRecord> records) { out << write_log(records); }

void AppCatalog::add(AppCatalogEntry entry) {
  validate_entry(entry, 0);
  if (index_.contains(entry.app_id)) {
    throw ValidationError(0, "app_id unique", "duplicate app_id " + entry.app_id);
  }
  index_.emplace(entry.app_id, entries_.size());
  entries_.push_back(std::move(entry));
}

const AppCatalogEntry* AppCatalog::find(std::string_view app_id) const {
  const auto it = index_.find(std::string(app_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const AppCatalogEntry& AppCatalog::at(std::string_view app_id) const {
  const auto* entry = find(app_id);
  if (entry == nullptr) throw DataError("app missing from catalog: " + std::string(app_id));
  return *entry;
}

void AppCatalog::set_rating(std::string_view app_id, double rating) {
  const auto it = index_.find(std::string(app_id));
  if (it == index_.end()) throw DataError("app missing from catalog: " + std::string(app_id));
  AppCatalogEntry updated = entries_[it->second];
  updated.rating = rating;
  validate_entry(updated, 0);
  entries_[it->second] = std::move(updated);
}

AppCatalog parse_catalog(std::string_view text) {
  csv::LineReader reader(text);
  expect_header(reader, kCatalogHeader);
  AppCatalog catalog;
  std::string_view line;
  while (reader.next(line)) {
    const std::size_t n = reader.line_number();
    if (line.empty()) throw ParseError(n, "row", "empty row");
    const auto f = csv::split(line);
    check_arity(f, 4, n);
    AppCatalogEntry e;
    e.app_id = std::string(f[0]);
    const auto category = parse_category(f[1]);
    if (!category) throw ParseError(n, "category", "unknown category '" + std::string(f[1]) + "'");
    e.category = *category;
    e.rating = csv::parse_double(f[2], n, "rating");
    e.release_ts = csv::parse_int<std::int64_t>(f[3], n, "release_ts");
    validate_entry(e, n);
    if (catalog.find(e.app_id) != nullptr) {
      throw ValidationError(n, "app_id unique", "duplicate app_id " + e.app_id);
    }
    catalog.add(std::move(e));
  }
  return catalog;
}

AppCatalog parse_catalog(std::istream& in) { return parse_catalog(std::string_view(slurp(in))); }

std::string write_catalog(const AppCatalog& catalog) {
  std::string out;
  out.append(kCatalogHeader).push_back('\n');
  char rating[32];
  for (const auto& e : catalog.entries()) {
    std::snprintf(rating, sizeof(rating), "%.1f", e.rating);
    out.append(e.app_id).push_back(',');
    out.append(to_string(e.category)).push_back(',');
    out.append(rating).push_back(',');
    out.append(std::to_string(e.release_ts)).push_back('\n');
  }
  return out;
}

void write_catalog(std::ostream& out, const AppCatalog& catalog) { out << write_catalog(catalog); }

std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text) {
  csv::LineReader reader(text);
  expect_header(reader, kGroundTruthHeader);
  std::vector<GroundTruthEntry> entries;
  std::string_view line;
  while (reader.next(line)) {
    const std::size_t n = reader.line_number();
    const auto f = csv::split(line);
    check_arity(f, 2, n);
    GroundTruthEntry e;
    e.event_id = csv::parse_int<std::uint64_t>(f[0], n, "event_id");
    const auto type = csv::parse_int<int>(f[1], n, "fraud_type");
    if (type < 0 || type > 3) throw ParseError(n, "fraud_type", "expected 0..3");
    e.fraud_type = static_cast<FraudType>(type);
    entries.push_back(e);
  }
  return entries;
}

std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in) {
  return parse_ground_truth(std::string_view(slurp(in)));
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthEntry> entries) {
  std::string text;
  text.append(kGroundTruthHeader).push_back('\n');
  for (const auto& e : entries) {
    text.append(std::to_string(e.event_id)).push_back(',');
    text.append(std::to_string(static_cast<int>(e.fraud_type))).push_back('\n');
  }
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path);
  return slurp(in);
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kInternal, "cannot write file: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kInternal, "write failed: " + path);
}

std::vector<EventRecord> load_log(const std::string& path) { return parse_log(std::string_view(read_file(path))); }
AppCatalog load_catalog(const std::string& path) { return parse_catalog(std::string_view(read_file(path))); }
std::vector<GroundTruthEntry> load_ground_truth(const std::string& path) {
  return parse_ground_truth(std::string_view(read_file(path)));
}

}  // namespace fraudlab
