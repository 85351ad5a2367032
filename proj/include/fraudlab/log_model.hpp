#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fraudlab {

inline constexpr int kLogFormatVersion = 1;

enum class EventKind : std::uint8_t { kDownload, kSearch, kView, kInstall, kUpdate };
enum class Source : std::uint8_t { kClient, kPortal, kUpdate, kNull };
enum class Category : std::uint8_t {
  kFinance, kGame, kTools, kSocial, kShopping, kEducation, kLife, kOther
};
inline constexpr std::size_t kCategoryCount = 8;

enum class FraudType : std::uint8_t { kLegit = 0, kType1 = 1, kType2 = 2, kType3 = 3 };

std::string_view to_string(EventKind kind);
std::string_view to_string(Source source);
std::string_view to_string(Category category);
std::optional<EventKind> parse_event_kind(std::string_view text);
std::optional<Source> parse_source(std::string_view text);
std::optional<Category> parse_category(std::string_view text);

// One market event. device_id is either empty ("no device ID") or a
// 16-character lowercase hex token; ip_hash is always such a token.
struct EventRecord {
  std::uint64_t event_id = 0;
  std::int64_t ts = 0;
  EventKind kind = EventKind::kDownload;
  std::string device_id;
  bool vendor_verified = false;
  std::string app_id;
  std::string ip_hash;
  Source source = Source::kClient;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct AppCatalogEntry {
  std::string app_id;
  Category category = Category::kOther;
  double rating = 1.0;
  std::int64_t release_ts = 0;

  friend bool operator==(const AppCatalogEntry&, const AppCatalogEntry&) = default;
};

// Apps in insertion (file) order with lookup by id.
class AppCatalog {
 public:
  // Throws ValidationError when the id already exists or the entry is invalid.
  void add(AppCatalogEntry entry);

  const AppCatalogEntry* find(std::string_view app_id) const;
  // Throws DataError naming the id when absent.
  const AppCatalogEntry& at(std::string_view app_id) const;
  void set_rating(std::string_view app_id, double rating);

  const std::vector<AppCatalogEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const AppCatalog& a, const AppCatalog& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<AppCatalogEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct GroundTruthEntry {
  std::uint64_t event_id = 0;
  FraudType fraud_type = FraudType::kLegit;

  friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

bool is_hex16(std::string_view token);

// Checks the per-record invariants and throws ValidationError naming the
// violated one. line is reported as-is (0 when the record is not from a file).
void validate(const EventRecord& record, std::size_t line = 0);

// Event log CSV. Records come back in file order; event ids must be unique.
std::vector<EventRecord> parse_log(std::istream& in);
std::vector<EventRecord> parse_log(std::string_view text);
void write_log(std::ostream& out, std::span<const EventRecord> records);
std::string write_log(std::span<const EventRecord> records);

AppCatalog parse_catalog(std::istream& in);
AppCatalog parse_catalog(std::string_view text);
void write_catalog(std::ostream& out, const AppCatalog& catalog);
std::string write_catalog(const AppCatalog& catalog);

std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in);
std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text);
void write_ground_truth(std::ostream& out, std::span<const GroundTruthEntry> entries);

// File helpers shared by the pipeline stages.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
std::vector<EventRecord> load_log(const std::string& path);
AppCatalog load_catalog(const std::string& path);
std::vector<GroundTruthEntry> load_ground_truth(const std::string& path);

}  // namespace fraudlab
