#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlab/log_model.hpp"

namespace fraudlab::eval {

// Listed in precedence order: a record matching several rules gets the first.
enum class Type1Reason { kPortalSource, kNullSource, kUpdateBurst, kMissingDevice };
std::string_view to_string(Type1Reason reason);

struct Type1Flag {
  std::uint64_t event_id = 0;
  Type1Reason reason = Type1Reason::kPortalSource;
};

struct Type1FilterParams {
  // An (app, UTC hour) bucket is a burst when more than this many distinct
  // devices sent updates in it; records without a device id count individually.
  std::int64_t burst_rate = 100;
};

// Flags downloads from the portal or with a null source, every update in a
// burst bucket, and downloads without a device id. Output follows log order.
std::vector<Type1Flag> type1_rule_filter(std::span<const EventRecord> log, const Type1FilterParams& params = {});

std::vector<EventRecord> remove_flagged(std::span<const EventRecord> log, std::span<const Type1Flag> flags);

// "event_id,reason"
std::string flags_csv(std::span<const Type1Flag> flags);

}  // namespace fraudlab::eval
