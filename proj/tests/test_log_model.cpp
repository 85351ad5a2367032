#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "fraudlab/errors.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/rng.hpp"

using namespace fraudlab;

namespace {

const std::string kHeader = "event_id,ts,kind,device_id,vendor_verified,app_id,ip_hash,source\n";

template <typename Fn>
std::string validation_invariant(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.invariant();
  }
  return "";
}

EventRecord random_record(Rng& rng, std::uint64_t id) {
  EventRecord r;
  r.event_id = id;
  r.ts = static_cast<std::int64_t>(rng.below(2'000'000'000));
  const auto kind = static_cast<EventKind>(rng.below(5));
  r.kind = kind;
  if (kind == EventKind::kUpdate) {
    r.source = Source::kUpdate;
  } else if (kind == EventKind::kDownload) {
    const Source choices[] = {Source::kClient, Source::kPortal, Source::kNull};
    r.source = choices[rng.below(3)];
  } else {
    r.source = Source::kClient;
  }
  if (rng.bernoulli(0.8)) r.device_id = hex16(rng.next());
  r.vendor_verified = !r.device_id.empty() && rng.bernoulli(0.5);
  r.app_id = "app_" + std::to_string(rng.below(500));
  r.ip_hash = hex16(rng.next());
  return r;
}

}  // namespace

TEST_CASE("parse_log maps one row field by field") {
  const auto log = parse_log(kHeader + "1,1000,download,a1b2c3d4e5f60718,1,app_7,0f0f0f0f0f0f0f0f,client\n");
  REQUIRE(log.size() == 1);
  CHECK(log[0].event_id == 1);
  CHECK(log[0].ts == 1000);
  CHECK(log[0].kind == EventKind::kDownload);
  CHECK(log[0].device_id == "a1b2c3d4e5f60718");
  CHECK(log[0].vendor_verified);
  CHECK(log[0].app_id == "app_7");
  CHECK(log[0].ip_hash == "0f0f0f0f0f0f0f0f");
  CHECK(log[0].source == Source::kClient);
}

TEST_CASE("header-only log is empty and empty log writes header only") {
  CHECK(parse_log(kHeader).empty());
  CHECK(write_log(std::vector<EventRecord>{}) == kHeader);
}

TEST_CASE("one record writes a two-line file") {
  Rng rng(1, 1);
  const std::vector<EventRecord> one{random_record(rng, 1)};
  const std::string text = write_log(one);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("parser names the violated invariant") {
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,1000,download,a1b2c3d4e5f60718,1,app_7,0f0f0f0f0f0f0f0f,update\n");
        }) == "kind/source mismatch");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,1000,update,a1b2c3d4e5f60718,1,app_7,0f0f0f0f0f0f0f0f,client\n");
        }) == "kind/source mismatch");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,1000,view,a1b2c3d4e5f60718,1,app_7,0f0f0f0f0f0f0f0f,portal\n");
        }) == "kind/source mismatch");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,1000,download,,1,app_7,0f0f0f0f0f0f0f0f,client\n");
        }) == "vendor_verified requires device_id");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,-5,download,,0,app_7,0f0f0f0f0f0f0f0f,client\n");
        }) == "ts non-negative");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,5,download,ABCDEF0123456789,0,app_7,0f0f0f0f0f0f0f0f,client\n");
        }) == "device_id format");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,5,download,,0,app_7,0f0f,client\n");
        }) == "ip_hash format");
  CHECK(validation_invariant([] {
          parse_log(kHeader + "1,5,download,,0,app_7,0f0f0f0f0f0f0f0f,client\n"
                              "1,6,download,,0,app_7,0f0f0f0f0f0f0f0f,client\n");
        }) == "event_id unique");
}

TEST_CASE("malformed rows carry line and field") {
  try {
    parse_log(kHeader + "1,5,download,,0,app_7,0f0f0f0f0f0f0f0f,client\n2,xx,download,,0,app_7,0f0f0f0f0f0f0f0f,client\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "ts");
  }
  CHECK_THROWS_AS(parse_log(kHeader + "1,5,fetch,,0,app_7,0f0f0f0f0f0f0f0f,client\n"), ParseError);
  CHECK_THROWS_AS(parse_log(kHeader + "1,5,download,,2,app_7,0f0f0f0f0f0f0f0f,client\n"), ParseError);
  CHECK_THROWS_AS(parse_log(kHeader + "1,5,download,,0,app_7\n"), ParseError);
  CHECK_THROWS_AS(parse_log("id,ts\n"), ParseError);
  CHECK_THROWS_AS(parse_log(""), ParseError);
}

TEST_CASE("10k random records round-trip and re-write byte-identically") {
  Rng rng(42, 7);
  std::vector<EventRecord> records;
  for (std::uint64_t i = 0; i < 10000; ++i) records.push_back(random_record(rng, i * 3 + 1));
  for (const auto& r : records) validate(r);
  const std::string text = write_log(records);
  const auto back = parse_log(text);
  CHECK(back == records);
  CHECK(write_log(back) == text);
}

TEST_CASE("file order is preserved") {
  const auto log = parse_log(kHeader +
                             "9,50,view,,0,app_1,0f0f0f0f0f0f0f0f,client\n"
                             "2,10,search,,0,app_1,0f0f0f0f0f0f0f0f,client\n");
  REQUIRE(log.size() == 2);
  CHECK(log[0].event_id == 9);
  CHECK(log[1].event_id == 2);
}

TEST_CASE("catalog parsing") {
  const std::string header = "app_id,category,rating,release_ts\n";
  const auto catalog = parse_catalog(header + "app_1,Finance,4.6,500\n");
  REQUIRE(catalog.size() == 1);
  CHECK(catalog.at("app_1").category == Category::kFinance);
  CHECK(catalog.at("app_1").rating == doctest::Approx(4.6));
  CHECK(catalog.at("app_1").release_ts == 500);

  CHECK(validation_invariant([&] { parse_catalog(header + "app_1,Game,5.1,0\n"); }) == "rating range");
  try {
    parse_catalog(header + "app_1,Game,3.0,0\napp_1,Tools,2.0,0\n");
    FAIL("expected a duplicate error");
  } catch (const ValidationError& e) {
    CHECK(e.invariant() == "app_id unique");
    CHECK(std::string(e.what()).find("app_1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_catalog(header + "app_1,Toys,3.0,0\n"), ParseError);
  CHECK_THROWS_AS(catalog.at("app_2"), DataError);
}

TEST_CASE("catalog writes one decimal and round-trips") {
  AppCatalog catalog;
  catalog.add({"app_1", Category::kGame, 4.0, 10});
  catalog.add({"app_2", Category::kOther, 1.5, 20});
  const std::string text = write_catalog(catalog);
  CHECK(text == "app_id,category,rating,release_ts\napp_1,Game,4.0,10\napp_2,Other,1.5,20\n");
  CHECK(parse_catalog(text) == catalog);
}

TEST_CASE("ground truth round-trip") {
  const std::vector<GroundTruthEntry> truth{{1, FraudType::kLegit}, {2, FraudType::kType2}, {5, FraudType::kType3}};
  std::ostringstream out;
  write_ground_truth(out, truth);
  CHECK(out.str() == "event_id,fraud_type\n1,0\n2,2\n5,3\n");
  CHECK(parse_ground_truth(out.str()) == truth);
  CHECK_THROWS_AS(parse_ground_truth("event_id,fraud_type\n1,4\n"), ParseError);
}

TEST_CASE("missing files raise the missing-file error") {
  CHECK_THROWS_AS(load_log("/nonexistent/log.csv"), MissingFileError);
}

TEST_CASE("hex16 tokens") {
  CHECK(is_hex16(hex16(0)));
  CHECK(hex16(0) == "0000000000000000");
  CHECK(hex16(0xabcdefULL) == "0000000000abcdef");
  CHECK_FALSE(is_hex16("0000"));
  CHECK_FALSE(is_hex16("000000000000000G"));
}
