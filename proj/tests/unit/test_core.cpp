#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "autoprov/core/hash.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/records.hpp"
#include "autoprov/core/rng.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/core/timestamp.hpp"
#include "test_util.hpp"

using namespace autoprov;

TEST(Timestamp, IsoWithZone) {
  auto t = parse_timestamp("2018-04-10T12:00:00Z");
  ASSERT_TRUE(t.epoch_micros);
  EXPECT_EQ(*t.epoch_micros, 1523361600LL * 1000000);
  EXPECT_EQ(t.raw, "2018-04-10T12:00:00Z");
}

TEST(Timestamp, GarbageKeepsRaw) {
  auto t = parse_timestamp("garbage");
  EXPECT_EQ(t.raw, "garbage");
  EXPECT_FALSE(t.epoch_micros);
}

TEST(Timestamp, UnixSeconds) {
  const TimeFormat only[] = {TimeFormat::UnixSeconds};
  auto t = parse_timestamp("1523361600", only);
  ASSERT_TRUE(t.epoch_micros);
  EXPECT_EQ(*t.epoch_micros, 1523361600000000LL);
}

TEST(Timestamp, OtherFormatsAgree) {
  const std::int64_t want = 1523361600LL * 1000000;
  EXPECT_EQ(parse_timestamp("2018-04-10 12:00:00").epoch_micros, want);
  EXPECT_EQ(parse_timestamp("2018-04-10T14:00:00+02:00").epoch_micros, want);
  EXPECT_EQ(parse_timestamp("[10/Apr/2018:12:00:00 +0000]").epoch_micros, want);
  EXPECT_EQ(parse_timestamp("1523361600000").epoch_micros, want);
  EXPECT_EQ(parse_timestamp("1523361600000000000").epoch_micros, want);
  EXPECT_EQ(parse_timestamp("1523361600.25").epoch_micros, want + 250000);
}

TEST(Timestamp, RejectsOutOfRangeFields) {
  EXPECT_FALSE(parse_timestamp("2018-13-10T12:00:00Z").epoch_micros);
  EXPECT_FALSE(parse_timestamp("2018-04-10T12:00:00Zjunk").epoch_micros);
}

TEST(Timestamp, OnlyRegisteredFormatsApply) {
  const TimeFormat millis[] = {TimeFormat::UnixMillis};
  EXPECT_FALSE(parse_timestamp("1523361600", millis).epoch_micros);
  EXPECT_FALSE(parse_timestamp("2018-04-10T12:00:00Z", millis).epoch_micros);
}

static ProvenanceRecord sample_record(int i) {
  ProvenanceRecord r;
  r.sid = "pid-" + std::to_string(i);
  r.stype = "process";
  r.sname = "/usr/bin/app" + std::to_string(i);
  r.did = "inode-" + std::to_string(i);
  r.dname = std::nullopt;
  r.itype = i == 2 ? std::string(kNoLabel) : "read";
  if (i != 1) r.time = parse_timestamp("2018-04-10T12:00:0" + std::to_string(i) + "Z");
  r.origin = i == 0 ? Origin::cpe() : Origin::rule("abc");
  r.source_log_id = "L" + std::to_string(i);
  return r;
}

TEST(Jsonl, EmptyRoundTrip) {
  TempDir dir;
  auto p = dir.path() / "empty.jsonl";
  EXPECT_EQ(write_jsonl(p, std::vector<ProvenanceRecord>{}), 0u);
  EXPECT_EQ(std::filesystem::file_size(p), 0u);
  EXPECT_TRUE(read_jsonl<ProvenanceRecord>(p).empty());
}

TEST(Jsonl, RecordsRoundTrip) {
  TempDir dir;
  auto p = dir.path() / "recs.jsonl";
  std::vector<ProvenanceRecord> recs = {sample_record(0), sample_record(1), sample_record(2)};
  EXPECT_EQ(write_jsonl(p, recs), 3u);
  EXPECT_EQ(read_jsonl<ProvenanceRecord>(p), recs);

  std::vector<LogRecord> logs = {{"a", "x y", 0, 0, std::nullopt}, {"b", "z", 1, 0, "auditd"}};
  write_jsonl(p, logs);
  EXPECT_EQ(read_jsonl<LogRecord>(p), logs);
}

TEST(Jsonl, CorruptLineIsNamed) {
  TempDir dir;
  auto p = dir.path() / "bad.jsonl";
  std::vector<ProvenanceRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(sample_record(i % 3));
  write_jsonl(p, recs);
  auto lines = text::split_lines(read_text(p));
  lines[2] = lines[2].substr(0, lines[2].size() / 2);
  write_text_atomic(p, text::join(lines, "\n") + "\n");
  try {
    read_jsonl<ProvenanceRecord>(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Jsonl, InvalidRecordRejected) {
  TempDir dir;
  auto p = dir.path() / "inv.jsonl";
  auto r = sample_record(0);
  nlohmann::json j = r;
  j["sid"] = "";
  write_text_atomic(p, j.dump() + "\n");
  EXPECT_THROW(read_jsonl<ProvenanceRecord>(p), ParseError);
}

TEST(Jsonl, MissingFileNamesPath) {
  try {
    read_jsonl<LogRecord>("/nonexistent/dir/x.jsonl");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/dir/x.jsonl");
  }
}

TEST(Hash, FnvKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(fnv1a64("foobar")), "85944171f73967e8");
}

TEST(Rng, SampleIsDistinctAndSeeded) {
  Rng a(7), b(7);
  auto s = a.sample(100, 10);
  EXPECT_EQ(s, b.sample(100, 10));
  std::set<std::size_t> u(s.begin(), s.end());
  EXPECT_EQ(u.size(), 10u);
  EXPECT_EQ(Rng(1).sample(3, 10).size(), 3u);
}

TEST(Text, Helpers) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_TRUE(text::is_ip_port("10.0.0.1:443"));
  EXPECT_FALSE(text::is_ip_port("10.0.0:443"));
  EXPECT_FALSE(text::is_ip_port("host:443"));
  EXPECT_EQ(text::split_lines("a\r\nb\n\nc\n"), (std::vector<std::string>{"a", "b", "", "c"}));
}
