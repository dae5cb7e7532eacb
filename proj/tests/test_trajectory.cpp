#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "trajsem/rng.hpp"
#include "trajsem/trajectory.hpp"

using namespace trajsem;

namespace {

const CivilDate kDay{2021, 11, 1};  // a Monday

std::vector<StayRecord> random_stays(SplitMix64& rng, const std::string& user,
                                     const CivilDate& date, int count,
                                     int region_count) {
  std::vector<StayRecord> stays;
  for (int i = 0; i < count; ++i) {
    // Start anywhere from the evening before to late in the day, lengths
    // up to 8 hours, so stays may straddle midnight or miss the day.
    const std::int64_t start =
        -360 + static_cast<std::int64_t>(rng.next_u64() % 2000);
    const std::int64_t len = 10 + static_cast<std::int64_t>(rng.next_u64() % 480);
    stays.push_back(testutil::make_stay(
        user, static_cast<RegionId>(rng.next_u64() % static_cast<std::uint64_t>(region_count)),
        date, start, start + len));
  }
  return stays;
}

}  // namespace

TEST_CASE("full-day stay fills every slot", "[trajectory]") {
  const auto stays = std::vector<StayRecord>{testutil::make_stay("u", 7, kDay, 0, 1440)};
  const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
  CHECK(t.user_pseudo_id == "u");
  CHECK(t.weekday == 1);
  REQUIRE(t.regions.size() == 24);
  for (RegionId r : t.regions) CHECK(r == 7);
  for (int c : t.coverage_minutes) CHECK(c == 60);
}

TEST_CASE("majority dwell wins a split slot", "[trajectory]") {
  // Slot 9: region 1 for 40 minutes, region 2 for 20.
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u", 1, kDay, 9 * 60, 9 * 60 + 40),
      testutil::make_stay("u", 2, kDay, 9 * 60 + 40, 10 * 60),
  };
  const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
  CHECK(t.regions[9] == 1);
  CHECK(t.coverage_minutes[9] == 60);
}

TEST_CASE("dwell ties break toward the earlier stay", "[trajectory]") {
  SECTION("equal dwell, different starts") {
    const std::vector<StayRecord> stays = {
        testutil::make_stay("u", 5, kDay, 0, 30),    // starts first
        testutil::make_stay("u", 3, kDay, 30, 60),
    };
    CHECK(slot_trajectory(stays, kDay, 24).regions[0] == 5);
  }
  SECTION("equal dwell and equal starts fall back to the lower id") {
    // Two stays both starting the evening before, same dwell in slot 0.
    const std::vector<StayRecord> stays = {
        testutil::make_stay("u", 9, kDay, -60, 30),
        testutil::make_stay("u", 4, kDay, -60, 30),
    };
    CHECK(slot_trajectory(stays, kDay, 24).regions[0] == 4);
  }
}

TEST_CASE("gaps carry forward and leading gaps backfill", "[trajectory]") {
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u", 8, kDay, 5 * 60, 7 * 60),    // 05:00-07:00
      testutil::make_stay("u", 2, kDay, 12 * 60, 13 * 60),  // 12:00-13:00
  };
  const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
  for (int l = 0; l < 5; ++l) {
    CHECK(t.regions[static_cast<size_t>(l)] == 8);  // backfilled
    CHECK(t.coverage_minutes[static_cast<size_t>(l)] == 0);
  }
  for (int l = 5; l < 7; ++l) CHECK(t.regions[static_cast<size_t>(l)] == 8);
  for (int l = 7; l < 12; ++l) CHECK(t.regions[static_cast<size_t>(l)] == 8);  // carried
  CHECK(t.regions[12] == 2);
  for (int l = 13; l < 24; ++l) CHECK(t.regions[static_cast<size_t>(l)] == 2);  // carried

  // Carry-forward only ever repeats regions the user actually visited.
  for (RegionId r : t.regions) CHECK((r == 8 || r == 2));
}

TEST_CASE("day without any overlapping stay is rejected", "[trajectory]") {
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u", 1, {2021, 11, 2}, 60, 120),
  };
  CHECK_THROWS_AS(slot_trajectory(stays, kDay, 24), EmptyDay);
  CHECK_THROWS_AS(slot_trajectory({}, kDay, 24), EmptyDay);
}

TEST_CASE("mixed users and bad slot counts are configuration errors", "[trajectory]") {
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u1", 1, kDay, 0, 600),
      testutil::make_stay("u2", 1, kDay, 600, 1200),
  };
  CHECK_THROWS_AS(slot_trajectory(stays, kDay, 24), ConfigError);

  const std::vector<StayRecord> ok = {testutil::make_stay("u", 1, kDay, 0, 600)};
  CHECK_THROWS_AS(slot_trajectory(ok, kDay, 7), ConfigError);   // 1440 % 7 != 0
  CHECK_THROWS_AS(slot_trajectory(ok, kDay, 0), ConfigError);
  CHECK_NOTHROW(slot_trajectory(ok, kDay, 48));
}

TEST_CASE("slotting is invariant to stay order", "[trajectory]") {
  SplitMix64 rng(77);
  auto stays = random_stays(rng, "u", kDay, 12, 5);
  const SlottedTrajectory base = slot_trajectory(stays, kDay, 24);
  std::mt19937 shuffler(4242);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(stays.begin(), stays.end(), shuffler);
    const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
    CHECK(t.regions == base.regions);
    CHECK(t.coverage_minutes == base.coverage_minutes);
  }
}

TEST_CASE("slotting matches the minute-grid oracle", "[trajectory]") {
  SplitMix64 rng(2024);
  const int kSlotChoices[] = {24, 48, 12, 6, 96};
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int slots = kSlotChoices[trial % 5];
    const int stay_count = 1 + static_cast<int>(rng.next_u64() % 14);
    const auto stays = random_stays(rng, "u", kDay, stay_count, 6);
    const testutil::OracleSlots want = testutil::oracle_slot(stays, kDay, slots);
    if (want.empty_day) {
      CHECK_THROWS_AS(slot_trajectory(stays, kDay, slots), EmptyDay);
      continue;
    }
    const SlottedTrajectory got = slot_trajectory(stays, kDay, slots);
    CHECK(got.regions == want.regions);
    CHECK(got.coverage_minutes == want.coverage);
    ++checked;
  }
  CHECK(checked > 30);  // the generator must mostly produce non-empty days
}

TEST_CASE("overlap minutes conserve clipped stay time", "[trajectory]") {
  // With non-overlapping stays, coverage equals dwell, so summed slot
  // coverage must equal total stay minutes clipped to the day.
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u", 1, kDay, -120, 90),     // 90 in-day minutes
      testutil::make_stay("u", 2, kDay, 90, 300),      // 210
      testutil::make_stay("u", 3, kDay, 1300, 1500),   // 140
  };
  const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
  std::int64_t covered = 0;
  for (int c : t.coverage_minutes) covered += c;
  CHECK(covered == 90 + 210 + 140);
}

TEST_CASE("paper-style example day slots into the expected sequence", "[trajectory]") {
  // Stay schedule reproducing the worked sequence:
  // nine night hours at home, then alternating office/errand regions.
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u", 161, kDay, 0, 540),
      testutil::make_stay("u", 365, kDay, 540, 660),
      testutil::make_stay("u", 359, kDay, 660, 780),
      testutil::make_stay("u", 365, kDay, 780, 900),
      testutil::make_stay("u", 361, kDay, 900, 960),
      testutil::make_stay("u", 365, kDay, 960, 1020),
      testutil::make_stay("u", 361, kDay, 1020, 1140),
      testutil::make_stay("u", 359, kDay, 1140, 1260),
      testutil::make_stay("u", 365, kDay, 1260, 1380),
      testutil::make_stay("u", 161, kDay, 1380, 1440),
  };
  const SlottedTrajectory t = slot_trajectory(stays, kDay, 24);
  const std::vector<RegionId> want = {161, 161, 161, 161, 161, 161, 161, 161, 161,
                                      365, 365, 359, 359, 365, 365, 361, 365, 361,
                                      361, 359, 359, 365, 365, 161};
  CHECK(t.regions == want);
  CHECK(t.weekday == 1);
}

TEST_CASE("coverage gate accepts and rejects with a reason", "[trajectory]") {
  SlottedTrajectory t;
  t.coverage_minutes.assign(24, 60);
  CHECK(validate_trajectory(t, 0.5).accepted);

  t.coverage_minutes.assign(24, 0);
  t.coverage_minutes[0] = 60;
  t.coverage_minutes[1] = 60;  // 2 of 24 hours
  const ValidationOutcome v = validate_trajectory(t, 0.5);
  CHECK_FALSE(v.accepted);
  CHECK(v.reason == "coverage 0.083 < 0.5");

  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    SlottedTrajectory r;
    std::int64_t total = 0;
    for (int l = 0; l < 24; ++l) {
      const int c = static_cast<int>(rng.next_u64() % 61);
      r.coverage_minutes.push_back(c);
      total += c;
    }
    const double threshold = 0.25 + 0.5 * rng.next_double();
    const bool want = static_cast<double>(total) / 1440.0 >= threshold;
    CHECK(validate_trajectory(r, threshold).accepted == want);
  }
}

TEST_CASE("stays load from jsonl and csv alike", "[trajectory]") {
  testutil::TempDir tmp;
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u1", 161, kDay, 30, 540),
      testutil::make_stay("u2", 9, kDay, 600, 660),
  };

  SECTION("jsonl") {
    const auto path = tmp.file("stays.jsonl");
    write_text_file(path, testutil::stays_jsonl(stays));
    const auto got = load_stays(path);
    REQUIRE(got.size() == 2);
    CHECK(got[0].user_pseudo_id == "u1");
    CHECK(got[0].region_id == 161);
    CHECK(got[0].start.local_minutes == stays[0].start.local_minutes);
    CHECK(got[1].end.local_minutes == stays[1].end.local_minutes);
  }

  SECTION("csv") {
    const auto path = tmp.file("stays.csv");
    write_text_file(path,
                    "user_pseudo_id,region_id,start_iso8601,end_iso8601\n"
                    "u1,161,2021-11-01T00:30,2021-11-01T09:00\n"
                    "u2,9,2021-11-01T10:00,2021-11-01T11:00\n");
    const auto got = load_stays(path);
    REQUIRE(got.size() == 2);
    CHECK(got[0].region_id == 161);
    CHECK(got[0].start.local_minutes == stays[0].start.local_minutes);
  }

  SECTION("reversed interval is rejected") {
    const auto path = tmp.file("bad.jsonl");
    write_text_file(path,
                    R"({"user_pseudo_id":"u","region_id":1,)"
                    R"("start_iso8601":"2021-11-01T10:00","end_iso8601":"2021-11-01T09:00"})"
                    "\n");
    CHECK_THROWS_AS(load_stays(path), ParseError);
  }
}

TEST_CASE("user-day grouping spans midnight", "[trajectory]") {
  const std::vector<StayRecord> stays = {
      testutil::make_stay("u1", 1, kDay, 1380, 1500),  // 23:00 to 01:00 next day
      testutil::make_stay("u1", 2, kDay, 60, 120),
      testutil::make_stay("u2", 3, kDay, 60, 120),
  };
  const auto groups = group_user_days(stays);
  CHECK(groups.size() == 3);  // u1 x {Nov 1, Nov 2}, u2 x {Nov 1}
  CHECK(groups.at({"u1", kDay}).size() == 2);
  CHECK(groups.at({"u1", {2021, 11, 2}}).size() == 1);
  CHECK(groups.at({"u2", kDay}).size() == 1);
}
