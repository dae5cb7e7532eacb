#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "trajsem/profile.hpp"
#include "trajsem/rng.hpp"

using namespace trajsem;

namespace {

std::map<RegionId, PoiHistogram> histograms_from_counts(
    const std::vector<std::vector<std::int64_t>>& counts) {
  std::map<RegionId, PoiHistogram> out;
  for (size_t r = 0; r < counts.size(); ++r) {
    PoiHistogram h;
    h.counts = counts[r];
    for (std::int64_t c : counts[r]) h.total += c;
    out[static_cast<RegionId>(r)] = std::move(h);
  }
  return out;
}

}  // namespace

TEST_CASE("document frequency counts regions per category", "[profile]") {
  // 5 regions x 4 categories.
  const auto hist = histograms_from_counts({
      {3, 0, 1, 0},
      {1, 0, 2, 0},
      {2, 0, 0, 0},
      {5, 0, 9, 0},
      {4, 0, 1, 0},
  });
  const std::vector<std::int64_t> q = compute_document_frequency(hist, 5);
  REQUIRE(q.size() == 4);
  CHECK(q[0] == 5);  // everywhere
  CHECK(q[1] == 0);  // nowhere
  CHECK(q[2] == 4);
  CHECK(q[3] == 0);

  // Brute-force scan oracle over the same fixture.
  for (size_t i = 0; i < 4; ++i) {
    std::int64_t want = 0;
    for (const auto& [id, h] : hist) {
      if (h.counts[i] > 0) ++want;
    }
    CHECK(q[i] == want);
  }
}

TEST_CASE("tfidf evaluates the weighting formula", "[profile]") {
  SECTION("worked example: tf=5/10, idf=ln(100/10)") {
    PoiHistogram h;
    h.counts = {5, 5};
    h.total = 10;
    const RegionProfile p = compute_tfidf(1, h, {10, 100}, 100);
    REQUIRE(p.weights.size() == 2);
    CHECK_THAT(p.weights[0], Catch::Matchers::WithinAbs(0.5 * std::log(10.0), 1e-12));
    CHECK_THAT(p.weights[0], Catch::Matchers::WithinAbs(1.151293, 5e-7));
  }
  SECTION("category present everywhere weighs zero") {
    PoiHistogram h;
    h.counts = {7, 3};
    h.total = 10;
    const RegionProfile p = compute_tfidf(1, h, {4, 4}, 4);
    CHECK(p.weights[0] == 0.0);
    CHECK(p.weights[1] == 0.0);
  }
  SECTION("absent category weighs zero even when q is zero") {
    PoiHistogram h;
    h.counts = {0, 10};
    h.total = 10;
    const RegionProfile p = compute_tfidf(1, h, {0, 2}, 4);
    CHECK(p.weights[0] == 0.0);
    CHECK(p.weights[1] > 0.0);
  }
  SECTION("empty region is rejected") {
    PoiHistogram h;
    h.counts = {0, 0};
    h.total = 0;
    CHECK_THROWS_AS(compute_tfidf(1, h, {1, 1}, 4), EmptyRegion);
  }
}

TEST_CASE("tfidf is invariant to uniform count scaling", "[profile]") {
  PoiHistogram h;
  h.counts = {2, 0, 5, 1};
  h.total = 8;
  PoiHistogram h3;
  for (std::int64_t c : h.counts) h3.counts.push_back(c * 3);
  h3.total = h.total * 3;
  const std::vector<std::int64_t> q = {2, 1, 3, 4};
  const RegionProfile a = compute_tfidf(9, h, q, 6);
  const RegionProfile b = compute_tfidf(9, h3, q, 6);
  REQUIRE(a.weights.size() == b.weights.size());
  for (size_t i = 0; i < a.weights.size(); ++i) {
    CHECK_THAT(a.weights[i], Catch::Matchers::WithinAbs(b.weights[i], 1e-12));
  }
}

TEST_CASE("term frequencies of a non-empty region sum to one", "[profile]") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    PoiHistogram h;
    for (int i = 0; i < 6; ++i) {
      h.counts.push_back(static_cast<std::int64_t>(rng.next_u64() % 7));
    }
    h.total = 0;
    for (std::int64_t c : h.counts) h.total += c;
    if (h.total == 0) continue;
    double sum = 0.0;
    for (std::int64_t c : h.counts) sum += static_cast<double>(c) / static_cast<double>(h.total);
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("tfidf matches a brute-force oracle on random instances", "[profile]") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    // 4 regions, 6 categories, counts in [0, 5].
    std::vector<std::vector<std::int64_t>> counts(4, std::vector<std::int64_t>(6, 0));
    for (auto& row : counts) {
      for (auto& c : row) c = static_cast<std::int64_t>(rng.next_u64() % 6);
    }
    const auto hist = histograms_from_counts(counts);
    const auto q = compute_document_frequency(hist, 4);
    for (const auto& [id, h] : hist) {
      if (h.total == 0) {
        CHECK_THROWS_AS(compute_tfidf(id, h, q, 4), EmptyRegion);
        continue;
      }
      const RegionProfile p = compute_tfidf(id, h, q, 4);
      const auto want = testutil::oracle_tfidf(counts, static_cast<size_t>(id));
      REQUIRE(p.weights.size() == want.size());
      for (size_t i = 0; i < want.size(); ++i) {
        CHECK_THAT(p.weights[i], Catch::Matchers::WithinAbs(want[i], 1e-12));
        CHECK(p.weights[i] >= 0.0);
        if (h.counts[i] == 0) CHECK(p.weights[i] == 0.0);
      }
    }
  }
}

TEST_CASE("profiles serialize to json lines omitting zero weights", "[profile]") {
  RegionProfile p;
  p.region_id = 42;
  p.weights = {0.0, 1.25, 0.0, 0.5};
  const json j = profile_to_json(p);
  CHECK(j["region_id"] == 42);
  REQUIRE(j["weights"].size() == 2);
  CHECK(j["weights"][0]["category_id"] == 1);
  CHECK(j["weights"][0]["w"] == 1.25);
  CHECK(j["weights"][1]["category_id"] == 3);

  const RegionProfile back = profile_from_json(j, 4);
  CHECK(back.region_id == 42);
  CHECK(back.weights == p.weights);

  // Out-of-range category ids are rejected on load.
  CHECK_THROWS_AS(profile_from_json(j, 2), ParseError);
}

TEST_CASE("grouping splits weights by taxonomy group", "[profile]") {
  testutil::TempDir tmp;
  const auto tpath = tmp.file("taxonomy.json");
  write_text_file(tpath, testutil::small_taxonomy_json().dump(2));
  const CategoryTaxonomy tax = load_taxonomy(tpath);

  RegionProfile p;
  p.region_id = 1;
  p.weights = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const GroupedWeights g = group_weights(p, tax);
  CHECK(g.region_id == 1);

  size_t total_entries = 0;
  for (FunctionGroup grp : all_groups()) {
    const auto& entries = g.group(grp);
    CHECK(entries.size() == 2);
    total_entries += entries.size();
    for (const auto& e : entries) {
      CHECK(tax.group_of(e.category_id) == grp);
      CHECK(e.weight == p.weights[static_cast<size_t>(e.category_id)]);
    }
  }
  CHECK(total_entries == static_cast<size_t>(tax.size()));
}
