#include <doctest.h>

#include <algorithm>
#include <random>

#include "paris/storage.hpp"
#include "paris/topology.hpp"

using namespace paris;

namespace {

std::vector<Timestamp> uts(const Storage& s, const Key& k) {
  std::vector<Timestamp> out;
  if (const auto* chain = s.chain(k)) {
    for (const Version& v : *chain) out.push_back(v.ut());
  }
  return out;
}

// Single-partition store so every key is owned.
Storage one() { return Storage(0, 1); }

}  // namespace

TEST_SUITE("storage") {
  TEST_CASE("chains are kept newest first and re-inserts are no-ops") {
    Storage s = one();
    s.put_version("x", "a", 5, {0, 0, 1}, 0);
    CHECK(uts(s, "x") == std::vector<Timestamp>{5});
    s.put_version("x", "b", 3, {0, 0, 2}, 0);
    CHECK(uts(s, "x") == std::vector<Timestamp>{5, 3});
    s.put_version("x", "a", 5, {0, 0, 1}, 0);
    CHECK(uts(s, "x") == std::vector<Timestamp>{5, 3});
    CHECK(s.version_count() == 2);
  }

  TEST_CASE("read_visible returns the freshest version within the snapshot") {
    Storage s = one();
    s.put_version("x", "three", 3, {0, 0, 1}, 0);
    s.put_version("x", "seven", 7, {0, 0, 2}, 0);
    CHECK(s.read_visible("x", 5)->value == "three");
    CHECK(s.read_visible("x", 7)->value == "seven");
    CHECK_FALSE(s.read_visible("x", 2).has_value());
    CHECK_FALSE(s.read_visible("never", 100).has_value());
  }

  TEST_CASE("equal timestamps resolve by tx id then source DC") {
    Storage s = one();
    s.put_version("x", "lo", 4, {0, 0, 1}, 1);
    s.put_version("x", "hi", 4, {0, 0, 2}, 0);
    s.put_version("x", "mid", 4, {0, 0, 1}, 2);
    CHECK(s.read_visible("x", 4)->value == "hi");
  }

  TEST_CASE("gc keeps the newest version at or below the floor") {
    Storage s = one();
    for (Timestamp t : {2, 5, 9}) s.put_version("a", "v", t, {0, 0, t}, 0);
    CHECK(s.collect_garbage(6) == 1);
    CHECK(uts(s, "a") == std::vector<Timestamp>{9, 5});

    Storage b = one();
    b.put_version("b", "v", 2, {0, 0, 1}, 0);
    CHECK(b.collect_garbage(6) == 0);
    CHECK(uts(b, "b") == std::vector<Timestamp>{2});

    Storage c = one();
    c.put_version("c", "v", 8, {0, 0, 1}, 0);
    c.put_version("c", "v", 9, {0, 0, 2}, 0);
    CHECK(c.collect_garbage(6) == 0);
    CHECK(uts(c, "c") == std::vector<Timestamp>{9, 8});
  }

  TEST_CASE("foreign keys are a routing fault") {
    Storage s(1, 4);
    Key foreign;
    for (int i = 0;; ++i) {
      foreign = "k" + std::to_string(i);
      if (partition_of(foreign, 4) != 1) break;
    }
    CHECK_THROWS_AS(s.put_version(foreign, "v", 1, {0, 0, 1}, 0), RoutingFault);
  }

  TEST_CASE("property: read_visible matches a linear scan and survives gc") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 300; ++round) {
      Storage s = one();
      std::vector<Version> all;
      int n = 1 + static_cast<int>(rng() % 100);
      for (int i = 0; i < n; ++i) {
        Version v{"k", std::to_string(i), {rng() % 50, {static_cast<DcId>(rng() % 2), 0, rng() % 4}, static_cast<DcId>(rng() % 2)}};
        s.put_version(v.key, v.value, v.stamp.ut, v.stamp.tx, v.stamp.sr);
        if (std::none_of(all.begin(), all.end(), [&](const Version& o) { return o.stamp == v.stamp; })) {
          all.push_back(v);
        }
      }
      auto scan = [&](Timestamp snap) {
        std::optional<Version> best;
        for (const Version& v : all) {
          if (v.ut() <= snap && (!best || version_cmp(best->stamp, v.stamp) == std::strong_ordering::less)) best = v;
        }
        return best;
      };
      for (Timestamp snap = 0; snap <= 50; ++snap) REQUIRE(s.read_visible("k", snap) == scan(snap));

      Timestamp floor = rng() % 55;
      s.collect_garbage(floor);
      for (Timestamp snap = floor; snap <= 50; ++snap) REQUIRE(s.read_visible("k", snap) == scan(snap));
    }
  }

  TEST_CASE("property: inserting a version never changes reads below its timestamp") {
    std::mt19937_64 rng(99);
    Storage s = one();
    for (int i = 0; i < 500; ++i) {
      Timestamp ut = rng() % 200;
      std::vector<std::optional<Version>> before;
      for (Timestamp snap = 0; snap < ut; ++snap) before.push_back(s.read_visible("k", snap));
      s.put_version("k", "v", ut, {0, 0, static_cast<std::uint64_t>(i)}, 0);
      for (Timestamp snap = 0; snap < ut; ++snap) REQUIRE(s.read_visible("k", snap) == before[snap]);
    }
  }
}
