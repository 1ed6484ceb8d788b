#include <doctest.h>

#include "paris/client.hpp"
#include "support.hpp"

using namespace paris;
using paris::testing::key_in;
using paris::testing::SimClient;
using paris::testing::small_config;

namespace {

struct Fixture {
  Topology topo{small_config(1, 2, 1)};
  TraceRecorder rec{make_trace_header(topo.config())};
  ClientSession c{topo, 0, 0, 0, &rec};
  Key x = key_in(topo, 0);
  Key y = key_in(topo, 1);

  Timestamp start(Timestamp ust, std::uint64_t seq = 1) {
    c.begin_start();
    return c.complete_start(StartTxResp{{0, 0, seq}, ust});
  }
  Timestamp commit(Timestamp ct) {
    c.begin_commit();
    return c.complete_commit(CommitResp{ct});
  }
};

}  // namespace

TEST_SUITE("client") {
  TEST_CASE("start prunes cache entries covered by the new snapshot") {
    Fixture f;
    f.start(5);
    f.c.write({{f.x, "7"}});
    f.commit(7);
    f.start(6, 2);
    f.c.write({{f.y, "12"}});
    f.commit(12);
    CHECK(f.c.write_cache().size() == 2);
    f.start(9, 3);
    CHECK(f.c.ust() == 9);
    CHECK(f.c.write_cache().size() == 1);
    CHECK(f.c.write_cache().count(f.y) == 1);
  }

  TEST_CASE("start with an unchanged ust keeps the cache") {
    Fixture f;
    f.start(5);
    f.c.write({{f.x, "v"}});
    f.commit(8);
    f.start(5, 2);
    CHECK(f.c.write_cache().size() == 1);
  }

  TEST_CASE("first start takes the server snapshot with an empty cache") {
    Fixture f;
    CHECK(f.start(42) == 42);
    CHECK(f.c.write_cache().empty());
    CHECK_THROWS_AS(f.c.begin_start(), UsageError);
  }

  TEST_CASE("reads resolve from write set, then read set, then cache") {
    Fixture f;
    f.start(1);
    f.c.write({{f.x, "mine"}});
    auto step = f.c.begin_read({f.x});
    CHECK_FALSE(step.request.has_value());
    CHECK(step.local.at(f.x) == "mine");
    f.commit(10);

    f.start(2, 2);
    auto cached = f.c.begin_read({f.x});
    CHECK_FALSE(cached.request.has_value());
    CHECK(cached.local.at(f.x) == "mine");

    auto remote = f.c.begin_read({f.y});
    REQUIRE(remote.request.has_value());
    ReadResult got = f.c.complete_read(ReadResp{{Version{f.y, "theirs", {1, {0, 1, 1}, 0}}}});
    CHECK(got.at(f.y) == "theirs");
    auto again = f.c.begin_read({f.y});
    CHECK_FALSE(again.request.has_value());
    CHECK(again.local.at(f.y) == "theirs");
  }

  TEST_CASE("absent keys are reported as absent and remembered") {
    Fixture f;
    f.start(1);
    f.c.begin_read({f.x});
    ReadResult got = f.c.complete_read(ReadResp{});
    CHECK_FALSE(got.at(f.x).has_value());
    CHECK_FALSE(f.c.begin_read({f.x}).request.has_value());
  }

  TEST_CASE("writes upsert the write set") {
    Fixture f;
    f.start(1);
    f.c.write({{f.x, "1"}});
    f.c.write({{f.x, "2"}});
    f.c.write({{f.y, "new"}});
    f.c.write({});
    CHECK(f.c.write_set().at(f.x) == "2");
    CHECK(f.c.write_set().size() == 2);
  }

  TEST_CASE("commit moves the write set into the cache under ct") {
    Fixture f;
    f.start(1);
    f.c.write({{f.x, "old"}});
    f.commit(9);
    f.start(2, 2);
    f.c.write({{f.x, "new"}});
    CHECK(f.commit(15) == 15);
    CHECK(f.c.hwt() == 15);
    CHECK(f.c.write_cache().at(f.x).value == "new");
    CHECK(f.c.write_cache().at(f.x).stamp.ut == 15);
    CHECK_FALSE(f.c.in_transaction());
  }

  TEST_CASE("usage errors") {
    Fixture f;
    CHECK_THROWS_AS(f.c.begin_read({f.x}), UsageError);
    CHECK_THROWS_AS(f.c.write({{f.x, "v"}}), UsageError);
    f.start(1);
    CHECK_THROWS_AS(f.c.begin_commit(), UsageError);
    f.c.finish();
    CHECK_FALSE(f.c.in_transaction());
  }

  TEST_CASE("stale transaction errors close the transaction") {
    Fixture f;
    f.start(1);
    CHECK_THROWS_AS(f.c.fail(ErrorResp{{0, 0, 1}, "expired"}), StaleTransaction);
    CHECK_FALSE(f.c.in_transaction());
    f.start(2, 2);
  }

  TEST_CASE("simulated session: repeatable reads skip the network and hwt increases") {
    ClusterConfig cfg = small_config(2, 2, 2);
    Simulator sim(cfg, 5);
    SimClient cl(sim, 0, 0);
    const Topology& topo = sim.topology();
    Key x = key_in(topo, 0);
    Key y = key_in(topo, 1);

    cl.api.start();
    cl.api.read({x, y});
    std::uint64_t before = cl.requests;
    cl.api.read({x});
    CHECK(cl.requests == before);
    cl.api.write({{x, "1"}});
    Timestamp ct1 = cl.api.commit();

    cl.api.start();
    cl.api.write({{y, "2"}});
    Timestamp ct2 = cl.api.commit();
    CHECK(ct2 > ct1);
  }
}
