#include <doctest.h>

#include "paris/experiment.hpp"
#include "paris/sim.hpp"
#include "support.hpp"

using namespace paris;
using paris::testing::small_config;

TEST_SUITE("net_sim") {
  TEST_CASE("channels are FIFO whatever latencies are drawn") {
    ClusterConfig cfg = small_config(2, 2, 2);
    cfg.latency[0][1] = {1, 5000};
    Simulator sim(cfg, 3);
    Address a = Address::client(0, 0), b = Address::client(1, 0);
    std::vector<Timestamp> got;
    sim.attach_client(a, [](const Address&, const Message&) {});
    sim.attach_client(b, [&](const Address&, const Message& m) { got.push_back(std::get<Heartbeat>(m).t); });
    for (Timestamp i = 0; i < 500; ++i) {
      sim.send(a, b, Heartbeat{i});
      if (i % 7 == 0) sim.run_until(sim.now() + 3);
    }
    sim.run_until(sim.now() + 10000);
    REQUIRE(got.size() == 500);
    for (Timestamp i = 0; i < 500; ++i) CHECK(got[i] == i);
  }

  TEST_CASE("zero latency delivers at now after earlier events; self-sends allowed") {
    ClusterConfig cfg = small_config(1, 1, 1);
    cfg.latency[0][0] = {0, 0};
    Simulator sim(cfg, 1);
    Address a = Address::client(0, 0);
    std::vector<std::string> order;
    sim.attach_client(a, [&](const Address&, const Message&) { order.push_back("msg"); });
    sim.schedule(0, [&] { order.push_back("first"); });
    sim.send(a, a, Heartbeat{1});
    sim.run_until(0);
    CHECK(order == std::vector<std::string>{"first", "msg"});
  }

  TEST_CASE("run_until(0) processes nothing but time-zero events") {
    Simulator sim(small_config(2, 2, 2), 1);
    sim.run_until(0);
    CHECK(sim.stats().events == 0);
    CHECK(sim.recorder().trace().events.empty());
  }

  TEST_CASE("clocks: zero skew equals now, reads are non-decreasing") {
    Simulator flat(small_config(2, 2, 2), 1);
    flat.run_until(1234);
    CHECK(flat.physical_clock(0, 0) == 1234);

    ClusterConfig cfg = small_config(2, 2, 2);
    cfg.skew_bound_us = 300;
    cfg.drift_ppm = 200;
    Simulator sim(cfg, 9);
    Timestamp last = 0;
    for (int i = 0; i < 100; ++i) {
      sim.run_until(sim.now() + 97);
      Timestamp t = sim.physical_clock(1, 1);
      CHECK(t >= last);
      CHECK(static_cast<std::int64_t>(t) - static_cast<std::int64_t>(sim.now()) <= 300 + 1);
      last = t;
    }
  }

  TEST_CASE("idle cluster exchanges only stabilization traffic") {
    Simulator sim(small_config(3, 6, 2), 4);
    sim.run_until(200000);
    for (const auto& [name, count] : sim.stats().messages_by_type) {
      bool background = name == "Heartbeat" || name == "GsvUp" || name == "GsvDown" || name == "RootExchange" ||
                        name == "SOldUp" || name == "SOldDown";
      CHECK_MESSAGE(background, name);
    }
    CHECK(sim.stats().messages_by_type.at("Heartbeat") > 0);
    for (Server* s : sim.servers()) CHECK(s->ust() > 0);
    CHECK(sim.stats().stability_violations == 0);
  }

  TEST_CASE("same seed and config give byte-identical traces") {
    ExperimentConfig cfg;
    cfg.cluster = desk_config();
    cfg.workload.duration_us = 300000;
    cfg.seed = 77;
    ExperimentResult a = run_experiment(cfg);
    ExperimentResult b = run_experiment(cfg);
    CHECK(serialize_trace(a.trace) == serialize_trace(b.trace));
    CHECK(a.digest == b.digest);
    cfg.seed = 78;
    CHECK(run_experiment(cfg).digest != a.digest);
  }

  TEST_CASE("unknown endpoints are rejected") {
    Simulator sim(small_config(2, 2, 2), 1);
    CHECK_THROWS_AS(sim.send(Address::client(0, 0), Address::client(0, 9), Heartbeat{1}), ConfigError);
    CHECK_THROWS_AS(sim.send(Address::client(0, 0), Address::server(0, 7), Heartbeat{1}), ConfigError);
  }

  TEST_CASE("severing a DC freezes ust everywhere while servers keep running") {
    ClusterConfig cfg = small_config(3, 3, 2);
    Simulator sim(cfg, 2);
    sim.sever_dc(1, 100000);
    sim.run_until(100000 + 2 * cfg.delta_ust_us);
    std::vector<Timestamp> frozen;
    for (Server* s : sim.servers()) frozen.push_back(s->ust());
    sim.run_until(400000);
    std::size_t i = 0;
    for (Server* s : sim.servers()) CHECK(s->ust() == frozen[i++]);
    CHECK(sim.stats().held_messages > 0);
    CHECK(sim.stats().stability_violations == 0);
  }
}
