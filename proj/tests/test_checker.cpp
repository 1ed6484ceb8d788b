#include <doctest.h>

#include <filesystem>
#include <random>

#include "history_gen.hpp"
#include "paris/checker.hpp"
#include "paris/experiment.hpp"

using namespace paris;

namespace {

Trace fixture(const std::string& name) {
  return load_trace(std::string(PARIS_FIXTURE_DIR) + "/" + name + ".trace");
}

const CheckResult& result(const CheckReport& r, const std::string& name) {
  for (const CheckResult& c : r.results) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no check named " + name);
}

}  // namespace

TEST_SUITE("checker") {
  TEST_CASE("empty trace passes vacuously") {
    Trace t;
    CheckReport r = check_all(t, kDefaultOracleBound);
    CHECK(r.pass());
    REQUIRE(r.oracle.has_value());
    CHECK(r.oracle->pass);
  }

  TEST_CASE("lemma1 fixture names the offending transaction") {
    CheckResult r = check_lemma1(fixture("lemma1"));
    CHECK_FALSE(r.pass);
    REQUIRE_FALSE(r.examples.empty());
    CHECK(r.examples[0].find("0.0.1") != std::string::npos);
  }

  TEST_CASE("each violation fixture is rejected by its check and by the oracle") {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"lemma1", "lemma1_snapshot_below_commit"},
        {"update_order", "update_time_order"},
        {"causal_closure", "causal_snapshots"},
        {"atomicity", "atomicity"},
        {"session_read_your_writes", "sessions"},
        {"snapshot_bound", "causal_snapshots"},
    };
    for (const auto& [file, check] : cases) {
      CAPTURE(file);
      Trace t = fixture(file);
      CheckReport r = check_all(t, kDefaultOracleBound);
      CHECK_FALSE(result(r, check).pass);
      CHECK_FALSE(brute_force_oracle(t).pass);
    }
  }

  TEST_CASE("channel fixture: repeated heartbeat and ust above the floor") {
    CheckResult r = check_channels(fixture("channels"));
    CHECK(r.violations == 2);
  }

  TEST_CASE("valid hand-written history passes everything") {
    CheckReport r = check_all(fixture("valid_small"), kDefaultOracleBound);
    CHECK(r.pass());
    CHECK(r.oracle.has_value());
  }

  TEST_CASE("single key, single writer") {
    Trace t;
    t.header = TraceHeader{Protocol::paris, 1, 1, {{0}}};
    auto ev = [&](TraceKind k, SessionId s, TxId tx, Timestamp snap) {
      TraceEvent e;
      e.seq = t.events.size();
      e.kind = k;
      e.session = s;
      e.tx = tx;
      e.snapshot = snap;
      return e;
    };
    TraceEvent start = ev(TraceKind::start_tx, 0, {0, 0, 1}, 0);
    TraceEvent done = ev(TraceKind::commit_done, 0, {0, 0, 1}, 0);
    done.ct = 5;
    done.writes = {{"x", 0}};
    t.events = {start, done};
    for (Timestamp snap : {4, 5, 6}) {
      Trace u = t;
      u.events.push_back(ev(TraceKind::start_tx, 1, {0, 0, 2}, snap));
      TraceEvent read = ev(TraceKind::read_result, 1, {0, 0, 2}, snap);
      read.key = "x";
      if (snap >= 5) read.stamp = VersionStamp{5, {0, 0, 1}, 0};
      u.events.push_back(read);
      u.events.push_back(ev(TraceKind::finish_tx, 1, {0, 0, 2}, snap));
      for (std::size_t i = 0; i < u.events.size(); ++i) u.events[i].seq = i;
      CHECK(check_all(u, kDefaultOracleBound).pass());
    }
  }

  TEST_CASE("oracle refuses histories above its bound") {
    Trace t = fixture("valid_small");
    CHECK_THROWS_AS(brute_force_oracle(t, 1), OracleBoundExceeded);
  }

  TEST_CASE("single-partition writes pass atomicity trivially") {
    ExperimentConfig cfg;
    cfg.cluster = desk_config();
    cfg.workload.partitions_per_tx = 1;
    cfg.workload.duration_us = 300000;
    CHECK(check_atomicity(run_experiment(cfg).trace).pass);
  }

  TEST_CASE("checkers are deterministic functions of the trace") {
    Trace t = fixture("causal_closure");
    CHECK(check_all(t, 12).to_json() == check_all(t, 12).to_json());
  }

  TEST_CASE("property: oracle agrees with the scalable checks on small histories") {
    std::mt19937_64 rng(31337);
    int accepted = 0, rejected = 0;
    for (int i = 0; i < 60; ++i) {
      Trace t = paris::testing::tiny_history(rng, kDefaultOracleBound);
      if (rng() % 2 == 0) paris::testing::mutate_history(t, rng);
      CheckReport r = check_all(t);
      bool oracle = brute_force_oracle(t).pass;
      CAPTURE(serialize_trace(t));
      REQUIRE(oracle == r.snapshot_pass());
      (oracle ? accepted : rejected)++;
    }
    CHECK(accepted > 0);
    CHECK(rejected > 0);
  }
}
