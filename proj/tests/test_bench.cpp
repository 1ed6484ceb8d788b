#include <doctest.h>

#include <map>
#include <random>

#include "paris/experiment.hpp"
#include "paris/visibility.hpp"
#include "paris/workload.hpp"
#include "support.hpp"

using namespace paris;
using paris::testing::key_in;
using paris::testing::SimClient;
using paris::testing::small_config;

namespace {

// Commits one write to partition 0 from DC 0 after warm-up and returns the
// visibility samples it produced.
VisibilityReport single_update(Timestamp inter_us) {
  ClusterConfig cfg = small_config(2, 1, 2);
  cfg.latency = uniform_latency_matrix(2, 0, inter_us);
  Simulator sim(cfg, 1);
  SimClient cl(sim, 0, 0);
  sim.run_until(100000);
  cl.api.start();
  cl.api.write({{key_in(sim.topology(), 0), "v"}});
  cl.api.commit();
  sim.run_until(sim.now() + 200000);
  return visibility_latency(sim.recorder().trace());
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("95:5 mix yields 19 reads then 1 write") {
    Topology topo(desk_config());
    WorkloadSpec spec;
    KeyUniverse keys(topo.partitions(), spec.keys_per_partition);
    ZipfianGenerator zipf(spec.keys_per_partition, spec.zipf_theta);
    std::mt19937_64 rng(1);
    TxPlan p = generate_transaction(spec, topo, keys, zipf, 0, rng);
    CHECK(p.reads.size() == 19);
    CHECK(p.writes.size() == 1);
  }

  TEST_CASE("fully local locality keeps every partition in the client's DC") {
    Topology topo(desk_config());
    WorkloadSpec spec;
    spec.local_pct = 100;
    KeyUniverse keys(topo.partitions(), spec.keys_per_partition);
    ZipfianGenerator zipf(spec.keys_per_partition, spec.zipf_theta);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
      DcId dc = static_cast<DcId>(i % 3);
      TxPlan p = generate_transaction(spec, topo, keys, zipf, dc, rng);
      for (PartitionId n : p.partitions) REQUIRE(topo.hosts(dc, n));
      for (const Key& k : p.reads) REQUIRE(topo.hosts(dc, topo.partition_of(k)));
    }
  }

  TEST_CASE("multi-DC transactions touch at least one remote partition") {
    Topology topo(desk_config());
    WorkloadSpec spec;
    spec.local_pct = 0;
    KeyUniverse keys(topo.partitions(), spec.keys_per_partition);
    ZipfianGenerator zipf(spec.keys_per_partition, spec.zipf_theta);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; ++i) {
      TxPlan p = generate_transaction(spec, topo, keys, zipf, 1, rng);
      bool remote = false;
      for (PartitionId n : p.partitions) remote |= !topo.hosts(1, n);
      REQUIRE(remote);
      REQUIRE(p.partitions.size() == spec.partitions_per_tx);
    }
  }

  TEST_CASE("same seed gives the same operation stream") {
    Topology topo(desk_config());
    WorkloadSpec spec;
    spec.reads_per_tx = spec.writes_per_tx = 10;
    KeyUniverse keys(topo.partitions(), spec.keys_per_partition);
    ZipfianGenerator zipf(spec.keys_per_partition, spec.zipf_theta);
    std::mt19937_64 a(session_seed(9, 4)), b(session_seed(9, 4));
    for (int i = 0; i < 100; ++i) {
      TxPlan x = generate_transaction(spec, topo, keys, zipf, 2, a);
      TxPlan y = generate_transaction(spec, topo, keys, zipf, 2, b);
      REQUIRE(x.reads == y.reads);
      REQUIRE(x.writes == y.writes);
    }
    CHECK(session_seed(9, 4) != session_seed(9, 5));
  }

  TEST_CASE("key universe buckets keys by partition") {
    KeyUniverse u(6, 50);
    for (PartitionId n = 0; n < 6; ++n) {
      REQUIRE(u.keys(n).size() == 50);
      for (const Key& k : u.keys(n)) REQUIRE(partition_of(k, 6) == n);
    }
  }

  TEST_CASE("zipfian ranks stay in range and favour rank 0") {
    ZipfianGenerator z(100, 0.99);
    std::mt19937_64 rng(4);
    std::map<std::uint64_t, int> hist;
    for (int i = 0; i < 100000; ++i) {
      std::uint64_t r = z.next(rng);
      REQUIRE(r < 100);
      ++hist[r];
    }
    CHECK(hist[0] > hist[1]);
    CHECK(hist[1] > hist[50]);
    // P(rank 0) = 1 / H(100, 0.99), about 0.19.
    CHECK(hist[0] > 17000);
    CHECK(hist[0] < 21000);
  }

  TEST_CASE("zero-duration run: empty metrics, valid trace header") {
    ExperimentConfig cfg;
    cfg.cluster = desk_config();
    cfg.workload.duration_us = 0;
    cfg.workload.drain_us = 0;
    ExperimentResult r = run_experiment(cfg);
    CHECK(r.metrics.transactions == 0);
    CHECK(r.trace.header == make_trace_header(cfg.cluster));
    std::string text = serialize_trace(r.trace);
    CHECK(parse_trace_text(text).header == r.trace.header);
  }

  TEST_CASE("workload section of a config file") {
    WorkloadSpec w = parse_workload_spec(R"({"workload": {"reads_per_tx": 10, "writes_per_tx": 10, "local_pct": 50}})");
    CHECK(w.reads_per_tx == 10);
    CHECK(w.writes_per_tx == 10);
    CHECK(w.local_pct == 50);
    CHECK(w.zipf_theta == doctest::Approx(0.99));
    CHECK_THROWS_AS(parse_workload_spec(R"({"workload": {"local_pct": 150}})"), ConfigError);
  }

  TEST_CASE("metrics conservation: issued transactions all complete on a lossless network") {
    ExperimentConfig cfg;
    cfg.cluster = desk_config();
    cfg.workload.duration_us = 500000;
    ExperimentResult r = run_experiment(cfg);
    CHECK(r.metrics.transactions > 0);
    CHECK(r.metrics.unfinished == 0);
    CHECK(r.metrics.tx_latency.size() == r.metrics.transactions);
  }

  TEST_CASE("single update visibility lies in [d, 2d + gossip + apply]") {
    const Timestamp d = 20000;
    VisibilityReport rep = single_update(d);
    REQUIRE(rep.samples.size() == 1);
    CHECK(rep.unresolved == 0);
    // The stable time is a global minimum: the remote DC must hear the update
    // and the origin must hear the remote DC's clock pass ct, so two one-way
    // delays, each followed by a gossip and an aggregation round.
    CHECK(rep.samples[0].latency >= d);
    CHECK(rep.samples[0].latency <= 2 * d + 2 * (5000 + 5000) + 1000);
  }

  TEST_CASE("zero latency and skew: visible within two gossip periods plus one apply period") {
    VisibilityReport rep = single_update(0);
    REQUIRE(rep.samples.size() == 1);
    CHECK(rep.samples[0].latency <= 2 * 5000 + 1000);
  }

  TEST_CASE("paired runs: BPR makes updates visible no later than PaRiS") {
    ExperimentConfig cfg;
    cfg.cluster = desk_config();
    cfg.workload.duration_us = 1000000;
    cfg.seed = 12;
    VisibilityReport paris_v = visibility_latency(run_experiment(cfg).trace);
    cfg.cluster.protocol = Protocol::bpr;
    VisibilityReport bpr_v = visibility_latency(run_experiment(cfg).trace);
    std::map<std::tuple<SessionId, std::uint64_t, Key, DcId>, Timestamp> bpr;
    for (const auto& s : bpr_v.samples) bpr[s.pair_key()] = s.latency;
    std::size_t paired = 0, ok = 0;
    for (const auto& s : paris_v.samples) {
      auto it = bpr.find(s.pair_key());
      if (it == bpr.end()) continue;
      ++paired;
      if (s.latency >= it->second) ++ok;
    }
    REQUIRE(paired > 50);
    CHECK(ok >= paired * 99 / 100);
  }

  TEST_CASE("latency summary") {
    LatencySummary s = summarize({5, 1, 3, 2, 4});
    CHECK(s.count == 5);
    CHECK(s.mean == doctest::Approx(3.0));
    CHECK(s.max == 5);
    CHECK(s.p50 == 3);
    CHECK(summarize({}).count == 0);
  }
}
