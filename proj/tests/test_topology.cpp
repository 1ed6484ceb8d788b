#include <doctest.h>

#include <set>

#include "paris/topology.hpp"
#include "support.hpp"

using namespace paris;
using paris::testing::small_config;

TEST_SUITE("topology") {
  TEST_CASE("partition_of is deterministic and in range") {
    CHECK(partition_of("anything", 1) == 0);
    CHECK(partition_of("user7", 45) == partition_of("user7", 45));
    for (int i = 0; i < 1000; ++i) CHECK(partition_of("k" + std::to_string(i), 6) < 6);
  }

  TEST_CASE("golden: user42 over 45 partitions") {
    // 64-bit FNV-1a of "user42" is 0xf7f68baa7501e4c0.
    CHECK(fnv1a64("user42") == 0xf7f68baa7501e4c0ULL);
    CHECK(partition_of("user42", 45) == 20);
  }

  TEST_CASE("replicas and replica indexes follow the placement table") {
    ClusterConfig c = small_config(4, 4, 2);
    c.placement = {{0, 1}, {1, 2}, {2, 3}, {1, 3}};
    Topology t(c);
    CHECK(t.replicas(3) == std::vector<DcId>{1, 3});
    CHECK(t.replica_index_for_dc(3, 3) == 1);
    CHECK(t.replica_index_for_dc(3, 1) == 0);
    CHECK_THROWS_AS(t.replica_index_for_dc(3, 0), RoutingFault);
    CHECK_THROWS_AS(t.replicas(4), RoutingFault);

    Topology full(small_config(3, 2, 3));
    CHECK(full.replicas(1).size() == 3);
  }

  TEST_CASE("preferred replica: local first, then a fixed round-robin pick") {
    ClusterConfig c = small_config(4, 4, 2);
    c.placement = {{1, 3}, {1, 2}, {2, 3}, {0, 1}};
    Topology t(c);
    CHECK(t.target_dc_for_partition(3, 0) == 0);
    CHECK(t.target_dc_for_partition(0, 0) == 1);
    CHECK(t.target_dc_for_partition(0, 0, 1) == t.target_dc_for_partition(0, 0, 2));
  }

  TEST_CASE("aggregation trees") {
    TreeLinks three = build_tree({0, 1, 2}, 2);
    CHECK(three.root == 0);
    CHECK(three.children[0] == std::vector<PartitionId>{1, 2});
    CHECK(three.depth == 1);

    TreeLinks one = build_tree({5}, 2);
    CHECK(one.root == 5);
    CHECK(one.parent.empty());

    TreeLinks seven = build_tree({0, 1, 2, 3, 4, 5, 6}, 2);
    CHECK(seven.depth == 2);
    for (PartitionId p : {0u, 1u, 2u}) CHECK(seven.children[p].size() == 2);
  }

  TEST_CASE("config validation rejects bad layouts") {
    ClusterConfig c = small_config(3, 6, 2);
    c.replication = 4;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config(3, 6, 2);
    c.placement[0] = {1, 1};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config(3, 6, 2);
    c.delta_gsv_us = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(parse_cluster_config("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_cluster_config("{\"dims\": {\"dcs\": \"three\"}}"), ConfigError);
  }

  TEST_CASE("config survives a JSON round trip") {
    ClusterConfig c = desk_config();
    c.protocol = Protocol::bpr;
    c.skew_bound_us = 123;
    ClusterConfig back = parse_cluster_config(dump_cluster_config(c));
    CHECK(back.protocol == Protocol::bpr);
    CHECK(back.placement == c.placement);
    CHECK(back.skew_bound_us == 123);
    CHECK(back.latency[0][1].max_us == c.latency[0][1].max_us);
  }

  TEST_CASE("property: every partition has R distinct replicas and routing stays within them") {
    for (std::uint32_t m = 1; m <= 5; ++m) {
      for (std::uint32_t r = 1; r <= m; ++r) {
        Topology t(small_config(m, 9, r));
        std::set<PartitionId> seen;
        for (PartitionId n = 0; n < 9; ++n) {
          const auto& row = t.replicas(n);
          REQUIRE(std::set<DcId>(row.begin(), row.end()).size() == r);
          for (DcId d = 0; d < m; ++d) {
            DcId target = t.target_dc_for_partition(n, d);
            REQUIRE(t.hosts(target, n));
          }
        }
        for (DcId d : t.active_dcs()) {
          const TreeLinks& tree = t.tree_links(d);
          // Spanning and acyclic: every non-root member has exactly one parent
          // and walking up always reaches the root.
          REQUIRE(tree.parent.size() + 1 == t.partitions_in(d).size());
          for (PartitionId p : t.partitions_in(d)) {
            PartitionId cur = p;
            for (std::size_t steps = 0; cur != tree.root; ++steps) {
              REQUIRE(steps < 10);
              cur = tree.parent.at(cur);
            }
          }
        }
      }
    }
  }
}
