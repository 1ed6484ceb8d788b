#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paris/types.hpp"

namespace paris {

enum class Protocol { paris, bpr };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& text);

/// Uniform one-way latency range, in microseconds.
struct LatencyRange {
  Timestamp min_us = 0;
  Timestamp max_us = 0;
};

struct TcpSettings {
  std::string host = "127.0.0.1";
  // 0 selects ephemeral ports.
  std::uint16_t base_port = 0;
};

/// Static cluster layout and timing parameters.
struct ClusterConfig {
  Protocol protocol = Protocol::paris;
  std::uint32_t dcs = 3;          // M
  std::uint32_t partitions = 6;   // N
  std::uint32_t replication = 2;  // R
  // placement[n] lists the R distinct DCs hosting partition n.
  std::vector<std::vector<DcId>> placement;
  std::uint32_t tree_fanout = 2;

  Timestamp delta_replicate_us = 1000;  // Δ_R
  Timestamp delta_gsv_us = 5000;        // Δ_G
  Timestamp delta_ust_us = 5000;        // Δ_U
  // Read-only coordinator contexts are dropped after this much idle time.
  Timestamp tx_idle_timeout_us = 100 * 1000;

  // latency[a][b] for messages from DC a to DC b.
  std::vector<std::vector<LatencyRange>> latency;
  // Constant per-server clock offset drawn uniformly from [-bound, +bound].
  Timestamp skew_bound_us = 500;
  // Optional rate error in parts per million, drawn from [-drift, +drift].
  double drift_ppm = 0.0;

  TcpSettings tcp;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Round-robin placement: partition n lives in DCs n, n+1, ..., n+R-1 (mod M).
std::vector<std::vector<DcId>> ring_placement(std::uint32_t dcs, std::uint32_t partitions,
                                              std::uint32_t replication);

/// Latency matrix approximating a multi-region deployment (one-way delays
/// between North Virginia, Oregon, Ireland, Mumbai and Sydney, then a flat
/// default for further sites), with sub-millisecond intra-DC delays.
std::vector<std::vector<LatencyRange>> geo_latency_matrix(std::uint32_t dcs);

/// Constant latency everywhere; handy for deterministic scenario tests.
std::vector<std::vector<LatencyRange>> uniform_latency_matrix(std::uint32_t dcs, Timestamp intra_us,
                                                              Timestamp inter_us);

/// Desk-scale layout: 3 DCs, 6 partitions, R = 2.
ClusterConfig desk_config();
/// Evaluation-scale layout: 5 DCs, 45 partitions, R = 2.
ClusterConfig large_scale_config();

ClusterConfig load_cluster_config(const std::string& path);
ClusterConfig parse_cluster_config(std::string_view json_text);
std::string dump_cluster_config(const ClusterConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic key-to-partition map: 64-bit FNV-1a modulo N.
PartitionId partition_of(std::string_view key, std::uint32_t partitions);

/// Aggregation tree over the servers (partitions) of one DC.
struct TreeLinks {
  PartitionId root = 0;
  std::map<PartitionId, PartitionId> parent;
  std::map<PartitionId, std::vector<PartitionId>> children;
  std::uint32_t depth = 0;
};

class Topology {
 public:
  explicit Topology(ClusterConfig config);

  const ClusterConfig& config() const { return config_; }
  std::uint32_t dcs() const { return config_.dcs; }
  std::uint32_t partitions() const { return config_.partitions; }
  std::uint32_t replication() const { return config_.replication; }

  PartitionId partition_of(std::string_view key) const;

  const std::vector<DcId>& replicas(PartitionId n) const;
  bool hosts(DcId dc, PartitionId n) const;
  /// Throws RoutingFault when dc does not replicate n.
  std::uint32_t replica_index_for_dc(PartitionId n, DcId dc) const;

  /// The DC serving partition n for requests originating in local_dc: the
  /// local DC when it holds a replica, otherwise a fixed round-robin choice
  /// keyed by (local_dc, n). The client argument does not affect the result.
  DcId target_dc_for_partition(PartitionId n, DcId local_dc, std::uint32_t client = 0) const;

  /// Partitions hosted in dc, ascending.
  const std::vector<PartitionId>& partitions_in(DcId dc) const;
  /// DCs hosting at least one partition.
  const std::vector<DcId>& active_dcs() const { return active_dcs_; }

  const TreeLinks& tree_links(DcId dc) const;

 private:
  ClusterConfig config_;
  std::vector<std::vector<PartitionId>> hosted_;
  std::vector<TreeLinks> trees_;
  std::vector<DcId> active_dcs_;
};

TreeLinks build_tree(const std::vector<PartitionId>& members, std::uint32_t fanout);

}  // namespace paris
