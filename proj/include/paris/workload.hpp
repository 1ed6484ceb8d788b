#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "paris/topology.hpp"
#include "paris/types.hpp"

namespace paris {

struct WorkloadSpec {
  std::uint32_t reads_per_tx = 19;
  std::uint32_t writes_per_tx = 1;
  // Percentage of transactions touching only partitions replicated in the
  // client's DC; the rest may touch any partition.
  std::uint32_t local_pct = 95;
  std::uint32_t partitions_per_tx = 4;
  double zipf_theta = 0.99;
  std::uint32_t keys_per_partition = 100;
  std::uint32_t value_size = 8;
  std::uint32_t sessions_per_dc = 2;
  Timestamp duration_us = 10'000'000;
  // Time after duration during which no new transaction starts but
  // in-flight ones and replication settle.
  Timestamp drain_us = 500'000;
  Timestamp think_time_us = 0;

  /// Throws ConfigError on an inconsistent spec.
  void validate() const;
};

/// Zipfian ranks in [0, n), rank 0 most popular (Gray et al. generator).
class ZipfianGenerator {
 public:
  ZipfianGenerator(std::uint64_t n, double theta);
  std::uint64_t next(std::mt19937_64& rng) const;
  std::uint64_t size() const { return n_; }

 private:
  std::uint64_t n_;
  double theta_;
  double alpha_;
  double zetan_;
  double eta_;
};

/// Per-partition key names, chosen so that partition_of maps each to its
/// bucket. Popularity ranks are shuffled per partition by a fixed hash so
/// hot keys are not all "k0".
class KeyUniverse {
 public:
  KeyUniverse(std::uint32_t partitions, std::uint32_t keys_per_partition);
  const std::vector<Key>& keys(PartitionId n) const { return keys_.at(n); }
  std::uint32_t keys_per_partition() const { return per_partition_; }

 private:
  std::uint32_t per_partition_;
  std::vector<std::vector<Key>> keys_;
};

struct TxPlan {
  std::vector<Key> reads;
  std::vector<Key> writes;
  std::vector<PartitionId> partitions;
  bool local = true;
};

/// One transaction for a client in dc: one read batch, then one write batch.
TxPlan generate_transaction(const WorkloadSpec& spec, const Topology& topology, const KeyUniverse& universe,
                            const ZipfianGenerator& zipf, DcId dc, std::mt19937_64& rng);

std::string random_value(std::uint32_t size, std::mt19937_64& rng);

/// Seed for one session's private generator, so paired runs issue the same
/// operations regardless of protocol timing.
std::uint64_t session_seed(std::uint64_t seed, SessionId session);

}  // namespace paris
