#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "paris/trace.hpp"

namespace paris {

/// Delay until one update becomes readable in one remote DC.
struct VisibilitySample {
  SessionId session = 0;
  std::uint64_t tx_index = 0;  // position of the transaction in its session
  Key key;
  PartitionId partition = 0;
  DcId dc = 0;  // observing DC
  Timestamp commit_time = 0;
  Timestamp latency = 0;

  /// Identity shared by paired runs with the same seed.
  std::tuple<SessionId, std::uint64_t, Key, DcId> pair_key() const { return {session, tx_index, key, dc}; }
};

struct VisibilityReport {
  std::vector<VisibilitySample> samples;
  // Updates that never became visible before the trace ended.
  std::uint64_t unresolved = 0;
  /// cdf[p-1] = mean over partitions of the p-th percentile, p = 1..100.
  std::vector<double> cdf;
};

/// Visibility under the trace's own protocol: for PaRiS an update with commit
/// time ct is readable in DC d once every server of d has ust >= ct; for BPR
/// once the replica serving d's clients has applied floor >= ct.
VisibilityReport visibility_latency(const Trace& trace);

/// CSV with columns percentile,latency_us.
std::string visibility_cdf_csv(const VisibilityReport& report);

}  // namespace paris
