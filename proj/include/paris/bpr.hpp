#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "paris/messages.hpp"
#include "paris/types.hpp"

namespace paris {

// Blocking Partial Replication: the comparison baseline. Transactions take
// the freshest snapshot the coordinator can name, and slice reads wait until
// the serving replica has applied everything up to that snapshot.

/// Snapshot for a new transaction: max(client's highest snapshot, coordinator clock).
inline Timestamp bpr_snapshot(Timestamp client_snapshot, Timestamp coordinator_clock) {
  return client_snapshot > coordinator_clock ? client_snapshot : coordinator_clock;
}

/// A slice read waiting for the replica's applied floor to reach its snapshot.
struct ParkedRead {
  Address from;
  std::uint64_t rid = 0;
  std::vector<Key> keys;
  Timestamp snapshot = 0;
  Timestamp parked_at = 0;
};

class BlockedReadQueue {
 public:
  void park(ParkedRead read);

  /// Removes and returns every parked read with snapshot <= floor, oldest
  /// snapshot first.
  std::vector<ParkedRead> release(Timestamp floor);

  std::size_t size() const { return parked_.size(); }
  bool empty() const { return parked_.empty(); }
  /// Smallest snapshot still parked; the queue must be non-empty.
  Timestamp min_snapshot() const { return parked_.begin()->first; }
  std::vector<Timestamp> snapshots() const;

 private:
  std::multimap<Timestamp, ParkedRead> parked_;
};

}  // namespace paris
