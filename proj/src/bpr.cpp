#include "paris/bpr.hpp"

namespace paris {

void BlockedReadQueue::park(ParkedRead read) {
  Timestamp snapshot = read.snapshot;
  parked_.emplace(snapshot, std::move(read));
}

std::vector<ParkedRead> BlockedReadQueue::release(Timestamp floor) {
  std::vector<ParkedRead> ready;
  auto end = parked_.upper_bound(floor);
  for (auto it = parked_.begin(); it != end; ++it) ready.push_back(std::move(it->second));
  parked_.erase(parked_.begin(), end);
  return ready;
}

std::vector<Timestamp> BlockedReadQueue::snapshots() const {
  std::vector<Timestamp> out;
  out.reserve(parked_.size());
  for (const auto& [snapshot, read] : parked_) out.push_back(snapshot);
  return out;
}

}  // namespace paris
