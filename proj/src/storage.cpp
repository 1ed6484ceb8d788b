#include "paris/storage.hpp"

#include <algorithm>

#include "paris/topology.hpp"

namespace paris {

Storage::Storage(PartitionId owner, std::uint32_t partitions) : owner_(owner), partitions_(partitions) {}

void Storage::check_owner(const Key& k) const {
  if (partition_of(k, partitions_) != owner_) {
    throw RoutingFault("key '" + k + "' is not owned by partition " + std::to_string(owner_));
  }
}

void Storage::put_version(const Key& k, const Value& v, Timestamp ut, const TxId& tx, DcId sr) {
  check_owner(k);
  auto& chain = chains_[k];
  VersionStamp stamp{ut, tx, sr};
  // Descending order: find the first element not greater than the new stamp.
  auto pos = std::lower_bound(chain.begin(), chain.end(), stamp,
                              [](const Version& existing, const VersionStamp& s) { return existing.stamp > s; });
  if (pos != chain.end() && pos->stamp == stamp) return;
  chain.insert(pos, Version{k, v, stamp});
}

std::optional<Version> Storage::read_visible(const Key& k, Timestamp snapshot) const {
  auto it = chains_.find(k);
  if (it == chains_.end()) return std::nullopt;
  for (const Version& version : it->second) {
    if (version.ut() <= snapshot) return version;
  }
  return std::nullopt;
}

std::size_t Storage::collect_garbage(Timestamp s_old) {
  std::size_t removed = 0;
  for (auto& [key, chain] : chains_) {
    auto floor = std::find_if(chain.begin(), chain.end(), [&](const Version& v) { return v.ut() <= s_old; });
    if (floor == chain.end()) continue;
    auto first_dead = std::next(floor);
    removed += static_cast<std::size_t>(chain.end() - first_dead);
    chain.erase(first_dead, chain.end());
  }
  return removed;
}

std::size_t Storage::version_count() const {
  std::size_t total = 0;
  for (const auto& [key, chain] : chains_) total += chain.size();
  return total;
}

std::vector<Key> Storage::keys() const {
  std::vector<Key> out;
  out.reserve(chains_.size());
  for (const auto& [key, chain] : chains_) out.push_back(key);
  return out;
}

const std::vector<Version>* Storage::chain(const Key& k) const {
  auto it = chains_.find(k);
  return it == chains_.end() ? nullptr : &it->second;
}

}  // namespace paris
