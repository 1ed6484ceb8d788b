#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "paris/types.hpp"

namespace paris {

/// One immutable version of a key: ⟨k, v, ut, id_T, sr⟩.
struct Version {
  Key key;
  Value value;
  VersionStamp stamp;

  Timestamp ut() const { return stamp.ut; }

  friend bool operator==(const Version&, const Version&) = default;
};

/// Multi-version store for the keys of a single partition. Each key maps to a
/// chain sorted newest-first by VersionStamp.
class Storage {
 public:
  Storage(PartitionId owner, std::uint32_t partitions);

  PartitionId owner() const { return owner_; }

  /// Inserts a version; re-inserting an identical stamp is a no-op.
  /// Throws RoutingFault if the key belongs to another partition.
  void put_version(const Key& k, const Value& v, Timestamp ut, const TxId& tx, DcId sr);

  /// Freshest version of k with ut <= snapshot, if any.
  std::optional<Version> read_visible(const Key& k, Timestamp snapshot) const;

  /// Drops every version older than the newest one with ut <= s_old.
  /// Returns the number of versions removed.
  std::size_t collect_garbage(Timestamp s_old);

  std::size_t version_count() const;
  std::size_t key_count() const { return chains_.size(); }
  std::vector<Key> keys() const;
  const std::vector<Version>* chain(const Key& k) const;

 private:
  void check_owner(const Key& k) const;

  PartitionId owner_;
  std::uint32_t partitions_;
  std::map<Key, std::vector<Version>> chains_;
};

}  // namespace paris
