#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace paris {

/// Scalar hybrid timestamp, in simulator ticks (microseconds). 0 is the epoch.
using Timestamp = std::uint64_t;
using DcId = std::uint32_t;
using PartitionId = std::uint32_t;
using SessionId = std::uint32_t;

using Key = std::string;
using Value = std::string;

/// Marks "no contribution" inside partial-minimum vectors exchanged by the
/// stabilization protocol.
inline constexpr Timestamp kNoTimestamp = ~Timestamp{0};

// Error taxonomy. Faults indicate a broken protocol invariant or misrouted
// request and are never expected in a correct run.
class Fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class RoutingFault : public Fault {
 public:
  using Fault::Fault;
};
class ProtocolFault : public Fault {
 public:
  using Fault::Fault;
};
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class StaleTransaction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Globally unique transaction identifier: coordinator location plus a
/// per-coordinator sequence number. Ordered lexicographically.
struct TxId {
  DcId dc = 0;
  PartitionId partition = 0;
  std::uint64_t seq = 0;

  friend constexpr auto operator<=>(const TxId&, const TxId&) = default;
};

std::string to_string(const TxId& id);
TxId parse_tx_id(const std::string& text);

/// Identity of one version of a key. The total order (ut, tx, sr) is the
/// last-writer-wins order used everywhere versions are compared.
struct VersionStamp {
  Timestamp ut = 0;
  TxId tx;
  DcId sr = 0;

  friend constexpr auto operator<=>(const VersionStamp&, const VersionStamp&) = default;
};

std::strong_ordering version_cmp(const VersionStamp& a, const VersionStamp& b);

std::string to_string(const VersionStamp& s);
VersionStamp parse_version_stamp(const std::string& text);

/// HLC step on receipt of a prepare: max(physical, ht + 1, hlc + 1).
Timestamp hlc_update_on_prepare(Timestamp physical, Timestamp hlc, Timestamp ht);

/// HLC step on receipt of a commit decision: max(hlc, ct, physical).
Timestamp hlc_update_on_commit(Timestamp physical, Timestamp hlc, Timestamp ct);

/// Hybrid logical clock of one server. The physical component is read by the
/// caller and passed in, so the clock itself stays a plain value.
class HlcState {
 public:
  Timestamp value() const { return hlc_; }

  Timestamp on_prepare(Timestamp physical, Timestamp ht) {
    hlc_ = hlc_update_on_prepare(physical, hlc_, ht);
    return hlc_;
  }
  Timestamp on_commit(Timestamp physical, Timestamp ct) {
    hlc_ = hlc_update_on_commit(physical, hlc_, ct);
    return hlc_;
  }
  // Raise to at least t; used when a server publishes a new local floor.
  void advance_to(Timestamp t) {
    if (t > hlc_) hlc_ = t;
  }

 private:
  Timestamp hlc_ = 0;
};

/// Per-partition-replica vector of applied timestamps, indexed by replica
/// position within the partition's placement row.
using VersionVector = std::vector<Timestamp>;

/// Per-DC stabilization vector, indexed by DC id.
using GlobalStabilizationVector = std::vector<Timestamp>;

}  // namespace paris
