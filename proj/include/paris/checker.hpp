#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paris/trace.hpp"

namespace paris {

/// Outcome of one check over a trace.
struct CheckResult {
  CheckResult() = default;
  explicit CheckResult(std::string n) : name(std::move(n)) {}

  std::string name;
  bool pass = true;
  std::uint64_t checked = 0;     // number of assertions evaluated
  std::uint64_t violations = 0;  // number that failed
  std::vector<std::string> examples;  // first few counterexamples

  void fail(std::string what);
};

// ---- History: the transaction-level view of a trace ----

using VersionRank = std::int32_t;  // dense rank by VersionStamp; -1 = no version
inline constexpr VersionRank kAbsent = -1;

struct HistoryRead {
  std::uint32_t key = 0;
  ReadSource source = ReadSource::store;
  VersionRank version = kAbsent;
  bool unknown = false;  // stamp names no committed write
  std::uint64_t seq = 0;
};

struct HistoryTx {
  TxId id;
  SessionId session = 0;
  Timestamp snapshot = 0;
  std::optional<Timestamp> ct;  // set for committed update transactions
  bool finished = false;        // committed or ended read-only
  std::uint64_t start_seq = 0;
  std::uint64_t end_seq = 0;
  std::vector<HistoryRead> reads;
  std::vector<VersionRank> writes;  // versions this transaction created
  std::optional<std::size_t> session_prev;
};

struct HistoryVersion {
  std::uint32_t key = 0;
  VersionStamp stamp;
  std::size_t tx = 0;  // writer index in History::txs
};

/// Transactions, versions and keys of a trace, with versions ranked by the
/// last-writer-wins order so "newer" is an integer comparison.
struct History {
  std::vector<Key> keys;
  std::vector<HistoryVersion> versions;  // index == rank
  std::vector<HistoryTx> txs;
  std::vector<std::string> problems;  // structural defects found while building

  static History build(const Trace& trace);
};

// ---- Scalable checks ----

/// snapshot < ct for every committed transaction.
CheckResult check_lemma1(const Trace& trace);
/// If u1 causally precedes u2 then u1.ut < u2.ut.
CheckResult check_update_time_order(const Trace& trace);
/// Reads return causal snapshots: bounded by the snapshot, freshest visible,
/// and closed under the dependencies of every returned version.
CheckResult check_causal_snapshots(const Trace& trace);
/// A reader that sees one write of a transaction sees all its writes.
CheckResult check_atomicity(const Trace& trace);
/// Read-your-writes, monotonic reads, repeatable reads, monotonic snapshots.
CheckResult check_sessions(const Trace& trace);
/// Replication channels deliver strictly increasing timestamps, and no
/// server's ust exceeds any server's applied floor at that point.
CheckResult check_channels(const Trace& trace);

struct CheckReport {
  std::vector<CheckResult> results;
  std::optional<CheckResult> oracle;

  bool pass() const;
  /// Verdict of the five snapshot-level checks (the part the oracle decides).
  bool snapshot_pass() const;
  std::string to_json() const;
  std::string to_text() const;
};

/// Runs every scalable check; the oracle too when the trace has at most
/// oracle_bound versions (0 disables it).
CheckReport check_all(const Trace& trace, std::size_t oracle_bound = 0);

// ---- Brute-force oracle ----

class OracleBoundExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultOracleBound = 12;

/// Decides the same properties as lemma1 + update order + causal snapshots +
/// atomicity + sessions by building the explicit causality graph and
/// enumerating every causally closed, atomic version set. Throws
/// OracleBoundExceeded above bound versions.
CheckResult brute_force_oracle(const Trace& trace, std::size_t bound = kDefaultOracleBound);

}  // namespace paris
