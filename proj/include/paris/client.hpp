#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "paris/messages.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"
#include "paris/types.hpp"

namespace paris {

/// Entry of the private write cache: a value this session committed.
struct CachedWrite {
  Value value;
  VersionStamp stamp;  // stamp.ut is the commit time
};

using ReadResult = std::map<Key, std::optional<Value>>;

/// Client session state machine. It never performs I/O: each operation is
/// split into a begin step that produces the request to send to the
/// coordinator and a complete step that consumes the reply.
class ClientSession {
 public:
  /// clock supplies the timestamps written into trace events; sink may be null.
  ClientSession(const Topology& topology, DcId dc, SessionId session, PartitionId coordinator,
                TraceSink* sink = nullptr, std::function<Timestamp()> clock = {});

  DcId dc() const { return dc_; }
  SessionId session() const { return session_; }
  Address address() const { return Address::client(dc_, session_); }
  Address coordinator() const { return Address::server(dc_, coordinator_); }

  StartTxReq begin_start();
  /// Returns the snapshot of the new transaction.
  Timestamp complete_start(const StartTxResp& resp);

  struct ReadStep {
    /// Keys resolved from WS, RS or WC, plus any already known to be absent.
    ReadResult local;
    /// Present when some keys must be fetched from the coordinator.
    std::optional<ReadReq> request;
  };
  ReadStep begin_read(const std::vector<Key>& keys);
  /// Merges the fetched versions into RS; returns the full result of the read.
  ReadResult complete_read(const ReadResp& resp);

  void write(const WriteSet& pairs);

  /// Only valid with a non-empty write set; read-only transactions use finish().
  CommitReqClient begin_commit();
  Timestamp complete_commit(const CommitResp& resp);

  /// Ends a read-only transaction locally.
  void finish();

  /// Abandons the open transaction after the coordinator rejected it, then
  /// throws StaleTransaction.
  [[noreturn]] void fail(const ErrorResp& err);

  bool in_transaction() const { return current_.has_value(); }
  bool awaiting_reply() const { return pending_ != Pending::none; }
  std::optional<TxId> current() const { return current_; }
  Timestamp ust() const { return ust_c_; }
  Timestamp hwt() const { return hwt_c_; }
  Timestamp snapshot() const { return snapshot_; }
  const std::map<Key, CachedWrite>& write_cache() const { return wc_; }
  const WriteSet& write_set() const { return ws_; }
  const std::map<Key, std::optional<Version>>& read_set() const { return rs_; }

 private:
  enum class Pending { none, start, read, commit };

  void require_open(const char* op) const;
  void require_idle(const char* op) const;
  void emit_read(const Key& key, ReadSource source, const std::optional<VersionStamp>& stamp);
  void emit(TraceEvent ev);

  const Topology& topology_;
  DcId dc_;
  SessionId session_;
  PartitionId coordinator_;
  TraceSink* sink_;
  std::function<Timestamp()> clock_;

  Timestamp ust_c_ = 0;
  Timestamp hwt_c_ = 0;
  std::map<Key, CachedWrite> wc_;

  std::optional<TxId> current_;
  Timestamp snapshot_ = 0;
  WriteSet ws_;
  std::map<Key, std::optional<Version>> rs_;

  Pending pending_ = Pending::none;
  ReadResult partial_;
  std::vector<Key> fetching_;
};

/// Synchronous wrapper: rpc sends a request to the session's coordinator and
/// returns its reply.
class BlockingClient {
 public:
  using Rpc = std::function<Message(const Address& to, Message request)>;

  BlockingClient(ClientSession& session, Rpc rpc) : session_(session), rpc_(std::move(rpc)) {}

  Timestamp start();
  ReadResult read(const std::vector<Key>& keys);
  void write(const WriteSet& pairs) { session_.write(pairs); }
  Timestamp commit();
  void finish() { session_.finish(); }

  ClientSession& session() { return session_; }

 private:
  template <class Resp>
  Resp call(Message request);

  ClientSession& session_;
  Rpc rpc_;
};

}  // namespace paris
