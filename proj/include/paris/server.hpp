#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "paris/bpr.hpp"
#include "paris/messages.hpp"
#include "paris/storage.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"
#include "paris/types.hpp"

namespace paris {

/// What a server needs from whatever hosts it (simulator or socket runtime).
class ServerEnv {
 public:
  virtual ~ServerEnv() = default;
  /// Reading of this server's physical clock, Clock_n^m.
  virtual Timestamp physical_clock() = 0;
  /// Observer time used to stamp trace events and measure blocking.
  virtual Timestamp now() = 0;
  virtual void send(const Address& to, Message msg) = 0;
  /// May return nullptr when tracing is off.
  virtual TraceSink* trace() = 0;
};

/// A transaction parked in the Prepared or Committed queue.
struct TxRecord {
  TxId id;
  Timestamp ts = 0;  // pt while prepared, ct once committed
  WriteSet writes;
};

/// Coordinator-side context of a running transaction (TX[id_T]).
struct TxContext {
  Timestamp snapshot = 0;
  Address client;
  Timestamp last_activity = 0;
  bool busy = false;  // a read fan-out or 2PC is in flight
};

struct ServerStats {
  std::uint64_t transactions_started = 0;
  std::uint64_t transactions_committed = 0;  // as coordinator
  std::uint64_t slice_reads = 0;
  std::uint64_t wait_queue_insertions = 0;
  std::uint64_t blocked_reads = 0;
  std::uint64_t blocked_time_us = 0;
  std::uint64_t applied_local = 0;
  std::uint64_t applied_replicated = 0;
  std::uint64_t heartbeats_sent = 0;
  std::uint64_t gc_rounds = 0;
  std::uint64_t gc_removed = 0;
  std::uint64_t expired_contexts = 0;
  std::uint64_t stale_requests = 0;
};

/// Called immediately before and after each garbage-collection pass.
using GcObserver = std::function<void(const class Server&, Timestamp s_old, bool after)>;

/// One partition replica p_n^m: transaction coordinator, cohort, and the
/// periodic apply / replicate / stabilization machinery. Single-threaded;
/// every entry point runs to completion without waiting.
class Server {
 public:
  Server(const Topology& topology, DcId dc, PartitionId partition, ServerEnv& env);

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  Address address() const { return Address::server(dc_, partition_); }
  DcId dc() const { return dc_; }
  PartitionId partition() const { return partition_; }
  std::uint32_t replica_index() const { return replica_; }
  Protocol protocol() const { return protocol_; }

  /// Dispatches one incoming message to the matching handler.
  void handle(const Address& from, const Message& msg);

  // Coordinator role.
  StartTxResp handle_start_tx(const Address& client, Timestamp ust_c);
  void handle_read(const Address& client, const ReadReq& req);
  void handle_commit_req(const Address& client, const CommitReqClient& req);

  // Cohort role.
  /// Non-blocking slice read at snapshot ust_req (PaRiS path).
  std::vector<Version> handle_read_slice(const std::vector<Key>& keys, Timestamp ust_req);
  Timestamp handle_prepare(const TxId& id, Timestamp ust_req, Timestamp ht, WriteSet writes);
  void handle_commit(const TxId& id, Timestamp ct);

  // Replication and stabilization.
  void tick_apply_replicate();
  void handle_replicate(const Replicate& msg, DcId from_dc);
  void handle_heartbeat(Timestamp t, DcId from_dc);
  void tick_gsv();
  void tick_ust();
  void tick_s_old();

  void set_gc_observer(GcObserver observer) { gc_observer_ = std::move(observer); }

  // State inspection.
  Timestamp hlc() const { return hlc_.value(); }
  Timestamp ust() const { return ust_; }
  const VersionVector& version_vector() const { return vv_; }
  const GlobalStabilizationVector& gsv() const { return gsv_; }
  /// min over the version vector: everything with ct <= floor is applied here.
  Timestamp applied_floor() const { return floor_; }
  const std::map<TxId, TxRecord>& prepared() const { return prepared_; }
  std::vector<TxRecord> committed() const;
  const std::map<TxId, TxContext>& contexts() const { return tx_; }
  const Storage& storage() const { return storage_; }
  Storage& mutable_storage() { return storage_; }
  const ServerStats& stats() const { return stats_; }
  const BlockedReadQueue& blocked_reads() const { return parked_; }
  bool is_root() const { return !parent_.has_value(); }
  Timestamp last_s_old() const { return last_s_old_; }

  /// This server's per-DC minima for the GSV aggregation.
  std::vector<Timestamp> gsv_contribution() const;
  /// This server's oldest-active-snapshot contribution.
  Timestamp s_old_contribution() const;

  // Test hooks.
  void set_ust_for_testing(Timestamp t) { ust_ = t; }
  void set_hlc_for_testing(Timestamp t) { hlc_.advance_to(t); }

 private:
  struct PendingRead {
    TxId tx;
    Address client;
    std::size_t remaining = 0;
    std::vector<Version> versions;
  };
  struct PendingCommit {
    Address client;
    Timestamp snapshot = 0;
    std::size_t remaining = 0;
    Timestamp ct = 0;
    std::vector<Address> participants;
    std::vector<TraceWrite> writes;
  };

  void on_read_slice_req(const Address& from, const ReadSliceReq& req);
  void on_read_slice_resp(const ReadSliceResp& resp);
  void on_prepare_resp(const PrepareResp& resp);
  void on_gsv_up(const Address& from, const GsvUp& msg);
  void on_gsv_down(const GsvDown& msg);
  void on_root_exchange(const RootExchange& msg);
  void on_s_old_up(const Address& from, const SOldUp& msg);
  void on_s_old_down(const SOldDown& msg);

  TxContext& context_for(const TxId& id);
  void expire_idle_contexts();
  void set_vv(std::uint32_t index, Timestamp t);
  void raise_ust(Timestamp t);
  void finalize_gsv(const std::vector<Timestamp>& aggregate);
  void finalize_s_old(Timestamp aggregate);
  void run_gc(Timestamp s_old);
  void release_parked();
  void respond_slice(const Address& to, std::uint64_t rid, const std::vector<Key>& keys, Timestamp snapshot);
  std::vector<Version> read_keys(const std::vector<Key>& keys, Timestamp snapshot) const;
  std::vector<Address> peer_replicas() const;
  std::vector<Address> other_roots() const;
  void emit(TraceEvent ev);
  Timestamp coordinator_clock();

  const Topology& topology_;
  ServerEnv& env_;
  Protocol protocol_;
  DcId dc_;
  PartitionId partition_;
  std::uint32_t replica_;

  HlcState hlc_;
  Timestamp ust_ = 0;
  VersionVector vv_;
  Timestamp floor_ = 0;
  GlobalStabilizationVector gsv_;
  Storage storage_;

  std::map<TxId, TxRecord> prepared_;
  std::multiset<Timestamp> prepared_pts_;
  std::map<std::pair<Timestamp, TxId>, WriteSet> committed_;
  Timestamp last_channel_value_ = 0;

  std::uint64_t next_tx_seq_ = 1;
  std::uint64_t next_rid_ = 1;
  std::map<TxId, TxContext> tx_;
  std::map<std::uint64_t, PendingRead> pending_reads_;
  std::map<TxId, PendingCommit> pending_commits_;
  BlockedReadQueue parked_;

  // Aggregation tree.
  std::optional<PartitionId> parent_;
  std::vector<PartitionId> children_;
  std::map<PartitionId, std::vector<Timestamp>> child_gsv_;
  std::set<PartitionId> fresh_gsv_;
  std::map<PartitionId, Timestamp> child_s_old_;
  std::set<PartitionId> fresh_s_old_;
  // Root only: latest per-DC aggregates (own DC included).
  std::map<DcId, std::vector<Timestamp>> dc_aggregates_;
  std::map<DcId, Timestamp> dc_s_old_;
  Timestamp last_s_old_ = 0;

  ServerStats stats_;
  GcObserver gc_observer_;
};

}  // namespace paris
