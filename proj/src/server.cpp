#include "paris/server.hpp"

#include <algorithm>

namespace paris {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void min_into(std::vector<Timestamp>& acc, const std::vector<Timestamp>& other) {
  if (acc.size() != other.size()) throw ProtocolFault("stabilization vector size mismatch");
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = std::min(acc[j], other[j]);
}

void max_into(std::vector<Timestamp>& acc, const std::vector<Timestamp>& other) {
  if (acc.size() != other.size()) throw ProtocolFault("stabilization vector size mismatch");
  for (std::size_t j = 0; j < acc.size(); ++j) {
    if (other[j] == kNoTimestamp) continue;
    if (acc[j] == kNoTimestamp || other[j] > acc[j]) acc[j] = other[j];
  }
}

}  // namespace

Server::Server(const Topology& topology, DcId dc, PartitionId partition, ServerEnv& env)
    : topology_(topology),
      env_(env),
      protocol_(topology.config().protocol),
      dc_(dc),
      partition_(partition),
      replica_(topology.replica_index_for_dc(partition, dc)),
      vv_(topology.replication(), 0),
      gsv_(topology.dcs(), 0),
      storage_(partition, topology.partitions()) {
  const TreeLinks& tree = topology.tree_links(dc);
  if (auto it = tree.parent.find(partition); it != tree.parent.end()) parent_ = it->second;
  if (auto it = tree.children.find(partition); it != tree.children.end()) children_ = it->second;
}

void Server::emit(TraceEvent ev) {
  TraceSink* sink = env_.trace();
  if (sink == nullptr) return;
  ev.time = env_.now();
  ev.server = ServerRef{dc_, partition_};
  sink->record(std::move(ev));
}

Timestamp Server::coordinator_clock() { return std::max(env_.physical_clock(), hlc_.value()); }

void Server::handle(const Address& from, const Message& msg) {
  std::visit(Overloaded{
                 [&](const StartTxReq& m) {
                   StartTxResp resp = handle_start_tx(from, m.ust_c);
                   env_.send(from, resp);
                 },
                 [&](const ReadReq& m) { handle_read(from, m); },
                 [&](const ReadSliceReq& m) { on_read_slice_req(from, m); },
                 [&](const ReadSliceResp& m) { on_read_slice_resp(m); },
                 [&](const PrepareReq& m) {
                   Timestamp pt = handle_prepare(m.id, m.ust, m.ht, m.writes);
                   env_.send(from, PrepareResp{m.id, pt});
                 },
                 [&](const PrepareResp& m) { on_prepare_resp(m); },
                 [&](const CommitReqClient& m) { handle_commit_req(from, m); },
                 [&](const CommitReqCohort& m) { handle_commit(m.id, m.ct); },
                 [&](const Replicate& m) { handle_replicate(m, from.dc); },
                 [&](const Heartbeat& m) { handle_heartbeat(m.t, from.dc); },
                 [&](const GsvUp& m) { on_gsv_up(from, m); },
                 [&](const GsvDown& m) { on_gsv_down(m); },
                 [&](const RootExchange& m) { on_root_exchange(m); },
                 [&](const SOldUp& m) { on_s_old_up(from, m); },
                 [&](const SOldDown& m) { on_s_old_down(m); },
                 [&](const auto&) {
                   throw ProtocolFault(std::string("server received client-bound message ") + message_name(msg));
                 },
             },
             msg);
}

// ---- coordinator ----

StartTxResp Server::handle_start_tx(const Address& client, Timestamp ust_c) {
  Timestamp snapshot;
  if (protocol_ == Protocol::bpr) {
    snapshot = bpr_snapshot(ust_c, coordinator_clock());
  } else {
    raise_ust(ust_c);
    snapshot = ust_;
  }
  TxId id{dc_, partition_, next_tx_seq_++};
  tx_[id] = TxContext{snapshot, client, env_.now(), false};
  ++stats_.transactions_started;
  return StartTxResp{id, snapshot};
}

TxContext& Server::context_for(const TxId& id) {
  auto it = tx_.find(id);
  if (it == tx_.end()) throw StaleTransaction("unknown transaction " + to_string(id));
  if (it->second.busy) throw ProtocolFault("transaction " + to_string(id) + " already has a request in flight");
  it->second.last_activity = env_.now();
  return it->second;
}

void Server::handle_read(const Address& client, const ReadReq& req) {
  TxContext* ctx;
  try {
    ctx = &context_for(req.id);
  } catch (const StaleTransaction& e) {
    ++stats_.stale_requests;
    env_.send(client, ErrorResp{req.id, e.what()});
    return;
  }
  std::map<PartitionId, std::vector<Key>> groups;
  for (const Key& k : req.keys) groups[topology_.partition_of(k)].push_back(k);
  if (groups.empty()) {
    env_.send(client, ReadResp{});
    return;
  }
  std::uint64_t rid = next_rid_++;
  pending_reads_[rid] = PendingRead{req.id, client, groups.size(), {}};
  ctx->busy = true;
  for (auto& [n, keys] : groups) {
    DcId target = topology_.target_dc_for_partition(n, dc_, client.index);
    env_.send(Address::server(target, n), ReadSliceReq{rid, std::move(keys), ctx->snapshot});
  }
}

void Server::on_read_slice_resp(const ReadSliceResp& resp) {
  auto it = pending_reads_.find(resp.rid);
  if (it == pending_reads_.end()) throw ProtocolFault("slice response for unknown read " + std::to_string(resp.rid));
  PendingRead& pending = it->second;
  pending.versions.insert(pending.versions.end(), resp.versions.begin(), resp.versions.end());
  if (--pending.remaining > 0) return;
  if (auto ctx = tx_.find(pending.tx); ctx != tx_.end()) {
    ctx->second.busy = false;
    ctx->second.last_activity = env_.now();
  }
  env_.send(pending.client, ReadResp{std::move(pending.versions)});
  pending_reads_.erase(it);
}

void Server::handle_commit_req(const Address& client, const CommitReqClient& req) {
  TxContext* ctx;
  try {
    ctx = &context_for(req.id);
  } catch (const StaleTransaction& e) {
    ++stats_.stale_requests;
    env_.send(client, ErrorResp{req.id, e.what()});
    return;
  }
  if (req.writes.empty()) throw ProtocolFault("commit request with an empty write set");
  Timestamp ht = std::max(ctx->snapshot, req.hwt);

  std::map<PartitionId, WriteSet> groups;
  for (const auto& [k, v] : req.writes) groups[topology_.partition_of(k)].emplace(k, v);

  PendingCommit pending{client, ctx->snapshot, groups.size(), 0, {}, {}};
  for (const auto& [n, writes] : groups) {
    DcId target = topology_.target_dc_for_partition(n, dc_, client.index);
    pending.participants.push_back(Address::server(target, n));
    for (const auto& [k, v] : writes) pending.writes.push_back(TraceWrite{k, target});
  }
  std::sort(pending.writes.begin(), pending.writes.end(),
            [](const TraceWrite& a, const TraceWrite& b) { return a.key < b.key; });
  ctx->busy = true;
  pending_commits_[req.id] = std::move(pending);

  auto participant = pending_commits_[req.id].participants.begin();
  for (auto& [n, writes] : groups) {
    env_.send(*participant++, PrepareReq{req.id, ctx->snapshot, ht, std::move(writes)});
  }
}

void Server::on_prepare_resp(const PrepareResp& resp) {
  auto it = pending_commits_.find(resp.id);
  if (it == pending_commits_.end()) throw ProtocolFault("prepare response for unknown transaction " + to_string(resp.id));
  PendingCommit& pending = it->second;
  pending.ct = std::max(pending.ct, resp.pt);
  if (--pending.remaining > 0) return;

  if (pending.ct <= pending.snapshot) {
    throw ProtocolFault("commit time " + std::to_string(pending.ct) + " not above snapshot " +
                        std::to_string(pending.snapshot) + " for " + to_string(resp.id));
  }
  tx_.erase(resp.id);
  ++stats_.transactions_committed;

  // Recorded before the decision leaves this server, so the trace never
  // shows an apply or a read of this transaction ahead of its commit.
  TraceEvent ev;
  ev.kind = TraceKind::commit_done;
  ev.session = pending.client.index;
  ev.tx = resp.id;
  ev.snapshot = pending.snapshot;
  ev.ct = pending.ct;
  ev.writes = std::move(pending.writes);
  emit(std::move(ev));

  for (const Address& p : pending.participants) env_.send(p, CommitReqCohort{resp.id, pending.ct});
  env_.send(pending.client, CommitResp{pending.ct});
  pending_commits_.erase(it);
}

// ---- cohort ----

std::vector<Version> Server::read_keys(const std::vector<Key>& keys, Timestamp snapshot) const {
  std::vector<Version> out;
  for (const Key& k : keys) {
    if (topology_.partition_of(k) != partition_) {
      throw RoutingFault("slice read for key '" + k + "' sent to partition " + std::to_string(partition_));
    }
    if (auto v = storage_.read_visible(k, snapshot)) out.push_back(std::move(*v));
  }
  return out;
}

std::vector<Version> Server::handle_read_slice(const std::vector<Key>& keys, Timestamp ust_req) {
  raise_ust(ust_req);
  ++stats_.slice_reads;
  return read_keys(keys, ust_req);
}

void Server::respond_slice(const Address& to, std::uint64_t rid, const std::vector<Key>& keys, Timestamp snapshot) {
  ++stats_.slice_reads;
  env_.send(to, ReadSliceResp{rid, read_keys(keys, snapshot)});
}

void Server::on_read_slice_req(const Address& from, const ReadSliceReq& req) {
  if (protocol_ == Protocol::paris) {
    env_.send(from, ReadSliceResp{req.rid, handle_read_slice(req.keys, req.ust)});
    return;
  }
  if (floor_ >= req.ust) {
    respond_slice(from, req.rid, req.keys, req.ust);
    return;
  }
  ++stats_.wait_queue_insertions;
  parked_.park(ParkedRead{from, req.rid, req.keys, req.ust, env_.now()});
}

void Server::release_parked() {
  for (ParkedRead& read : parked_.release(floor_)) {
    Timestamp waited = env_.now() - read.parked_at;
    ++stats_.blocked_reads;
    stats_.blocked_time_us += waited;
    TraceEvent ev;
    ev.kind = TraceKind::blocked_read;
    ev.snapshot = read.snapshot;
    ev.value = waited;
    emit(std::move(ev));
    respond_slice(read.from, read.rid, read.keys, read.snapshot);
  }
}

Timestamp Server::handle_prepare(const TxId& id, Timestamp ust_req, Timestamp ht, WriteSet writes) {
  if (writes.empty()) throw ProtocolFault("prepare with an empty write set for " + to_string(id));
  for (const auto& [k, v] : writes) {
    if (topology_.partition_of(k) != partition_) {
      throw RoutingFault("prepare for key '" + k + "' sent to partition " + std::to_string(partition_));
    }
  }
  if (prepared_.count(id) != 0) throw ProtocolFault("duplicate prepare for " + to_string(id));
  hlc_.on_prepare(env_.physical_clock(), ht);
  if (protocol_ == Protocol::paris) raise_ust(ust_req);
  Timestamp pt = std::max(hlc_.value(), ust_);
  if (pt <= vv_[replica_]) {
    throw ProtocolFault("proposed time " + std::to_string(pt) + " not above published floor " +
                        std::to_string(vv_[replica_]));
  }
  prepared_.emplace(id, TxRecord{id, pt, std::move(writes)});
  prepared_pts_.insert(pt);
  return pt;
}

void Server::handle_commit(const TxId& id, Timestamp ct) {
  auto it = prepared_.find(id);
  if (it == prepared_.end()) throw ProtocolFault("commit for unprepared transaction " + to_string(id));
  if (ct < it->second.ts) throw ProtocolFault("commit time below proposed time for " + to_string(id));
  if (ct <= vv_[replica_]) throw ProtocolFault("commit time not above published floor for " + to_string(id));
  hlc_.on_commit(env_.physical_clock(), ct);
  prepared_pts_.erase(prepared_pts_.find(it->second.ts));
  committed_.emplace(std::make_pair(ct, id), std::move(it->second.writes));
  prepared_.erase(it);
}

std::vector<TxRecord> Server::committed() const {
  std::vector<TxRecord> out;
  for (const auto& [key, writes] : committed_) out.push_back(TxRecord{key.second, key.first, writes});
  return out;
}

// ---- apply, replicate, heartbeat ----

void Server::expire_idle_contexts() {
  Timestamp now = env_.now();
  Timestamp timeout = topology_.config().tx_idle_timeout_us;
  for (auto it = tx_.begin(); it != tx_.end();) {
    if (!it->second.busy && now - it->second.last_activity > timeout) {
      it = tx_.erase(it);
      ++stats_.expired_contexts;
    } else {
      ++it;
    }
  }
}

std::vector<Address> Server::peer_replicas() const {
  std::vector<Address> out;
  for (DcId d : topology_.replicas(partition_)) {
    if (d != dc_) out.push_back(Address::server(d, partition_));
  }
  return out;
}

void Server::tick_apply_replicate() {
  expire_idle_contexts();
  Timestamp physical = env_.physical_clock();
  Timestamp ub;
  if (!prepared_pts_.empty()) {
    ub = *prepared_pts_.begin() - 1;
  } else {
    ub = std::max(physical, hlc_.value());
    // Later prepares must propose above the floor published below.
    hlc_.advance_to(ub);
  }
  if (ub < vv_[replica_]) {
    throw ProtocolFault("local floor regressed from " + std::to_string(vv_[replica_]) + " to " + std::to_string(ub));
  }

  auto peers = peer_replicas();
  bool applied = false;
  while (!committed_.empty() && committed_.begin()->first.first <= ub) {
    Timestamp ct = committed_.begin()->first.first;
    Replicate batch;
    batch.ct = ct;
    while (!committed_.empty() && committed_.begin()->first.first == ct) {
      auto node = committed_.extract(committed_.begin());
      const TxId& id = node.key().second;
      TraceEvent ev;
      ev.kind = TraceKind::apply_local;
      ev.tx = id;
      ev.ct = ct;
      for (const auto& [k, v] : node.mapped()) {
        storage_.put_version(k, v, ct, id, dc_);
        ev.keys.push_back(k);
      }
      emit(std::move(ev));
      ++stats_.applied_local;
      batch.txs.push_back(ReplicatedTx{id, std::move(node.mapped())});
    }
    for (const Address& peer : peers) env_.send(peer, batch);
    last_channel_value_ = ct;
    applied = true;
  }

  set_vv(replica_, ub);
  if (!applied && ub > last_channel_value_) {
    for (const Address& peer : peers) env_.send(peer, Heartbeat{ub});
    if (!peers.empty()) ++stats_.heartbeats_sent;
    last_channel_value_ = ub;
  }
}

void Server::handle_replicate(const Replicate& msg, DcId from_dc) {
  std::uint32_t i = topology_.replica_index_for_dc(partition_, from_dc);
  if (i == replica_) throw ProtocolFault("replicate received from own replica index");
  if (msg.ct <= vv_[i]) {
    throw ProtocolFault("replicate ct " + std::to_string(msg.ct) + " not above VV entry " + std::to_string(vv_[i]));
  }
  TraceEvent recv;
  recv.kind = TraceKind::channel_recv;
  recv.from_dc = from_dc;
  recv.channel = 'R';
  recv.value = msg.ct;
  emit(std::move(recv));
  for (const ReplicatedTx& tx : msg.txs) {
    TraceEvent ev;
    ev.kind = TraceKind::apply_replicated;
    ev.from_dc = from_dc;
    ev.tx = tx.id;
    ev.ct = msg.ct;
    for (const auto& [k, v] : tx.writes) {
      storage_.put_version(k, v, msg.ct, tx.id, from_dc);
      ev.keys.push_back(k);
    }
    emit(std::move(ev));
    ++stats_.applied_replicated;
  }
  set_vv(i, msg.ct);
}

void Server::handle_heartbeat(Timestamp t, DcId from_dc) {
  std::uint32_t i = topology_.replica_index_for_dc(partition_, from_dc);
  if (i == replica_) throw ProtocolFault("heartbeat received for own replica index");
  if (t < vv_[i]) throw ProtocolFault("heartbeat " + std::to_string(t) + " below VV entry " + std::to_string(vv_[i]));
  TraceEvent recv;
  recv.kind = TraceKind::channel_recv;
  recv.from_dc = from_dc;
  recv.channel = 'H';
  recv.value = t;
  emit(std::move(recv));
  set_vv(i, t);
}

void Server::set_vv(std::uint32_t index, Timestamp t) {
  vv_[index] = t;
  Timestamp floor = *std::min_element(vv_.begin(), vv_.end());
  if (floor == floor_) return;
  floor_ = floor;
  TraceEvent ev;
  ev.kind = TraceKind::floor_advance;
  ev.value = floor;
  emit(std::move(ev));
  if (protocol_ == Protocol::bpr && !parked_.empty()) release_parked();
}

void Server::raise_ust(Timestamp t) {
  if (t <= ust_) return;
  ust_ = t;
  TraceEvent ev;
  ev.kind = TraceKind::ust_advance;
  ev.value = t;
  emit(std::move(ev));
}

// ---- stabilization ----

std::vector<Timestamp> Server::gsv_contribution() const {
  std::vector<Timestamp> out(topology_.dcs(), kNoTimestamp);
  const auto& replicas = topology_.replicas(partition_);
  for (std::size_t i = 0; i < replicas.size(); ++i) out[replicas[i]] = vv_[i];
  return out;
}

std::vector<Address> Server::other_roots() const {
  std::vector<Address> out;
  for (DcId d : topology_.active_dcs()) {
    if (d != dc_) out.push_back(Address::server(d, topology_.tree_links(d).root));
  }
  return out;
}

void Server::tick_gsv() {
  if (!children_.empty()) return;  // interior nodes report when their children have
  if (parent_) {
    env_.send(Address::server(dc_, *parent_), GsvUp{gsv_contribution()});
  } else {
    finalize_gsv(gsv_contribution());
  }
}

void Server::on_gsv_up(const Address& from, const GsvUp& msg) {
  if (std::find(children_.begin(), children_.end(), from.index) == children_.end() || from.dc != dc_) {
    throw ProtocolFault("GSV report from a non-child " + to_string(from));
  }
  child_gsv_[from.index] = msg.mins;
  fresh_gsv_.insert(from.index);
  if (fresh_gsv_.size() < children_.size()) return;
  fresh_gsv_.clear();
  std::vector<Timestamp> agg = gsv_contribution();
  for (const auto& [child, mins] : child_gsv_) min_into(agg, mins);
  if (parent_) {
    env_.send(Address::server(dc_, *parent_), GsvUp{std::move(agg)});
  } else {
    finalize_gsv(agg);
  }
}

void Server::finalize_gsv(const std::vector<Timestamp>& aggregate) {
  auto& mine = dc_aggregates_[dc_];
  if (mine.empty()) mine.assign(aggregate.size(), kNoTimestamp);
  max_into(mine, aggregate);
  max_into(gsv_, aggregate);
  for (const Address& root : other_roots()) env_.send(root, RootExchange{dc_, mine});
}

void Server::on_root_exchange(const RootExchange& msg) {
  if (!is_root() || msg.dc == dc_) throw ProtocolFault("unexpected root exchange from DC " + std::to_string(msg.dc));
  auto& agg = dc_aggregates_[msg.dc];
  if (agg.empty()) agg.assign(msg.aggregate.size(), kNoTimestamp);
  max_into(agg, msg.aggregate);
}

void Server::tick_ust() {
  if (!is_root()) return;
  for (DcId d : topology_.active_dcs()) {
    if (dc_aggregates_.count(d) == 0) return;  // not every DC has reported yet
  }
  std::vector<Timestamp> global(topology_.dcs(), kNoTimestamp);
  for (const auto& [d, agg] : dc_aggregates_) min_into(global, agg);
  Timestamp min_gst = kNoTimestamp;
  for (DcId j = 0; j < global.size(); ++j) {
    if (global[j] == kNoTimestamp) continue;
    gsv_[j] = std::max(gsv_[j], global[j]);
    min_gst = std::min(min_gst, global[j]);
  }
  if (min_gst != kNoTimestamp) raise_ust(min_gst);
  for (PartitionId child : children_) env_.send(Address::server(dc_, child), GsvDown{gsv_, ust_});
}

void Server::on_gsv_down(const GsvDown& msg) {
  max_into(gsv_, msg.gsv);
  raise_ust(msg.ust);
  for (PartitionId child : children_) env_.send(Address::server(dc_, child), GsvDown{gsv_, ust_});
}

Timestamp Server::s_old_contribution() const {
  // Capped by ust: every snapshot assigned later is at least the current ust.
  Timestamp out = ust_;
  for (const auto& [id, ctx] : tx_) out = std::min(out, ctx.snapshot);
  return out;
}

void Server::tick_s_old() {
  if (!children_.empty()) return;
  if (parent_) {
    env_.send(Address::server(dc_, *parent_), SOldUp{s_old_contribution()});
  } else {
    finalize_s_old(s_old_contribution());
  }
}

void Server::on_s_old_up(const Address& from, const SOldUp& msg) {
  if (from.dc != dc_) {
    // Another DC root's aggregate.
    if (!is_root()) throw ProtocolFault("cross-DC S_old report sent to a non-root");
    dc_s_old_[from.dc] = msg.t;
    return;
  }
  if (std::find(children_.begin(), children_.end(), from.index) == children_.end()) {
    throw ProtocolFault("S_old report from a non-child " + to_string(from));
  }
  child_s_old_[from.index] = msg.t;
  fresh_s_old_.insert(from.index);
  if (fresh_s_old_.size() < children_.size()) return;
  fresh_s_old_.clear();
  Timestamp agg = s_old_contribution();
  for (const auto& [child, t] : child_s_old_) agg = std::min(agg, t);
  if (parent_) {
    env_.send(Address::server(dc_, *parent_), SOldUp{agg});
  } else {
    finalize_s_old(agg);
  }
}

void Server::finalize_s_old(Timestamp aggregate) {
  dc_s_old_[dc_] = aggregate;
  for (const Address& root : other_roots()) env_.send(root, SOldUp{aggregate});
  Timestamp s_old = kNoTimestamp;
  for (DcId d : topology_.active_dcs()) {
    auto it = dc_s_old_.find(d);
    if (it == dc_s_old_.end()) return;
    s_old = std::min(s_old, it->second);
  }
  if (s_old <= last_s_old_) return;
  last_s_old_ = s_old;
  run_gc(s_old);
  for (PartitionId child : children_) env_.send(Address::server(dc_, child), SOldDown{s_old});
}

void Server::on_s_old_down(const SOldDown& msg) {
  if (msg.t > last_s_old_) {
    last_s_old_ = msg.t;
    run_gc(msg.t);
  }
  for (PartitionId child : children_) env_.send(Address::server(dc_, child), SOldDown{msg.t});
}

void Server::run_gc(Timestamp s_old) {
  if (gc_observer_) gc_observer_(*this, s_old, false);
  stats_.gc_removed += storage_.collect_garbage(s_old);
  ++stats_.gc_rounds;
  if (gc_observer_) gc_observer_(*this, s_old, true);
}

}  // namespace paris
