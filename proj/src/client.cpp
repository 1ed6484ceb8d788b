#include "paris/client.hpp"

#include <set>

namespace paris {

ClientSession::ClientSession(const Topology& topology, DcId dc, SessionId session, PartitionId coordinator,
                             TraceSink* sink, std::function<Timestamp()> clock)
    : topology_(topology),
      dc_(dc),
      session_(session),
      coordinator_(coordinator),
      sink_(sink),
      clock_(std::move(clock)) {
  if (!topology.hosts(dc, coordinator)) {
    throw ConfigError("session coordinator partition " + std::to_string(coordinator) + " is not hosted in DC " +
                      std::to_string(dc));
  }
}

void ClientSession::require_open(const char* op) const {
  if (!current_) throw UsageError(std::string(op) + ": no open transaction");
  if (pending_ != Pending::none) throw UsageError(std::string(op) + ": a request is still outstanding");
}

void ClientSession::require_idle(const char* op) const {
  if (current_ || pending_ != Pending::none) throw UsageError(std::string(op) + ": transaction already open");
}

void ClientSession::emit(TraceEvent ev) {
  if (sink_ == nullptr) return;
  ev.time = clock_ ? clock_() : 0;
  ev.session = session_;
  ev.tx = *current_;
  ev.snapshot = snapshot_;
  sink_->record(std::move(ev));
}

void ClientSession::emit_read(const Key& key, ReadSource source, const std::optional<VersionStamp>& stamp) {
  TraceEvent ev;
  ev.kind = TraceKind::read_result;
  ev.key = key;
  ev.source = source;
  ev.stamp = stamp;
  emit(std::move(ev));
}

StartTxReq ClientSession::begin_start() {
  require_idle("start");
  pending_ = Pending::start;
  return StartTxReq{ust_c_};
}

Timestamp ClientSession::complete_start(const StartTxResp& resp) {
  if (pending_ != Pending::start) throw UsageError("start reply without a pending start");
  pending_ = Pending::none;
  if (resp.ust > ust_c_) ust_c_ = resp.ust;
  snapshot_ = resp.ust;
  current_ = resp.id;
  ws_.clear();
  rs_.clear();
  for (auto it = wc_.begin(); it != wc_.end();) {
    if (it->second.stamp.ut <= ust_c_) {
      it = wc_.erase(it);
    } else {
      ++it;
    }
  }
  TraceEvent ev;
  ev.kind = TraceKind::start_tx;
  emit(std::move(ev));
  return snapshot_;
}

ClientSession::ReadStep ClientSession::begin_read(const std::vector<Key>& keys) {
  require_open("read");
  ReadStep step;
  std::vector<Key> fetch;
  std::set<Key> seen;
  for (const Key& k : keys) {
    if (!seen.insert(k).second) continue;
    if (auto w = ws_.find(k); w != ws_.end()) {
      step.local[k] = w->second;
      emit_read(k, ReadSource::ws, std::nullopt);
    } else if (auto r = rs_.find(k); r != rs_.end()) {
      if (r->second) {
        step.local[k] = r->second->value;
        emit_read(k, ReadSource::rs, r->second->stamp);
      } else {
        step.local[k] = std::nullopt;
        emit_read(k, ReadSource::rs, std::nullopt);
      }
    } else if (auto c = wc_.find(k); c != wc_.end()) {
      step.local[k] = c->second.value;
      emit_read(k, ReadSource::wc, c->second.stamp);
    } else {
      fetch.push_back(k);
    }
  }
  if (!fetch.empty()) {
    step.request = ReadReq{*current_, fetch};
    pending_ = Pending::read;
    partial_ = step.local;
    fetching_ = std::move(fetch);
  }
  return step;
}

ReadResult ClientSession::complete_read(const ReadResp& resp) {
  if (pending_ != Pending::read) throw UsageError("read reply without a pending read");
  pending_ = Pending::none;
  std::map<Key, const Version*> got;
  for (const Version& v : resp.versions) got[v.key] = &v;
  for (const Key& k : fetching_) {
    auto it = got.find(k);
    if (it == got.end()) {
      rs_[k] = std::nullopt;
      partial_[k] = std::nullopt;
      emit_read(k, ReadSource::store, std::nullopt);
    } else {
      rs_[k] = *it->second;
      partial_[k] = it->second->value;
      emit_read(k, ReadSource::store, it->second->stamp);
    }
  }
  fetching_.clear();
  return std::move(partial_);
}

void ClientSession::write(const WriteSet& pairs) {
  require_open("write");
  for (const auto& [k, v] : pairs) ws_[k] = v;
}

CommitReqClient ClientSession::begin_commit() {
  require_open("commit");
  if (ws_.empty()) throw UsageError("commit: empty write set, use finish() for read-only transactions");
  pending_ = Pending::commit;
  return CommitReqClient{*current_, hwt_c_, ws_};
}

Timestamp ClientSession::complete_commit(const CommitResp& resp) {
  if (pending_ != Pending::commit) throw UsageError("commit reply without a pending commit");
  pending_ = Pending::none;
  hwt_c_ = resp.ct;
  for (const auto& [k, v] : ws_) {
    DcId sr = topology_.target_dc_for_partition(topology_.partition_of(k), dc_, session_);
    wc_[k] = CachedWrite{v, VersionStamp{resp.ct, *current_, sr}};
  }
  ws_.clear();
  rs_.clear();
  current_.reset();
  return resp.ct;
}

void ClientSession::finish() {
  require_open("finish");
  TraceEvent ev;
  ev.kind = TraceKind::finish_tx;
  emit(std::move(ev));
  ws_.clear();
  rs_.clear();
  current_.reset();
}

void ClientSession::fail(const ErrorResp& err) {
  // The reads already observed stay in the history; the transaction ends
  // there without writes.
  if (current_) {
    TraceEvent ev;
    ev.kind = TraceKind::finish_tx;
    emit(std::move(ev));
  }
  pending_ = Pending::none;
  fetching_.clear();
  partial_.clear();
  ws_.clear();
  rs_.clear();
  current_.reset();
  throw StaleTransaction(err.reason);
}

template <class Resp>
Resp BlockingClient::call(Message request) {
  Message reply = rpc_(session_.coordinator(), std::move(request));
  if (auto* err = std::get_if<ErrorResp>(&reply)) session_.fail(*err);
  if (auto* resp = std::get_if<Resp>(&reply)) return *resp;
  throw ProtocolFault(std::string("unexpected reply ") + message_name(reply));
}

Timestamp BlockingClient::start() {
  StartTxReq req = session_.begin_start();
  return session_.complete_start(call<StartTxResp>(req));
}

ReadResult BlockingClient::read(const std::vector<Key>& keys) {
  auto step = session_.begin_read(keys);
  if (!step.request) return step.local;
  return session_.complete_read(call<ReadResp>(*step.request));
}

Timestamp BlockingClient::commit() {
  CommitReqClient req = session_.begin_commit();
  return session_.complete_commit(call<CommitResp>(std::move(req)));
}

}  // namespace paris
