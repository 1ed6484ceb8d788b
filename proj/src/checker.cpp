#include "paris/checker.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace paris {

namespace {

constexpr std::size_t kMaxExamples = 5;

}  // namespace

void CheckResult::fail(std::string what) {
  pass = false;
  ++violations;
  if (examples.size() < kMaxExamples) examples.push_back(std::move(what));
}

// ---- History ----

History History::build(const Trace& trace) {
  History h;
  std::map<Key, std::uint32_t> key_ids;
  auto key_id = [&](const Key& k) {
    auto [it, inserted] = key_ids.emplace(k, static_cast<std::uint32_t>(h.keys.size()));
    if (inserted) h.keys.push_back(k);
    return it->second;
  };

  // Versions first, so reads can refer to writes recorded later.
  struct Raw {
    VersionStamp stamp;
    std::uint32_t key;
    TxId tx;
  };
  std::vector<Raw> raw;
  for (const TraceEvent& ev : trace.events) {
    if (ev.kind != TraceKind::commit_done) continue;
    for (const TraceWrite& w : ev.writes) raw.push_back(Raw{VersionStamp{ev.ct, ev.tx, w.sr}, key_id(w.key), ev.tx});
  }
  std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    return a.stamp != b.stamp ? a.stamp < b.stamp : a.key < b.key;
  });
  std::map<std::pair<std::uint32_t, VersionStamp>, VersionRank> rank_of;
  for (const Raw& r : raw) {
    auto [it, inserted] = rank_of.emplace(std::make_pair(r.key, r.stamp), static_cast<VersionRank>(h.versions.size()));
    if (!inserted) {
      h.problems.push_back("version " + h.keys[r.key] + "@" + to_string(r.stamp) + " committed twice");
      continue;
    }
    h.versions.push_back(HistoryVersion{r.key, r.stamp, 0});
  }

  std::map<TxId, std::size_t> tx_ids;
  auto find_tx = [&](const TraceEvent& ev) -> HistoryTx* {
    auto it = tx_ids.find(ev.tx);
    if (it == tx_ids.end()) {
      h.problems.push_back(std::string(to_string(ev.kind)) + " for transaction " + to_string(ev.tx) +
                           " that never started");
      return nullptr;
    }
    return &h.txs[it->second];
  };
  std::map<SessionId, std::size_t> last_in_session;

  for (const TraceEvent& ev : trace.events) {
    switch (ev.kind) {
      case TraceKind::start_tx: {
        if (tx_ids.count(ev.tx) != 0) {
          h.problems.push_back("transaction " + to_string(ev.tx) + " started twice");
          break;
        }
        HistoryTx tx;
        tx.id = ev.tx;
        tx.session = ev.session;
        tx.snapshot = ev.snapshot;
        tx.start_seq = ev.seq;
        tx.end_seq = ~std::uint64_t{0};
        if (auto prev = last_in_session.find(ev.session); prev != last_in_session.end()) {
          tx.session_prev = prev->second;
          if (!h.txs[prev->second].finished) {
            h.problems.push_back("session " + std::to_string(ev.session) + " started " + to_string(ev.tx) +
                                 " before finishing its previous transaction");
          }
        }
        last_in_session[ev.session] = h.txs.size();
        tx_ids[ev.tx] = h.txs.size();
        h.txs.push_back(std::move(tx));
        break;
      }
      case TraceKind::read_result: {
        HistoryTx* tx = find_tx(ev);
        if (tx == nullptr) break;
        HistoryRead r;
        r.key = key_id(ev.key);
        r.source = ev.source;
        r.seq = ev.seq;
        if (ev.source != ReadSource::ws && ev.stamp) {
          auto it = rank_of.find({r.key, *ev.stamp});
          if (it == rank_of.end()) {
            r.unknown = true;
          } else {
            r.version = it->second;
          }
        }
        tx->reads.push_back(r);
        break;
      }
      case TraceKind::commit_done: {
        HistoryTx* tx = find_tx(ev);
        if (tx == nullptr) break;
        if (tx->finished) {
          h.problems.push_back("transaction " + to_string(ev.tx) + " finished twice");
          break;
        }
        tx->ct = ev.ct;
        tx->finished = true;
        tx->end_seq = ev.seq;
        for (const TraceWrite& w : ev.writes) {
          auto it = rank_of.find({key_id(w.key), VersionStamp{ev.ct, ev.tx, w.sr}});
          if (it != rank_of.end()) tx->writes.push_back(it->second);
        }
        break;
      }
      case TraceKind::finish_tx: {
        HistoryTx* tx = find_tx(ev);
        if (tx == nullptr) break;
        if (tx->finished) {
          h.problems.push_back("transaction " + to_string(ev.tx) + " finished twice");
          break;
        }
        tx->finished = true;
        tx->end_seq = ev.seq;
        break;
      }
      default:
        break;
    }
  }

  // Writers of versions whose CommitDone had no StartTx keep tx = npos.
  for (auto& v : h.versions) v.tx = ~std::size_t{0};
  for (std::size_t i = 0; i < h.txs.size(); ++i) {
    for (VersionRank r : h.txs[i].writes) h.versions[r].tx = i;
  }
  return h;
}

namespace {

/// Causal pasts of every transaction as per-key newest-version vectors.
struct Analysis {
  const History& h;
  bool cycle = false;
  std::vector<std::size_t> order;  // topological, cycle leftovers appended
  // dep[t][k]: newest version of key k written by a transaction that
  // causally precedes t (t's own writes excluded).
  std::vector<std::vector<VersionRank>> dep;
  // start[t][k]: the same for the session predecessor's full past.
  std::vector<std::vector<VersionRank>> start;
  // Newest version of each key with ut <= t, via sorted per-key lists.
  std::vector<std::vector<VersionRank>> by_key;

  explicit Analysis(const History& history);

  std::optional<std::size_t> writer(VersionRank v) const {
    if (v < 0) return std::nullopt;
    std::size_t t = h.versions[v].tx;
    if (t == ~std::size_t{0}) return std::nullopt;
    return t;
  }

  VersionRank freshest(std::uint32_t key, Timestamp snapshot) const {
    // Ranks ascend with ut, so the visible versions form a prefix.
    const auto& list = by_key[key];
    auto end = std::partition_point(list.begin(), list.end(),
                                    [&](VersionRank v) { return h.versions[v].stamp.ut <= snapshot; });
    return end == list.begin() ? kAbsent : *std::prev(end);
  }

  std::string describe(VersionRank v) const {
    if (v == kAbsent) return "<absent>";
    return h.keys[h.versions[v].key] + "@" + to_string(h.versions[v].stamp);
  }
};

Analysis::Analysis(const History& history) : h(history) {
  const std::size_t T = h.txs.size();
  const std::size_t K = h.keys.size();
  by_key.assign(K, {});
  for (std::size_t v = 0; v < h.versions.size(); ++v) by_key[h.versions[v].key].push_back(static_cast<VersionRank>(v));

  // Edges: session predecessor and reads-from.
  std::vector<std::vector<std::size_t>> out(T);
  std::vector<std::size_t> indegree(T, 0);
  auto add_edge = [&](std::size_t a, std::size_t b) {
    out[a].push_back(b);
    ++indegree[b];
  };
  for (std::size_t t = 0; t < T; ++t) {
    if (h.txs[t].session_prev) add_edge(*h.txs[t].session_prev, t);
    for (const HistoryRead& r : h.txs[t].reads) {
      if (r.source == ReadSource::ws) continue;
      if (auto w = writer(r.version)) add_edge(*w, t);
    }
  }

  // Kahn's algorithm, ties broken by completion order for determinism.
  auto later = [&](std::size_t a, std::size_t b) {
    return std::tie(h.txs[a].end_seq, h.txs[a].start_seq) > std::tie(h.txs[b].end_seq, h.txs[b].start_seq);
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t t = 0; t < T; ++t) {
    if (indegree[t] == 0) ready.push(t);
  }
  std::vector<bool> done(T, false);
  while (!ready.empty()) {
    std::size_t t = ready.top();
    ready.pop();
    done[t] = true;
    order.push_back(t);
    for (std::size_t s : out[t]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() < T) {
    cycle = true;
    std::vector<std::size_t> rest;
    for (std::size_t t = 0; t < T; ++t) {
      if (!done[t]) rest.push_back(t);
    }
    std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return later(b, a); });
    order.insert(order.end(), rest.begin(), rest.end());
  }

  dep.assign(T, {});
  start.assign(T, {});
  auto join_full = [&](std::vector<VersionRank>& acc, std::size_t w) {
    if (dep[w].empty()) return;  // not yet computed (only on a cycle)
    for (std::size_t k = 0; k < K; ++k) acc[k] = std::max(acc[k], dep[w][k]);
    for (VersionRank v : h.txs[w].writes) acc[h.versions[v].key] = std::max(acc[h.versions[v].key], v);
  };
  for (std::size_t t : order) {
    std::vector<VersionRank> past(K, kAbsent);
    if (h.txs[t].session_prev) join_full(past, *h.txs[t].session_prev);
    start[t] = past;
    for (const HistoryRead& r : h.txs[t].reads) {
      if (r.source == ReadSource::ws) continue;
      if (auto w = writer(r.version); w && *w != t) join_full(past, *w);
    }
    dep[t] = std::move(past);
  }
}

void report_problems(const History& h, CheckResult& res) {
  for (const std::string& p : h.problems) res.fail("malformed trace: " + p);
}

bool is_store_read(const HistoryRead& r) { return r.source == ReadSource::store; }

CheckResult lemma1(const History& h) {
  CheckResult res{"lemma1_snapshot_below_commit"};
  report_problems(h, res);
  for (const HistoryTx& tx : h.txs) {
    if (!tx.ct) continue;
    ++res.checked;
    if (*tx.ct <= tx.snapshot) {
      res.fail(to_string(tx.id) + ": snapshot " + std::to_string(tx.snapshot) + " not below ct " +
               std::to_string(*tx.ct));
    }
  }
  return res;
}

CheckResult update_time_order(const History& h, const Analysis& a) {
  CheckResult res{"update_time_order"};
  report_problems(h, res);
  if (a.cycle) res.fail("causality among transactions is cyclic");
  for (std::size_t t = 0; t < h.txs.size(); ++t) {
    const HistoryTx& tx = h.txs[t];
    if (!tx.ct || tx.writes.empty()) continue;
    ++res.checked;
    for (VersionRank v : a.dep[t]) {
      if (v == kAbsent) continue;
      if (h.versions[v].stamp.ut >= *tx.ct) {
        res.fail(to_string(tx.id) + " (ct " + std::to_string(*tx.ct) + ") causally follows " + a.describe(v));
        break;
      }
    }
  }
  return res;
}

CheckResult causal_snapshots(const History& h, const Analysis& a) {
  CheckResult res{"causal_snapshots"};
  report_problems(h, res);
  for (std::size_t t = 0; t < h.txs.size(); ++t) {
    const HistoryTx& tx = h.txs[t];
    std::vector<const HistoryRead*> reads;
    for (const HistoryRead& r : tx.reads) {
      if (r.source != ReadSource::ws) reads.push_back(&r);
    }
    for (const HistoryRead* r : reads) {
      ++res.checked;
      const std::string where = to_string(tx.id) + " read of " + h.keys[r->key];
      if (r->unknown) {
        res.fail(where + " returned a version no transaction committed");
        continue;
      }
      if (is_store_read(*r) && r->version != kAbsent && h.versions[r->version].stamp.ut > tx.snapshot) {
        res.fail(where + " returned " + a.describe(r->version) + " above snapshot " + std::to_string(tx.snapshot));
      }
      VersionRank fresh = a.freshest(r->key, tx.snapshot);
      if (r->version < fresh) {
        res.fail(where + " returned " + a.describe(r->version) + " but " + a.describe(fresh) +
                 " is visible at snapshot " + std::to_string(tx.snapshot));
      }
    }
    // Closure: nothing returned may be older than a dependency of anything returned.
    for (const HistoryRead* y : reads) {
      auto w = a.writer(y->version);
      if (!w || *w == t) continue;
      for (const HistoryRead* r : reads) {
        ++res.checked;
        VersionRank need = a.dep[*w][r->key];
        if (r->version < need) {
          res.fail(to_string(tx.id) + " returned " + a.describe(y->version) + " which depends on " + a.describe(need) +
                   " but read " + a.describe(r->version));
        }
      }
    }
  }
  return res;
}

CheckResult atomicity(const History& h, const Analysis& a) {
  CheckResult res{"atomicity"};
  report_problems(h, res);
  for (std::size_t t = 0; t < h.txs.size(); ++t) {
    const HistoryTx& tx = h.txs[t];
    for (const HistoryRead& y : tx.reads) {
      if (y.source == ReadSource::ws) continue;
      auto w = a.writer(y.version);
      if (!w || *w == t) continue;
      for (VersionRank z : h.txs[*w].writes) {
        for (const HistoryRead& r : tx.reads) {
          if (r.source == ReadSource::ws || r.key != h.versions[z].key) continue;
          ++res.checked;
          if (r.version < z) {
            res.fail(to_string(tx.id) + " saw " + a.describe(y.version) + " but read " + a.describe(r.version) +
                     " instead of " + a.describe(z) + " from the same transaction");
          }
        }
      }
    }
  }
  return res;
}

CheckResult sessions(const History& h, const Analysis& a) {
  CheckResult res{"sessions"};
  report_problems(h, res);
  for (std::size_t t = 0; t < h.txs.size(); ++t) {
    const HistoryTx& tx = h.txs[t];
    if (tx.session_prev) {
      ++res.checked;
      const HistoryTx& prev = h.txs[*tx.session_prev];
      if (tx.snapshot < prev.snapshot) {
        res.fail("session " + std::to_string(tx.session) + ": snapshot of " + to_string(tx.id) + " (" +
                 std::to_string(tx.snapshot) + ") below previous " + std::to_string(prev.snapshot));
      }
    }
    std::map<std::uint32_t, VersionRank> first;
    for (const HistoryRead& r : tx.reads) {
      if (r.source == ReadSource::ws) continue;
      ++res.checked;
      VersionRank need = a.start[t][r.key];
      if (r.version < need) {
        res.fail("session " + std::to_string(tx.session) + ": " + to_string(tx.id) + " read " +
                 a.describe(r.version) + " older than " + a.describe(need) + " from its own past");
      }
      auto [it, inserted] = first.emplace(r.key, r.version);
      if (!inserted && it->second != r.version) {
        res.fail(to_string(tx.id) + ": repeated read of " + h.keys[r.key] + " returned " + a.describe(r.version) +
                 " after " + a.describe(it->second));
      }
    }
  }
  return res;
}

}  // namespace

CheckResult check_lemma1(const Trace& trace) { return lemma1(History::build(trace)); }

CheckResult check_update_time_order(const Trace& trace) {
  History h = History::build(trace);
  Analysis a(h);
  return update_time_order(h, a);
}

CheckResult check_causal_snapshots(const Trace& trace) {
  History h = History::build(trace);
  Analysis a(h);
  return causal_snapshots(h, a);
}

CheckResult check_atomicity(const Trace& trace) {
  History h = History::build(trace);
  Analysis a(h);
  return atomicity(h, a);
}

CheckResult check_sessions(const Trace& trace) {
  History h = History::build(trace);
  Analysis a(h);
  return sessions(h, a);
}

CheckResult check_channels(const Trace& trace) {
  CheckResult res{"channels"};
  std::map<std::pair<ServerRef, DcId>, Timestamp> last;
  std::map<ServerRef, Timestamp> floor;
  for (PartitionId n = 0; n < trace.header.placement.size(); ++n) {
    for (DcId d : trace.header.placement[n]) floor[ServerRef{d, n}] = 0;
  }
  std::multiset<Timestamp> floors;
  for (const auto& [s, f] : floor) floors.insert(f);

  for (const TraceEvent& ev : trace.events) {
    if (ev.kind == TraceKind::channel_recv) {
      ++res.checked;
      auto [it, inserted] = last.emplace(std::make_pair(ev.server, ev.from_dc), ev.value);
      if (!inserted) {
        if (ev.value <= it->second) {
          res.fail("server " + std::to_string(ev.server.dc) + "." + std::to_string(ev.server.partition) +
                   " received " + std::to_string(ev.value) + " from DC " + std::to_string(ev.from_dc) + " after " +
                   std::to_string(it->second));
        }
        it->second = ev.value;
      }
    } else if (ev.kind == TraceKind::floor_advance) {
      auto it = floor.find(ev.server);
      if (it == floor.end()) {
        res.fail("floor reported by unknown server " + std::to_string(ev.server.dc) + "." +
                 std::to_string(ev.server.partition));
        continue;
      }
      floors.erase(floors.find(it->second));
      it->second = ev.value;
      floors.insert(ev.value);
    } else if (ev.kind == TraceKind::ust_advance) {
      ++res.checked;
      Timestamp min_floor = floors.empty() ? 0 : *floors.begin();
      if (ev.value > min_floor) {
        res.fail("server " + std::to_string(ev.server.dc) + "." + std::to_string(ev.server.partition) +
                 " raised ust to " + std::to_string(ev.value) + " while the lowest applied floor was " +
                 std::to_string(min_floor));
      }
    }
  }
  return res;
}

// ---- report ----

bool CheckReport::pass() const {
  bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  return ok && (!oracle || oracle->pass);
}

bool CheckReport::snapshot_pass() const {
  for (const CheckResult& r : results) {
    if (r.name != "channels" && !r.pass) return false;
  }
  return true;
}

namespace {

nlohmann::json result_json(const CheckResult& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"checked", r.checked},
          {"violations", r.violations},
          {"examples", r.examples}};
}

void result_text(std::ostringstream& os, const CheckResult& r) {
  os << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.checked << " checked, " << r.violations
     << " violations)\n";
  for (const std::string& e : r.examples) os << "    " << e << '\n';
}

}  // namespace

std::string CheckReport::to_json() const {
  nlohmann::json doc;
  doc["pass"] = pass();
  doc["checks"] = nlohmann::json::array();
  for (const CheckResult& r : results) doc["checks"].push_back(result_json(r));
  if (oracle) doc["oracle"] = result_json(*oracle);
  return doc.dump(2);
}

std::string CheckReport::to_text() const {
  std::ostringstream os;
  for (const CheckResult& r : results) result_text(os, r);
  if (oracle) result_text(os, *oracle);
  os << (pass() ? "trace OK\n" : "trace REJECTED\n");
  return os.str();
}

CheckReport check_all(const Trace& trace, std::size_t oracle_bound) {
  CheckReport report;
  History h = History::build(trace);
  Analysis a(h);
  report.results.push_back(lemma1(h));
  report.results.push_back(update_time_order(h, a));
  report.results.push_back(causal_snapshots(h, a));
  report.results.push_back(atomicity(h, a));
  report.results.push_back(sessions(h, a));
  report.results.push_back(check_channels(trace));
  if (oracle_bound > 0 && h.versions.size() <= oracle_bound) report.oracle = brute_force_oracle(trace, oracle_bound);
  return report;
}

}  // namespace paris
