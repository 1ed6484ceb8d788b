#include <algorithm>
#include <cstdint>

#include "paris/checker.hpp"

namespace paris {

// Independent decision procedure for small histories. It shares only the
// trace-to-history parsing with the scalable checks: causality is an explicit
// reachability relation over transactions, and every read set is tested
// against all causally closed, atomic sets of versions.
CheckResult brute_force_oracle(const Trace& trace, std::size_t bound) {
  History h = History::build(trace);
  const std::size_t V = h.versions.size();
  if (V > bound) {
    throw OracleBoundExceeded("history has " + std::to_string(V) + " versions, oracle bound is " +
                              std::to_string(bound));
  }
  CheckResult res{"oracle"};
  for (const std::string& p : h.problems) res.fail("malformed trace: " + p);

  const std::size_t T = h.txs.size();
  auto writer_of = [&](VersionRank v) -> std::optional<std::size_t> {
    if (v < 0 || h.versions[v].tx == ~std::size_t{0}) return std::nullopt;
    return h.versions[v].tx;
  };

  // reach[a][b]: a path of at least one edge from transaction a to b.
  std::vector<std::vector<bool>> reach(T, std::vector<bool>(T, false));
  for (std::size_t t = 0; t < T; ++t) {
    if (h.txs[t].session_prev) reach[*h.txs[t].session_prev][t] = true;
    for (const HistoryRead& r : h.txs[t].reads) {
      if (r.source == ReadSource::ws) continue;
      if (auto w = writer_of(r.version)) reach[*w][t] = true;
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t i = 0; i < T; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < T; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }

  // X precedes Y when X's writer reaches Y's writer; writes of one
  // transaction are unordered unless it lies on a cycle.
  auto precedes = [&](std::size_t x, std::size_t y) {
    std::size_t a = h.versions[x].tx;
    std::size_t b = h.versions[y].tx;
    if (a == ~std::size_t{0} || b == ~std::size_t{0}) return false;
    return static_cast<bool>(reach[a][b]);
  };

  for (std::size_t x = 0; x < V; ++x) {
    for (std::size_t y = 0; y < V; ++y) {
      if (precedes(x, y) && !(h.versions[x].stamp.ut < h.versions[y].stamp.ut)) {
        res.fail("update order: " + h.keys[h.versions[x].key] + "@" + to_string(h.versions[x].stamp) +
                 " precedes " + h.keys[h.versions[y].key] + "@" + to_string(h.versions[y].stamp));
      }
    }
  }

  for (const HistoryTx& tx : h.txs) {
    if (tx.ct && *tx.ct <= tx.snapshot) res.fail("lemma1: " + to_string(tx.id));
    if (tx.session_prev && tx.snapshot < h.txs[*tx.session_prev].snapshot) {
      res.fail("snapshot regression in session " + std::to_string(tx.session));
    }
  }

  // need[y]: versions that must accompany y in any admissible set.
  using Mask = std::uint32_t;
  std::vector<Mask> need(V, 0);
  for (std::size_t y = 0; y < V; ++y) {
    for (std::size_t x = 0; x < V; ++x) {
      bool same_tx = h.versions[x].tx == h.versions[y].tx && h.versions[x].tx != ~std::size_t{0};
      if (same_tx || precedes(x, y)) need[y] |= Mask{1} << x;
    }
  }
  std::vector<Mask> closed;
  for (Mask m = 0; m < (Mask{1} << V); ++m) {
    bool ok = true;
    for (std::size_t y = 0; y < V && ok; ++y) {
      if ((m >> y & 1) && (need[y] & ~m) != 0) ok = false;
    }
    if (ok) closed.push_back(m);
  }

  for (std::size_t t = 0; t < T; ++t) {
    const HistoryTx& tx = h.txs[t];
    Mask required = 0;
    for (std::size_t x = 0; x < V; ++x) {
      if (h.versions[x].stamp.ut <= tx.snapshot) required |= Mask{1} << x;
      std::size_t w = h.versions[x].tx;
      if (w != ~std::size_t{0} && reach[w][t]) required |= Mask{1} << x;
    }
    std::vector<std::pair<std::uint32_t, VersionRank>> wanted;
    bool feasible = true;
    for (const HistoryRead& r : tx.reads) {
      if (r.source == ReadSource::ws) continue;
      if (r.unknown) feasible = false;
      if (r.source == ReadSource::store && r.version != kAbsent && h.versions[r.version].stamp.ut > tx.snapshot) {
        feasible = false;
      }
      wanted.emplace_back(r.key, r.version);
    }
    if (wanted.empty() && feasible) continue;

    bool found = false;
    for (Mask m : closed) {
      if (!feasible || (m & required) != required) continue;
      bool match = true;
      for (const auto& [key, version] : wanted) {
        VersionRank top = kAbsent;
        for (std::size_t x = 0; x < V; ++x) {
          if ((m >> x & 1) && h.versions[x].key == key) top = static_cast<VersionRank>(x);
        }
        if (top != version) {
          match = false;
          break;
        }
      }
      if (match) {
        found = true;
        break;
      }
    }
    if (!found) res.fail("no causal snapshot explains the reads of " + to_string(tx.id));
  }
  res.checked = T;
  return res;
}

}  // namespace paris
