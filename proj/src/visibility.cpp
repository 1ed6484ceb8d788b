#include "paris/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "paris/topology.hpp"

namespace paris {

namespace {

/// Monotone step function recorded as (time, value) at each increase.
using Steps = std::vector<std::pair<Timestamp, Timestamp>>;

// First time the function reaches at least v, or kNoTimestamp.
Timestamp first_reach(const Steps& steps, Timestamp v) {
  auto it = std::lower_bound(steps.begin(), steps.end(), v,
                             [](const std::pair<Timestamp, Timestamp>& s, Timestamp x) { return s.second < x; });
  return it == steps.end() ? kNoTimestamp : it->first;
}

Topology topology_from_header(const TraceHeader& h) {
  ClusterConfig c;
  c.protocol = h.protocol;
  c.dcs = h.dcs;
  c.partitions = h.partitions;
  c.replication = h.placement.empty() ? 1 : static_cast<std::uint32_t>(h.placement.front().size());
  c.placement = h.placement;
  c.latency = uniform_latency_matrix(h.dcs, 0, 0);
  return Topology(c);
}

}  // namespace

VisibilityReport visibility_latency(const Trace& trace) {
  VisibilityReport report;
  if (trace.header.dcs == 0) return report;
  Topology topo = topology_from_header(trace.header);
  const std::uint32_t N = topo.partitions();

  std::map<TxId, std::uint64_t> tx_index;
  std::map<SessionId, std::uint64_t> next_index;
  std::vector<Timestamp> ust(static_cast<std::size_t>(topo.dcs()) * N, 0);
  std::vector<Steps> dc_ust(topo.dcs());
  std::vector<Steps> floors(static_cast<std::size_t>(topo.dcs()) * N);
  std::vector<const TraceEvent*> commits;

  for (const TraceEvent& ev : trace.events) {
    switch (ev.kind) {
      case TraceKind::start_tx:
        tx_index[ev.tx] = next_index[ev.session]++;
        break;
      case TraceKind::commit_done:
        commits.push_back(&ev);
        break;
      case TraceKind::ust_advance: {
        ust[ev.server.dc * N + ev.server.partition] = ev.value;
        Timestamp m = kNoTimestamp;
        for (PartitionId n : topo.partitions_in(ev.server.dc)) m = std::min(m, ust[ev.server.dc * N + n]);
        Steps& s = dc_ust[ev.server.dc];
        if (s.empty() || m > s.back().second) s.emplace_back(ev.time, m);
        break;
      }
      case TraceKind::floor_advance:
        floors[ev.server.dc * N + ev.server.partition].emplace_back(ev.time, ev.value);
        break;
      default:
        break;
    }
  }

  std::map<PartitionId, std::vector<Timestamp>> per_partition;
  for (const TraceEvent* c : commits) {
    auto idx = tx_index.find(c->tx);
    for (const TraceWrite& w : c->writes) {
      PartitionId n = topo.partition_of(w.key);
      for (DcId d : topo.active_dcs()) {
        if (d == w.sr) continue;
        Timestamp visible;
        if (trace.header.protocol == Protocol::paris) {
          visible = first_reach(dc_ust[d], c->ct);
        } else {
          DcId serving = topo.target_dc_for_partition(n, d);
          visible = first_reach(floors[serving * N + n], c->ct);
        }
        if (visible == kNoTimestamp) {
          ++report.unresolved;
          continue;
        }
        VisibilitySample s;
        s.session = c->session;
        s.tx_index = idx == tx_index.end() ? 0 : idx->second;
        s.key = w.key;
        s.partition = n;
        s.dc = d;
        s.commit_time = c->time;
        s.latency = visible > c->time ? visible - c->time : 0;
        per_partition[n].push_back(s.latency);
        report.samples.push_back(std::move(s));
      }
    }
  }

  if (!per_partition.empty()) {
    report.cdf.assign(100, 0.0);
    for (auto& [n, lat] : per_partition) {
      std::sort(lat.begin(), lat.end());
      for (int p = 1; p <= 100; ++p) {
        auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(lat.size())));
        report.cdf[p - 1] += static_cast<double>(lat[std::max<std::size_t>(rank, 1) - 1]);
      }
    }
    for (double& v : report.cdf) v /= static_cast<double>(per_partition.size());
  }
  return report;
}

std::string visibility_cdf_csv(const VisibilityReport& report) {
  std::ostringstream os;
  os << "percentile,latency_us\n";
  for (std::size_t i = 0; i < report.cdf.size(); ++i) os << (i + 1) << ',' << report.cdf[i] << '\n';
  return os.str();
}

}  // namespace paris
