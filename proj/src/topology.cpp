#include "paris/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace paris {

using nlohmann::json;

std::string to_string(Protocol p) { return p == Protocol::paris ? "paris" : "bpr"; }

Protocol parse_protocol(const std::string& text) {
  if (text == "paris") return Protocol::paris;
  if (text == "bpr") return Protocol::bpr;
  throw ConfigError("unknown protocol '" + text + "' (expected paris or bpr)");
}

void ClusterConfig::validate() const {
  if (dcs == 0) throw ConfigError("dims.dcs must be at least 1");
  if (partitions == 0) throw ConfigError("dims.partitions must be at least 1");
  if (replication == 0 || replication > dcs) {
    throw ConfigError("dims.replication must satisfy 1 <= R <= M");
  }
  if (tree_fanout == 0) throw ConfigError("dims.tree_fanout must be at least 1");
  if (placement.size() != partitions) {
    throw ConfigError("placement must have one row per partition");
  }
  for (std::size_t n = 0; n < placement.size(); ++n) {
    const auto& row = placement[n];
    if (row.size() != replication) {
      throw ConfigError("placement row " + std::to_string(n) + " must list exactly R DCs");
    }
    std::set<DcId> distinct(row.begin(), row.end());
    if (distinct.size() != row.size()) {
      throw ConfigError("placement row " + std::to_string(n) + " repeats a DC");
    }
    for (DcId dc : row) {
      if (dc >= dcs) throw ConfigError("placement row " + std::to_string(n) + " names unknown DC");
    }
  }
  if (delta_replicate_us == 0 || delta_gsv_us == 0 || delta_ust_us == 0) {
    throw ConfigError("intervals must be positive");
  }
  if (latency.size() != dcs) throw ConfigError("latency matrix must be M x M");
  for (const auto& row : latency) {
    if (row.size() != dcs) throw ConfigError("latency matrix must be M x M");
    for (const auto& range : row) {
      if (range.min_us > range.max_us) throw ConfigError("latency range has min > max");
    }
  }
  if (drift_ppm < 0.0 || drift_ppm > 1e5) throw ConfigError("skew.drift_ppm out of range");
}

std::vector<std::vector<DcId>> ring_placement(std::uint32_t dcs, std::uint32_t partitions,
                                              std::uint32_t replication) {
  std::vector<std::vector<DcId>> rows(partitions);
  for (std::uint32_t n = 0; n < partitions; ++n) {
    for (std::uint32_t i = 0; i < replication; ++i) rows[n].push_back((n + i) % dcs);
  }
  return rows;
}

std::vector<std::vector<LatencyRange>> geo_latency_matrix(std::uint32_t dcs) {
  // One-way milliseconds: Virginia, Oregon, Ireland, Mumbai, Sydney.
  static constexpr int kBaseMs[5][5] = {
      {0, 35, 38, 90, 100},
      {35, 0, 65, 110, 70},
      {38, 65, 0, 60, 130},
      {90, 110, 60, 0, 75},
      {100, 70, 130, 75, 0},
  };
  std::vector<std::vector<LatencyRange>> m(dcs, std::vector<LatencyRange>(dcs));
  for (std::uint32_t a = 0; a < dcs; ++a) {
    for (std::uint32_t b = 0; b < dcs; ++b) {
      if (a == b) {
        m[a][b] = {100, 500};
        continue;
      }
      Timestamp base_ms = (a < 5 && b < 5) ? kBaseMs[a][b] : 50;
      m[a][b] = {base_ms * 1000, base_ms * 1100};
    }
  }
  return m;
}

std::vector<std::vector<LatencyRange>> uniform_latency_matrix(std::uint32_t dcs, Timestamp intra_us,
                                                              Timestamp inter_us) {
  std::vector<std::vector<LatencyRange>> m(dcs, std::vector<LatencyRange>(dcs));
  for (std::uint32_t a = 0; a < dcs; ++a) {
    for (std::uint32_t b = 0; b < dcs; ++b) {
      Timestamp v = a == b ? intra_us : inter_us;
      m[a][b] = {v, v};
    }
  }
  return m;
}

ClusterConfig desk_config() {
  ClusterConfig c;
  c.dcs = 3;
  c.partitions = 6;
  c.replication = 2;
  c.placement = ring_placement(c.dcs, c.partitions, c.replication);
  c.latency = geo_latency_matrix(c.dcs);
  return c;
}

ClusterConfig large_scale_config() {
  ClusterConfig c;
  c.dcs = 5;
  c.partitions = 45;
  c.replication = 2;
  c.tree_fanout = 3;
  c.placement = ring_placement(c.dcs, c.partitions, c.replication);
  c.latency = geo_latency_matrix(c.dcs);
  return c;
}

namespace {

LatencyRange parse_range(const json& j) {
  if (j.is_number_unsigned()) {
    auto v = j.get<Timestamp>();
    return {v, v};
  }
  if (!j.is_array() || j.size() != 2) throw ConfigError("latency entry must be [min, max] or a number");
  return {j[0].get<Timestamp>(), j[1].get<Timestamp>()};
}

json range_json(const LatencyRange& r) { return json::array({r.min_us, r.max_us}); }

}  // namespace

ClusterConfig parse_cluster_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");

  ClusterConfig c;
  try {
    if (doc.contains("protocol")) c.protocol = parse_protocol(doc["protocol"].get<std::string>());
    if (doc.contains("dims")) {
      const auto& d = doc["dims"];
      c.dcs = d.value("dcs", c.dcs);
      c.partitions = d.value("partitions", c.partitions);
      c.replication = d.value("replication", c.replication);
      c.tree_fanout = d.value("tree_fanout", c.tree_fanout);
    }
    if (doc.contains("placement")) {
      c.placement = doc["placement"].get<std::vector<std::vector<DcId>>>();
    } else {
      c.placement = ring_placement(c.dcs, c.partitions, std::min(c.replication, c.dcs));
    }
    if (doc.contains("intervals_us")) {
      const auto& i = doc["intervals_us"];
      c.delta_replicate_us = i.value("replicate", c.delta_replicate_us);
      c.delta_gsv_us = i.value("gsv", c.delta_gsv_us);
      c.delta_ust_us = i.value("ust", c.delta_ust_us);
      c.tx_idle_timeout_us = i.value("tx_idle_timeout", c.tx_idle_timeout_us);
    }
    c.latency = geo_latency_matrix(c.dcs);
    if (doc.contains("latency_us")) {
      const auto& l = doc["latency_us"];
      if (l.contains("matrix")) {
        const auto& rows = l["matrix"];
        c.latency.assign(rows.size(), {});
        for (std::size_t a = 0; a < rows.size(); ++a) {
          for (const auto& cell : rows[a]) c.latency[a].push_back(parse_range(cell));
        }
      } else {
        for (std::uint32_t a = 0; a < c.dcs; ++a) {
          for (std::uint32_t b = 0; b < c.dcs; ++b) {
            const char* which = a == b ? "intra" : "inter";
            if (l.contains(which)) c.latency[a][b] = parse_range(l[which]);
          }
        }
      }
    }
    if (doc.contains("skew")) {
      const auto& s = doc["skew"];
      c.skew_bound_us = s.value("bound_us", c.skew_bound_us);
      c.drift_ppm = s.value("drift_ppm", c.drift_ppm);
    }
    if (doc.contains("tcp")) {
      const auto& t = doc["tcp"];
      c.tcp.host = t.value("host", c.tcp.host);
      c.tcp.base_port = t.value("base_port", c.tcp.base_port);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ClusterConfig load_cluster_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_cluster_config(buf.str());
}

std::string dump_cluster_config(const ClusterConfig& c) {
  json doc;
  doc["protocol"] = to_string(c.protocol);
  doc["dims"] = {{"dcs", c.dcs},
                 {"partitions", c.partitions},
                 {"replication", c.replication},
                 {"tree_fanout", c.tree_fanout}};
  doc["placement"] = c.placement;
  doc["intervals_us"] = {{"replicate", c.delta_replicate_us},
                         {"gsv", c.delta_gsv_us},
                         {"ust", c.delta_ust_us},
                         {"tx_idle_timeout", c.tx_idle_timeout_us}};
  json rows = json::array();
  for (const auto& row : c.latency) {
    json cells = json::array();
    for (const auto& r : row) cells.push_back(range_json(r));
    rows.push_back(cells);
  }
  doc["latency_us"] = {{"matrix", rows}};
  doc["skew"] = {{"bound_us", c.skew_bound_us}, {"drift_ppm", c.drift_ppm}};
  doc["tcp"] = {{"host", c.tcp.host}, {"base_port", c.tcp.base_port}};
  return doc.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PartitionId partition_of(std::string_view key, std::uint32_t partitions) {
  return static_cast<PartitionId>(fnv1a64(key) % partitions);
}

TreeLinks build_tree(const std::vector<PartitionId>& members, std::uint32_t fanout) {
  TreeLinks t;
  if (members.empty()) return t;
  t.root = members.front();
  std::vector<std::uint32_t> level(members.size(), 0);
  for (std::size_t i = 1; i < members.size(); ++i) {
    std::size_t p = (i - 1) / fanout;
    t.parent[members[i]] = members[p];
    t.children[members[p]].push_back(members[i]);
    level[i] = level[p] + 1;
    t.depth = std::max(t.depth, level[i]);
  }
  return t;
}

Topology::Topology(ClusterConfig config) : config_(std::move(config)) {
  config_.validate();
  hosted_.resize(config_.dcs);
  for (PartitionId n = 0; n < config_.partitions; ++n) {
    for (DcId dc : config_.placement[n]) hosted_[dc].push_back(n);
  }
  trees_.reserve(config_.dcs);
  for (DcId dc = 0; dc < config_.dcs; ++dc) {
    trees_.push_back(build_tree(hosted_[dc], config_.tree_fanout));
    if (!hosted_[dc].empty()) active_dcs_.push_back(dc);
  }
}

PartitionId Topology::partition_of(std::string_view key) const {
  return paris::partition_of(key, config_.partitions);
}

const std::vector<DcId>& Topology::replicas(PartitionId n) const {
  if (n >= config_.partitions) {
    throw RoutingFault("partition " + std::to_string(n) + " out of range");
  }
  return config_.placement[n];
}

bool Topology::hosts(DcId dc, PartitionId n) const {
  const auto& row = replicas(n);
  return std::find(row.begin(), row.end(), dc) != row.end();
}

std::uint32_t Topology::replica_index_for_dc(PartitionId n, DcId dc) const {
  const auto& row = replicas(n);
  auto it = std::find(row.begin(), row.end(), dc);
  if (it == row.end()) {
    throw RoutingFault("DC " + std::to_string(dc) + " does not replicate partition " + std::to_string(n));
  }
  return static_cast<std::uint32_t>(it - row.begin());
}

DcId Topology::target_dc_for_partition(PartitionId n, DcId local_dc, std::uint32_t /*client*/) const {
  const auto& row = replicas(n);
  if (std::find(row.begin(), row.end(), local_dc) != row.end()) return local_dc;
  return row[(local_dc + n) % row.size()];
}

const std::vector<PartitionId>& Topology::partitions_in(DcId dc) const {
  if (dc >= config_.dcs) throw RoutingFault("DC " + std::to_string(dc) + " out of range");
  return hosted_[dc];
}

const TreeLinks& Topology::tree_links(DcId dc) const {
  if (dc >= config_.dcs) throw RoutingFault("DC " + std::to_string(dc) + " out of range");
  return trees_[dc];
}

}  // namespace paris
