#include "paris/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "paris/client.hpp"

namespace paris {

namespace {

/// Closed-loop driver for one client session.
class SessionDriver {
 public:
  SessionDriver(Simulator& sim, const ExperimentConfig& cfg, const KeyUniverse& universe,
                const ZipfianGenerator& zipf, Metrics& metrics, DcId dc, SessionId id, PartitionId coordinator)
      : sim_(sim),
        cfg_(cfg),
        universe_(universe),
        zipf_(zipf),
        metrics_(metrics),
        dc_(dc),
        rng_(session_seed(cfg.seed, id)),
        session_(sim.topology(), dc, id, coordinator, &sim.recorder(), [&sim] { return sim.now(); }) {
    sim_.attach_client(session_.address(), [this](const Address&, const Message& msg) { on_message(msg); });
  }

  void begin() { start_next(); }
  bool busy() const { return session_.in_transaction() || session_.awaiting_reply(); }

 private:
  void start_next() {
    if (sim_.now() >= cfg_.workload.duration_us) return;
    plan_ = generate_transaction(cfg_.workload, sim_.topology(), universe_, zipf_, dc_, rng_);
    tx_started_ = sim_.now();
    sim_.send(session_.address(), session_.coordinator(), session_.begin_start());
  }

  void next_after_think() {
    if (cfg_.workload.think_time_us == 0) {
      start_next();
    } else {
      sim_.schedule(sim_.now() + cfg_.workload.think_time_us, [this] { start_next(); });
    }
  }

  void complete_tx(bool update) {
    if (tx_started_ < cfg_.workload.duration_us) {
      ++metrics_.transactions;
      ++(update ? metrics_.update_transactions : metrics_.read_only_transactions);
      metrics_.tx_latency.push_back(sim_.now() - tx_started_);
    }
    next_after_think();
  }

  void do_writes() {
    if (plan_.writes.empty()) {
      session_.finish();
      complete_tx(false);
      return;
    }
    WriteSet ws;
    for (const Key& k : plan_.writes) ws[k] = random_value(cfg_.workload.value_size, rng_);
    session_.write(ws);
    op_started_ = sim_.now();
    sim_.send(session_.address(), session_.coordinator(), session_.begin_commit());
  }

  void on_message(const Message& msg) {
    if (const auto* err = std::get_if<ErrorResp>(&msg)) {
      try {
        session_.fail(*err);
      } catch (const StaleTransaction&) {
        ++metrics_.stale_aborts;
      }
      next_after_think();
    } else if (const auto* start = std::get_if<StartTxResp>(&msg)) {
      session_.complete_start(*start);
      auto step = session_.begin_read(plan_.reads);
      if (step.request) {
        op_started_ = sim_.now();
        sim_.send(session_.address(), session_.coordinator(), std::move(*step.request));
      } else {
        do_writes();
      }
    } else if (const auto* read = std::get_if<ReadResp>(&msg)) {
      session_.complete_read(*read);
      metrics_.read_latency.push_back(sim_.now() - op_started_);
      do_writes();
    } else if (const auto* commit = std::get_if<CommitResp>(&msg)) {
      session_.complete_commit(*commit);
      metrics_.commit_latency.push_back(sim_.now() - op_started_);
      complete_tx(true);
    } else {
      throw ProtocolFault(std::string("client received ") + message_name(msg));
    }
  }

  Simulator& sim_;
  const ExperimentConfig& cfg_;
  const KeyUniverse& universe_;
  const ZipfianGenerator& zipf_;
  Metrics& metrics_;
  DcId dc_;
  std::mt19937_64 rng_;
  ClientSession session_;
  TxPlan plan_;
  Timestamp tx_started_ = 0;
  Timestamp op_started_ = 0;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.cluster.validate();
  config.workload.validate();
  Simulator sim(config.cluster, config.seed, config.sim);
  if (config.setup) config.setup(sim);

  ExperimentResult result;
  Metrics& m = result.metrics;
  KeyUniverse universe(config.cluster.partitions, config.workload.keys_per_partition);
  ZipfianGenerator zipf(config.workload.keys_per_partition, config.workload.zipf_theta);

  std::vector<std::unique_ptr<SessionDriver>> drivers;
  const Topology& topo = sim.topology();
  for (DcId dc : topo.active_dcs()) {
    const auto& local = topo.partitions_in(dc);
    for (std::uint32_t i = 0; i < config.workload.sessions_per_dc; ++i) {
      SessionId id = dc * config.workload.sessions_per_dc + i;
      drivers.push_back(std::make_unique<SessionDriver>(sim, config, universe, zipf, m, dc, id, local[i % local.size()]));
    }
  }
  for (auto& d : drivers) sim.schedule(0, [p = d.get()] { p->begin(); });

  sim.run_until(config.workload.duration_us + config.workload.drain_us);

  for (const auto& d : drivers) m.unfinished += d->busy() ? 1 : 0;
  if (config.workload.duration_us > 0) {
    m.throughput_tx_per_s =
        static_cast<double>(m.transactions) * 1e6 / static_cast<double>(config.workload.duration_us);
  }
  for (const Server* s : sim.servers()) {
    const ServerStats& st = s->stats();
    m.slice_reads += st.slice_reads;
    m.wait_queue_insertions += st.wait_queue_insertions;
    m.blocked_reads += st.blocked_reads;
    m.blocked_time_us += st.blocked_time_us;
    m.heartbeats += st.heartbeats_sent;
    m.gc_rounds += st.gc_rounds;
    m.gc_removed += st.gc_removed;
  }
  result.sim = sim.stats();
  result.digest = sim.digest();
  result.trace = sim.recorder().take();
  return result;
}

LatencySummary summarize(std::vector<Timestamp> samples) {
  LatencySummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  auto at = [&](double q) {
    auto idx = static_cast<std::size_t>(q * static_cast<double>(samples.size() - 1) + 0.5);
    return samples[std::min(idx, samples.size() - 1)];
  };
  long double sum = std::accumulate(samples.begin(), samples.end(), static_cast<long double>(0));
  s.mean = static_cast<double>(sum / samples.size());
  s.p50 = at(0.50);
  s.p90 = at(0.90);
  s.p99 = at(0.99);
  s.max = samples.back();
  return s;
}

namespace {

nlohmann::json summary_json(const LatencySummary& s) {
  return {{"count", s.count}, {"mean_us", s.mean}, {"p50_us", s.p50},
          {"p90_us", s.p90},  {"p99_us", s.p99},   {"max_us", s.max}};
}

}  // namespace

std::string metrics_json(const ExperimentConfig& config, const ExperimentResult& result) {
  const Metrics& m = result.metrics;
  nlohmann::json doc;
  doc["protocol"] = to_string(config.cluster.protocol);
  doc["seed"] = config.seed;
  doc["dims"] = {{"dcs", config.cluster.dcs},
                 {"partitions", config.cluster.partitions},
                 {"replication", config.cluster.replication}};
  doc["workload"] = {{"reads_per_tx", config.workload.reads_per_tx},
                     {"writes_per_tx", config.workload.writes_per_tx},
                     {"local_pct", config.workload.local_pct},
                     {"sessions_per_dc", config.workload.sessions_per_dc},
                     {"duration_us", config.workload.duration_us}};
  doc["transactions"] = m.transactions;
  doc["update_transactions"] = m.update_transactions;
  doc["read_only_transactions"] = m.read_only_transactions;
  doc["stale_aborts"] = m.stale_aborts;
  doc["unfinished"] = m.unfinished;
  doc["throughput_tx_per_s_simulated"] = m.throughput_tx_per_s;
  doc["latency"] = {{"transaction", summary_json(summarize(m.tx_latency))},
                    {"read", summary_json(summarize(m.read_latency))},
                    {"commit", summary_json(summarize(m.commit_latency))}};
  doc["slice_reads"] = m.slice_reads;
  doc["wait_queue_insertions"] = m.wait_queue_insertions;
  doc["blocked_reads"] = m.blocked_reads;
  doc["mean_blocking_us"] = m.mean_blocking_us();
  doc["heartbeats"] = m.heartbeats;
  doc["gc_rounds"] = m.gc_rounds;
  doc["gc_removed_versions"] = m.gc_removed;
  doc["messages"] = result.sim.messages;
  doc["messages_by_type"] = result.sim.messages_by_type;
  doc["stability_samples"] = result.sim.stability_samples;
  doc["stability_violations"] = result.sim.stability_violations;
  doc["digest"] = result.digest;
  return doc.dump(2);
}

void write_experiment_outputs(const std::string& dir, const ExperimentConfig& config,
                              const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("trace.tsv");
    write_trace(out, result.trace);
  }
  {
    auto out = open("report.json");
    out << metrics_json(config, result) << '\n';
  }
  {
    const Metrics& m = result.metrics;
    auto out = open("summary.csv");
    out << "metric,value\n";
    out << "protocol," << to_string(config.cluster.protocol) << '\n';
    out << "seed," << config.seed << '\n';
    out << "transactions," << m.transactions << '\n';
    out << "update_transactions," << m.update_transactions << '\n';
    out << "read_only_transactions," << m.read_only_transactions << '\n';
    out << "throughput_tx_per_s_simulated," << m.throughput_tx_per_s << '\n';
    out << "blocked_reads," << m.blocked_reads << '\n';
    out << "mean_blocking_us," << m.mean_blocking_us() << '\n';
    out << "wait_queue_insertions," << m.wait_queue_insertions << '\n';
    out << "stale_aborts," << m.stale_aborts << '\n';
    out << "stability_violations," << result.sim.stability_violations << '\n';
    out << "digest," << result.digest << '\n';
  }
  {
    auto out = open("latency.csv");
    out << "kind,count,mean_us,p50_us,p90_us,p99_us,max_us\n";
    auto row = [&](const char* kind, const std::vector<Timestamp>& v) {
      LatencySummary s = summarize(v);
      out << kind << ',' << s.count << ',' << s.mean << ',' << s.p50 << ',' << s.p90 << ',' << s.p99 << ','
          << s.max << '\n';
    };
    row("transaction", result.metrics.tx_latency);
    row("read", result.metrics.read_latency);
    row("commit", result.metrics.commit_latency);
  }
}

WorkloadSpec parse_workload_spec(const std::string& json_text) {
  WorkloadSpec w;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("workload")) return w;
  const auto& j = doc["workload"];
  try {
    w.reads_per_tx = j.value("reads_per_tx", w.reads_per_tx);
    w.writes_per_tx = j.value("writes_per_tx", w.writes_per_tx);
    w.local_pct = j.value("local_pct", w.local_pct);
    w.partitions_per_tx = j.value("partitions_per_tx", w.partitions_per_tx);
    w.zipf_theta = j.value("zipf_theta", w.zipf_theta);
    w.keys_per_partition = j.value("keys_per_partition", w.keys_per_partition);
    w.value_size = j.value("value_size", w.value_size);
    w.sessions_per_dc = j.value("sessions_per_dc", w.sessions_per_dc);
    w.duration_us = j.value("duration_us", w.duration_us);
    w.drain_us = j.value("drain_us", w.drain_us);
    w.think_time_us = j.value("think_time_us", w.think_time_us);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("workload field has wrong type: ") + e.what());
  }
  w.validate();
  return w;
}

}  // namespace paris
