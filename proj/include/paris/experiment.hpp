#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "paris/sim.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"
#include "paris/workload.hpp"

namespace paris {

struct ExperimentConfig {
  ClusterConfig cluster;
  WorkloadSpec workload;
  std::uint64_t seed = 1;
  SimOptions sim;
  /// Invoked once after the simulator is built, before any event runs.
  std::function<void(Simulator&)> setup;
};

/// Counters and latency samples of one run. Times are simulated microseconds.
struct Metrics {
  std::uint64_t transactions = 0;  // completed, update and read-only
  std::uint64_t update_transactions = 0;
  std::uint64_t read_only_transactions = 0;
  std::uint64_t stale_aborts = 0;
  std::uint64_t unfinished = 0;
  double throughput_tx_per_s = 0;

  std::vector<Timestamp> tx_latency;
  std::vector<Timestamp> read_latency;
  std::vector<Timestamp> commit_latency;

  std::uint64_t slice_reads = 0;
  std::uint64_t wait_queue_insertions = 0;
  std::uint64_t blocked_reads = 0;
  std::uint64_t blocked_time_us = 0;
  double mean_blocking_us() const {
    return blocked_reads == 0 ? 0.0 : static_cast<double>(blocked_time_us) / static_cast<double>(blocked_reads);
  }

  std::uint64_t heartbeats = 0;
  std::uint64_t gc_rounds = 0;
  std::uint64_t gc_removed = 0;
};

struct ExperimentResult {
  Metrics metrics;
  SimStats sim;
  Trace trace;
  std::string digest;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Summary statistics of a latency sample.
struct LatencySummary {
  std::size_t count = 0;
  double mean = 0;
  Timestamp p50 = 0;
  Timestamp p90 = 0;
  Timestamp p99 = 0;
  Timestamp max = 0;
};
LatencySummary summarize(std::vector<Timestamp> samples);

/// Writes trace.tsv, report.json, summary.csv and latency.csv into dir.
void write_experiment_outputs(const std::string& dir, const ExperimentConfig& config, const ExperimentResult& result);

std::string metrics_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Workload section of a JSON config file ("workload": {...}); missing
/// fields keep their defaults.
WorkloadSpec parse_workload_spec(const std::string& json_text);

}  // namespace paris
