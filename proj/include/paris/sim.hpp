#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "paris/messages.hpp"
#include "paris/server.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"

namespace paris {

struct SimOptions {
  bool trace = true;
  /// Sample max ust against the global applied floor every Δ_U.
  bool check_stability = true;
  /// Compare snapshot reads before and after every garbage-collection pass.
  bool audit_gc = false;
};

struct SimStats {
  std::uint64_t events = 0;
  std::uint64_t messages = 0;
  std::uint64_t held_messages = 0;
  std::map<std::string, std::uint64_t> messages_by_type;
  std::uint64_t stability_samples = 0;
  std::uint64_t stability_violations = 0;
  std::uint64_t gc_audit_reads = 0;
  std::uint64_t gc_audit_diffs = 0;
};

/// Deterministic discrete-event harness. All servers of the cluster live in
/// one process and advance on a single simulated clock; channels are
/// lossless and FIFO; every random choice comes from one seeded generator.
class Simulator {
 public:
  using ClientHandler = std::function<void(const Address& from, const Message& msg)>;

  Simulator(ClusterConfig config, std::uint64_t seed, SimOptions options = {});
  ~Simulator();

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const Topology& topology() const { return topology_; }
  const ClusterConfig& config() const { return topology_.config(); }
  Timestamp now() const { return now_; }

  Server& server(DcId dc, PartitionId n);
  std::vector<Server*> servers();
  std::vector<const Server*> servers() const;

  /// Per-server constant clock offset and the resulting clock reading.
  std::int64_t skew(DcId dc, PartitionId n) const;
  Timestamp physical_clock(DcId dc, PartitionId n) const;

  /// Registers a client endpoint; replies addressed to it invoke handler.
  void attach_client(const Address& client, ClientHandler handler);

  /// Enqueues msg on the (from, to) channel.
  void send(const Address& from, const Address& to, Message msg);
  /// Runs fn at simulated time at (>= now).
  void schedule(Timestamp at, std::function<void()> fn);

  /// Processes every event with delivery time <= t, then sets now to t.
  void run_until(Timestamp t);

  /// From time at onwards, messages between dc and any other DC are held
  /// instead of delivered.
  void sever_dc(DcId dc, Timestamp at);

  TraceRecorder& recorder() { return *recorder_; }
  const SimStats& stats() const { return stats_; }
  std::mt19937_64& rng() { return rng_; }

  /// Hash of the trace so far plus every server's observable state.
  std::string digest() const;

 private:
  struct Host;
  enum class EventKind : std::uint8_t { message, timer, callback, sample };
  enum class TimerKind : std::uint8_t { apply, gsv, ust };
  struct Event {
    EventKind kind = EventKind::message;
    Address from;
    Address to;
    std::optional<Message> msg;
    TimerKind timer = TimerKind::apply;
    std::function<void()> fn;
  };

  void push(Timestamp at, Event ev);
  void dispatch(Event& ev);
  void fire_timer(const Address& at, TimerKind kind);
  void sample_stability();
  Timestamp sample_latency(const Address& from, const Address& to);
  bool crosses_severed(const Address& from, const Address& to) const;
  std::size_t index_of(DcId dc, PartitionId n) const;
  void audit_gc(const Server& s, Timestamp s_old, bool after);

  Topology topology_;
  SimOptions options_;
  std::mt19937_64 rng_;
  Timestamp now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::map<std::pair<Timestamp, std::uint64_t>, Event> queue_;
  std::map<std::pair<Address, Address>, Timestamp> channel_tail_;

  std::unique_ptr<TraceRecorder> recorder_;
  std::vector<std::unique_ptr<Host>> hosts_;
  std::vector<std::int64_t> skew_;
  std::vector<double> drift_;
  std::map<Address, ClientHandler> clients_;

  std::optional<DcId> severed_dc_;
  Timestamp severed_at_ = 0;
  std::vector<std::pair<Address, Address>> held_;

  // GC audit: reads recorded before a pass, keyed by (snapshot, key).
  std::map<std::pair<Timestamp, Key>, std::optional<Version>> gc_before_;

  SimStats stats_;
};

}  // namespace paris
