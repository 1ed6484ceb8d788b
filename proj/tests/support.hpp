#pragma once

#include <random>
#include <utility>
#include <vector>

#include "paris/client.hpp"
#include "paris/server.hpp"
#include "paris/sim.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"

namespace paris::testing {

/// Hand-driven server environment: the test sets the clock and inspects
/// every message the server sent.
class FakeEnv : public ServerEnv {
 public:
  explicit FakeEnv(TraceSink* sink = nullptr) : sink_(sink) {}

  Timestamp physical_clock() override { return physical; }
  Timestamp now() override { return time; }
  void send(const Address& to, Message msg) override { sent.emplace_back(to, std::move(msg)); }
  TraceSink* trace() override { return sink_; }

  template <class T>
  std::vector<std::pair<Address, T>> sent_of() const {
    std::vector<std::pair<Address, T>> out;
    for (const auto& [to, m] : sent) {
      if (auto* p = std::get_if<T>(&m)) out.emplace_back(to, *p);
    }
    return out;
  }

  Timestamp physical = 0;
  Timestamp time = 0;
  std::vector<std::pair<Address, Message>> sent;

 private:
  TraceSink* sink_;
};

/// Config with constant latencies and no skew.
inline ClusterConfig small_config(std::uint32_t dcs, std::uint32_t partitions, std::uint32_t replication,
                                  Protocol protocol = Protocol::paris) {
  ClusterConfig c;
  c.protocol = protocol;
  c.dcs = dcs;
  c.partitions = partitions;
  c.replication = replication;
  c.placement = ring_placement(dcs, partitions, replication);
  c.latency = uniform_latency_matrix(dcs, 100, 10000);
  c.skew_bound_us = 0;
  return c;
}

/// First key (k0, k1, ...) that hashes to partition n.
inline Key key_in(const Topology& t, PartitionId n, int skip = 0) {
  for (int i = 0;; ++i) {
    Key k = "k" + std::to_string(i);
    if (t.partition_of(k) == n && skip-- == 0) return k;
  }
}

/// Blocking client whose rpc runs the simulator until the reply arrives.
struct SimClient {
  Simulator& sim;
  Address self;
  std::optional<Message> reply;
  std::uint64_t requests = 0;
  ClientSession session;
  BlockingClient api;

  SimClient(Simulator& s, DcId dc, SessionId id)
      : sim(s),
        self(Address::client(dc, id)),
        session(s.topology(), dc, id, s.topology().partitions_in(dc).front(), &s.recorder(), [&s] { return s.now(); }),
        api(session, [this](const Address& to, Message m) {
          ++requests;
          reply.reset();
          sim.send(self, to, std::move(m));
          while (!reply) sim.run_until(sim.now() + 100);
          return *reply;
        }) {
    sim.attach_client(self, [this](const Address&, const Message& m) { reply = m; });
  }
};

}  // namespace paris::testing
