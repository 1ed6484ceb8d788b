#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "paris/client.hpp"
#include "paris/messages.hpp"
#include "paris/server.hpp"
#include "paris/topology.hpp"
#include "paris/trace.hpp"

namespace paris {

class TcpCluster;

/// One socket endpoint: a listening socket, the inbound connections it
/// accepted, and lazily opened outbound connections (one per destination).
/// Inbound traffic is handled on the endpoint's own thread.
class TcpEndpoint {
 public:
  using Handler = std::function<void(const Address& from, const Message& msg)>;

  TcpEndpoint(TcpCluster& cluster, Address self, std::uint16_t port);
  ~TcpEndpoint();

  TcpEndpoint(const TcpEndpoint&) = delete;
  TcpEndpoint& operator=(const TcpEndpoint&) = delete;

  const Address& self() const { return self_; }
  std::uint16_t port() const { return port_; }

  /// Starts the I/O thread. on_message runs on that thread; on_idle runs
  /// between polls and returns how long the thread may sleep.
  void start(Handler on_message, std::function<std::chrono::microseconds()> on_idle);
  void stop();

  /// Thread-safe; frames are written whole under a per-connection lock.
  void send(const Address& to, const Message& msg);

  std::exception_ptr error() const;

  /// Interrupts the poll so on_idle runs promptly.
  void wake();

 private:
  struct Outbound {
    int fd = -1;
    std::mutex mu;
  };
  struct Inbound {
    int fd = -1;
    std::vector<std::uint8_t> buffer;
    std::optional<Address> peer;
  };

  void run();
  void read_from(Inbound& conn, bool& closed);
  Outbound& outbound(const Address& to);

  TcpCluster& cluster_;
  Address self_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t port_ = 0;

  Handler on_message_;
  std::function<std::chrono::microseconds()> on_idle_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};

  std::mutex out_mu_;
  std::map<Address, std::unique_ptr<Outbound>> out_;
  std::vector<Inbound> in_;

  mutable std::mutex err_mu_;
  std::exception_ptr error_;
};

/// Client session over sockets with a blocking request/reply API.
class TcpClient {
 public:
  TcpClient(TcpCluster& cluster, DcId dc, SessionId session, PartitionId coordinator);
  ~TcpClient();

  Timestamp start() { return api_.start(); }
  ReadResult read(const std::vector<Key>& keys) { return api_.read(keys); }
  void write(const WriteSet& pairs) { api_.write(pairs); }
  Timestamp commit() { return api_.commit(); }
  void finish() { api_.finish(); }
  ClientSession& session() { return session_; }

 private:
  Message rpc(const Address& to, Message request);

  TcpCluster& cluster_;
  ClientSession session_;
  std::unique_ptr<TcpEndpoint> endpoint_;
  BlockingClient api_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> replies_;
};

/// A whole cluster on the loopback interface: one endpoint and state-machine
/// thread per partition replica, timers driven by the steady clock.
class TcpCluster {
 public:
  explicit TcpCluster(ClusterConfig config, TraceSink* trace = nullptr);
  ~TcpCluster();

  TcpCluster(const TcpCluster&) = delete;
  TcpCluster& operator=(const TcpCluster&) = delete;

  void start();
  void stop();

  const Topology& topology() const { return topology_; }
  TraceSink* trace() const { return trace_; }

  /// Microseconds since the cluster was created.
  Timestamp clock() const;

  /// Registry of listening ports; thread-safe.
  void register_endpoint(const Address& a, std::uint16_t port);
  std::uint16_t port_of(const Address& a) const;
  /// Port to bind for a, or 0 for an ephemeral one.
  std::uint16_t configured_port(const Address& a) const;

  /// Rethrows the first failure seen on any server thread.
  void check() const;

  /// Runs fn on the thread owning server (dc, n) state and waits for it.
  void inspect(DcId dc, PartitionId n, const std::function<void(const Server&)>& fn);

 private:
  struct Node;

  Topology topology_;
  TraceSink* trace_;
  std::chrono::steady_clock::time_point epoch_;
  std::vector<std::unique_ptr<Node>> nodes_;
  mutable std::mutex registry_mu_;
  std::map<Address, std::uint16_t> registry_;
  bool running_ = false;
};

}  // namespace paris
