#include "paris/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <future>

#include "paris/wire.hpp"

namespace paris {

namespace {

[[noreturn]] void sys_fail(const std::string& what) { throw std::runtime_error(what + ": " + std::strerror(errno)); }

void write_all(int fd, const Bytes& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

sockaddr_in loopback(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ConfigError("bad tcp host " + host);
  return addr;
}

}  // namespace

// ---- TcpEndpoint ----

TcpEndpoint::TcpEndpoint(TcpCluster& cluster, Address self, std::uint16_t port) : cluster_(cluster), self_(self) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) sys_fail("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = loopback(cluster.topology().config().tcp.host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(listen_fd_, 64) < 0) sys_fail("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) sys_fail("getsockname");
  port_ = ntohs(addr.sin_port);
  if (::pipe(wake_pipe_) < 0) sys_fail("pipe");
  ::fcntl(wake_pipe_[0], F_SETFL, O_NONBLOCK);
  ::fcntl(wake_pipe_[1], F_SETFL, O_NONBLOCK);
  cluster_.register_endpoint(self_, port_);
}

TcpEndpoint::~TcpEndpoint() {
  stop();
  for (auto& [a, out] : out_) {
    if (out->fd >= 0) ::close(out->fd);
  }
  for (Inbound& in : in_) ::close(in.fd);
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

void TcpEndpoint::start(Handler on_message, std::function<std::chrono::microseconds()> on_idle) {
  on_message_ = std::move(on_message);
  on_idle_ = std::move(on_idle);
  thread_ = std::thread([this] { run(); });
}

void TcpEndpoint::stop() {
  if (!thread_.joinable()) return;
  stopping_ = true;
  wake();
  thread_.join();
}

void TcpEndpoint::wake() {
  char b = 1;
  [[maybe_unused]] ssize_t n = ::write(wake_pipe_[1], &b, 1);
}

std::exception_ptr TcpEndpoint::error() const {
  std::lock_guard lock(err_mu_);
  return error_;
}

TcpEndpoint::Outbound& TcpEndpoint::outbound(const Address& to) {
  std::lock_guard lock(out_mu_);
  auto& slot = out_[to];
  if (!slot) {
    auto out = std::make_unique<Outbound>();
    out->fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (out->fd < 0) sys_fail("socket");
    int one = 1;
    ::setsockopt(out->fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    sockaddr_in addr = loopback(cluster_.topology().config().tcp.host, cluster_.port_of(to));
    if (::connect(out->fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      ::close(out->fd);
      sys_fail("connect to " + to_string(to));
    }
    write_all(out->fd, encode_hello(self_));
    slot = std::move(out);
  }
  return *slot;
}

void TcpEndpoint::send(const Address& to, const Message& msg) {
  Bytes frame = encode(msg);
  Outbound& out = outbound(to);
  std::lock_guard lock(out.mu);
  write_all(out.fd, frame);
}

void TcpEndpoint::read_from(Inbound& conn, bool& closed) {
  std::uint8_t buf[65536];
  ssize_t n = ::recv(conn.fd, buf, sizeof buf, 0);
  if (n == 0) {
    closed = true;
    return;
  }
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN) return;
    sys_fail("recv");
  }
  conn.buffer.insert(conn.buffer.end(), buf, buf + n);
  std::size_t off = 0;
  for (;;) {
    std::size_t used = 0;
    if (!conn.peer) {
      conn.peer = try_decode_hello(conn.buffer.data() + off, conn.buffer.size() - off, used);
      if (!conn.peer) break;
      off += used;
      continue;
    }
    auto msg = try_decode(conn.buffer.data() + off, conn.buffer.size() - off, used);
    if (!msg) break;
    off += used;
    on_message_(*conn.peer, *msg);
  }
  conn.buffer.erase(conn.buffer.begin(), conn.buffer.begin() + static_cast<std::ptrdiff_t>(off));
}

void TcpEndpoint::run() {
  try {
    while (!stopping_) {
      auto wait = on_idle_ ? on_idle_() : std::chrono::microseconds(100000);
      std::vector<pollfd> fds;
      fds.push_back({wake_pipe_[0], POLLIN, 0});
      fds.push_back({listen_fd_, POLLIN, 0});
      for (const Inbound& in : in_) fds.push_back({in.fd, POLLIN, 0});
      int timeout_ms = static_cast<int>(std::max<std::int64_t>(0, (wait.count() + 999) / 1000));
      int rc = ::poll(fds.data(), fds.size(), timeout_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        sys_fail("poll");
      }
      if (fds[0].revents & POLLIN) {
        char drain[64];
        while (::read(wake_pipe_[0], drain, sizeof drain) > 0) {
        }
      }
      if (fds[1].revents & POLLIN) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd >= 0) in_.push_back(Inbound{fd, {}, std::nullopt});
      }
      std::vector<std::size_t> closed_idx;
      for (std::size_t i = 2; i < fds.size(); ++i) {
        if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
          bool closed = false;
          read_from(in_[i - 2], closed);
          if (closed) closed_idx.push_back(i - 2);
        }
      }
      for (auto it = closed_idx.rbegin(); it != closed_idx.rend(); ++it) {
        ::close(in_[*it].fd);
        in_.erase(in_.begin() + static_cast<std::ptrdiff_t>(*it));
      }
    }
  } catch (...) {
    std::lock_guard lock(err_mu_);
    error_ = std::current_exception();
  }
}

// ---- TcpCluster ----

struct TcpCluster::Node : ServerEnv {
  TcpCluster& cluster;
  std::unique_ptr<TcpEndpoint> endpoint;
  std::unique_ptr<Server> server;
  Timestamp next_apply = 0;
  Timestamp next_gsv = 0;
  Timestamp next_ust = 0;
  std::mutex task_mu;
  std::vector<std::function<void()>> tasks;

  Node(TcpCluster& c, DcId dc, PartitionId n) : cluster(c) {
    Address self = Address::server(dc, n);
    endpoint = std::make_unique<TcpEndpoint>(c, self, c.configured_port(self));
    server = std::make_unique<Server>(c.topology_, dc, n, *this);
  }

  Timestamp physical_clock() override { return cluster.clock(); }
  Timestamp now() override { return cluster.clock(); }
  void send(const Address& to, Message msg) override { endpoint->send(to, msg); }
  TraceSink* trace() override { return cluster.trace_; }

  std::chrono::microseconds idle() {
    std::vector<std::function<void()>> run;
    {
      std::lock_guard lock(task_mu);
      run.swap(tasks);
    }
    for (auto& fn : run) fn();
    const ClusterConfig& cfg = cluster.topology_.config();
    Timestamp t = cluster.clock();
    if (t >= next_apply) {
      server->tick_apply_replicate();
      next_apply = t + cfg.delta_replicate_us;
    }
    if (t >= next_gsv) {
      server->tick_gsv();
      next_gsv = t + cfg.delta_gsv_us;
    }
    if (t >= next_ust) {
      server->tick_ust();
      server->tick_s_old();
      next_ust = t + cfg.delta_ust_us;
    }
    Timestamp next = std::min({next_apply, next_gsv, next_ust});
    t = cluster.clock();
    return std::chrono::microseconds(next > t ? next - t : 0);
  }
};

TcpCluster::TcpCluster(ClusterConfig config, TraceSink* trace)
    : topology_(std::move(config)), trace_(trace), epoch_(std::chrono::steady_clock::now()) {
  for (DcId d : topology_.active_dcs()) {
    for (PartitionId n : topology_.partitions_in(d)) nodes_.push_back(std::make_unique<Node>(*this, d, n));
  }
}

TcpCluster::~TcpCluster() { stop(); }

Timestamp TcpCluster::clock() const {
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - epoch_);
  return static_cast<Timestamp>(us.count());
}

void TcpCluster::start() {
  if (running_) return;
  running_ = true;
  for (auto& node : nodes_) {
    Node* n = node.get();
    Timestamp t = clock();
    const ClusterConfig& cfg = topology_.config();
    n->next_apply = t + cfg.delta_replicate_us;
    n->next_gsv = t + cfg.delta_gsv_us;
    n->next_ust = t + cfg.delta_ust_us;
    n->endpoint->start([n](const Address& from, const Message& msg) { n->server->handle(from, msg); },
                       [n] { return n->idle(); });
  }
}

void TcpCluster::stop() {
  if (!running_) return;
  running_ = false;
  for (auto& node : nodes_) node->endpoint->stop();
}

void TcpCluster::register_endpoint(const Address& a, std::uint16_t port) {
  std::lock_guard lock(registry_mu_);
  registry_[a] = port;
}

std::uint16_t TcpCluster::port_of(const Address& a) const {
  std::lock_guard lock(registry_mu_);
  auto it = registry_.find(a);
  if (it == registry_.end()) throw ConfigError("no listening endpoint for " + to_string(a));
  return it->second;
}

std::uint16_t TcpCluster::configured_port(const Address& a) const {
  std::uint16_t base = topology_.config().tcp.base_port;
  if (base == 0 || !a.is_server()) return 0;
  return static_cast<std::uint16_t>(base + a.dc * topology_.partitions() + a.index);
}

void TcpCluster::check() const {
  for (const auto& node : nodes_) {
    if (auto e = node->endpoint->error()) std::rethrow_exception(e);
  }
}

void TcpCluster::inspect(DcId dc, PartitionId n, const std::function<void(const Server&)>& fn) {
  for (auto& node : nodes_) {
    if (node->server->dc() != dc || node->server->partition() != n) continue;
    if (!running_) {
      fn(*node->server);
      return;
    }
    std::promise<void> done;
    {
      std::lock_guard lock(node->task_mu);
      node->tasks.push_back([&] {
        fn(*node->server);
        done.set_value();
      });
    }
    node->endpoint->wake();
    done.get_future().wait();
    return;
  }
  throw RoutingFault("no server for partition " + std::to_string(n) + " in DC " + std::to_string(dc));
}

// ---- TcpClient ----

TcpClient::TcpClient(TcpCluster& cluster, DcId dc, SessionId session, PartitionId coordinator)
    : cluster_(cluster),
      session_(cluster.topology(), dc, session, coordinator, cluster.trace(), [&cluster] { return cluster.clock(); }),
      endpoint_(std::make_unique<TcpEndpoint>(cluster, Address::client(dc, session), 0)),
      api_(session_, [this](const Address& to, Message req) { return rpc(to, std::move(req)); }) {
  endpoint_->start(
      [this](const Address&, const Message& msg) {
        std::lock_guard lock(mu_);
        replies_.push_back(msg);
        cv_.notify_all();
      },
      {});
}

TcpClient::~TcpClient() { endpoint_->stop(); }

Message TcpClient::rpc(const Address& to, Message request) {
  endpoint_->send(to, request);
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, std::chrono::seconds(10), [this] { return !replies_.empty(); })) {
    cluster_.check();
    throw std::runtime_error("no reply from " + to_string(to));
  }
  Message reply = std::move(replies_.front());
  replies_.pop_front();
  return reply;
}

}  // namespace paris
