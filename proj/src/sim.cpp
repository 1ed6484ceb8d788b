#include "paris/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace paris {

struct Simulator::Host : ServerEnv {
  Simulator& sim;
  Address self;
  std::unique_ptr<Server> server;

  Host(Simulator& s, DcId dc, PartitionId n) : sim(s), self(Address::server(dc, n)) {}

  Timestamp physical_clock() override { return sim.physical_clock(self.dc, self.index); }
  Timestamp now() override { return sim.now_; }
  void send(const Address& to, Message msg) override { sim.send(self, to, std::move(msg)); }
  TraceSink* trace() override { return sim.options_.trace ? sim.recorder_.get() : nullptr; }
};

Simulator::Simulator(ClusterConfig config, std::uint64_t seed, SimOptions options)
    : topology_(std::move(config)), options_(options), rng_(seed) {
  const ClusterConfig& cfg = topology_.config();
  recorder_ = std::make_unique<TraceRecorder>(make_trace_header(cfg));
  recorder_->set_enabled(options_.trace);

  hosts_.resize(static_cast<std::size_t>(cfg.dcs) * cfg.partitions);
  skew_.assign(hosts_.size(), 0);
  drift_.assign(hosts_.size(), 0.0);
  auto bound = static_cast<std::int64_t>(cfg.skew_bound_us);
  std::uniform_int_distribution<std::int64_t> skew_dist(-bound, bound);
  std::uniform_real_distribution<double> drift_dist(-cfg.drift_ppm, cfg.drift_ppm);
  for (DcId d : topology_.active_dcs()) {
    for (PartitionId n : topology_.partitions_in(d)) {
      std::size_t i = index_of(d, n);
      skew_[i] = skew_dist(rng_);
      if (cfg.drift_ppm > 0) drift_[i] = drift_dist(rng_);
      hosts_[i] = std::make_unique<Host>(*this, d, n);
      hosts_[i]->server = std::make_unique<Server>(topology_, d, n, *hosts_[i]);
      if (options_.audit_gc) {
        hosts_[i]->server->set_gc_observer(
            [this](const Server& s, Timestamp s_old, bool after) { audit_gc(s, s_old, after); });
      }
    }
  }

  // Timers start at seeded phases so servers do not tick in lockstep.
  for (const auto& host : hosts_) {
    if (!host) continue;
    const Address& a = host->self;
    auto phase = [&](Timestamp period) { return std::uniform_int_distribution<Timestamp>(1, period)(rng_); };
    push(phase(cfg.delta_replicate_us), Event{EventKind::timer, a, a, std::nullopt, TimerKind::apply, {}});
    push(phase(cfg.delta_gsv_us), Event{EventKind::timer, a, a, std::nullopt, TimerKind::gsv, {}});
    push(phase(cfg.delta_ust_us), Event{EventKind::timer, a, a, std::nullopt, TimerKind::ust, {}});
  }
  if (options_.check_stability) push(cfg.delta_ust_us, Event{EventKind::sample, {}, {}, std::nullopt, {}, {}});
}

Simulator::~Simulator() = default;

std::size_t Simulator::index_of(DcId dc, PartitionId n) const {
  return static_cast<std::size_t>(dc) * topology_.partitions() + n;
}

Server& Simulator::server(DcId dc, PartitionId n) {
  if (dc >= topology_.dcs() || n >= topology_.partitions() || !hosts_[index_of(dc, n)]) {
    throw RoutingFault("no server for partition " + std::to_string(n) + " in DC " + std::to_string(dc));
  }
  return *hosts_[index_of(dc, n)]->server;
}

std::vector<Server*> Simulator::servers() {
  std::vector<Server*> out;
  for (auto& h : hosts_) {
    if (h) out.push_back(h->server.get());
  }
  return out;
}

std::vector<const Server*> Simulator::servers() const {
  std::vector<const Server*> out;
  for (const auto& h : hosts_) {
    if (h) out.push_back(h->server.get());
  }
  return out;
}

std::int64_t Simulator::skew(DcId dc, PartitionId n) const { return skew_.at(index_of(dc, n)); }

Timestamp Simulator::physical_clock(DcId dc, PartitionId n) const {
  std::size_t i = index_of(dc, n);
  auto t = static_cast<std::int64_t>(now_) + skew_[i];
  if (drift_[i] != 0.0) t += static_cast<std::int64_t>(std::floor(static_cast<double>(now_) * drift_[i] / 1e6));
  return t < 0 ? 0 : static_cast<Timestamp>(t);
}

void Simulator::attach_client(const Address& client, ClientHandler handler) {
  if (client.is_server()) throw ConfigError("attach_client needs a client address");
  clients_[client] = std::move(handler);
}

void Simulator::push(Timestamp at, Event ev) { queue_.emplace(std::make_pair(at, next_seq_++), std::move(ev)); }

Timestamp Simulator::sample_latency(const Address& from, const Address& to) {
  if (from == to) return 0;
  const LatencyRange& r = topology_.config().latency.at(from.dc).at(to.dc);
  if (r.min_us == r.max_us) return r.min_us;
  return std::uniform_int_distribution<Timestamp>(r.min_us, r.max_us)(rng_);
}

void Simulator::send(const Address& from, const Address& to, Message msg) {
  if (to.is_server()) {
    if (to.dc >= topology_.dcs() || to.index >= topology_.partitions() || !hosts_[index_of(to.dc, to.index)]) {
      throw ConfigError("send to unknown endpoint " + to_string(to));
    }
  } else if (clients_.count(to) == 0) {
    throw ConfigError("send to unknown endpoint " + to_string(to));
  }
  ++stats_.messages;
  ++stats_.messages_by_type[message_name(msg)];
  Timestamp at = now_ + sample_latency(from, to);
  auto& tail = channel_tail_[{from, to}];
  at = std::max(at, tail);
  tail = at;
  push(at, Event{EventKind::message, from, to, std::move(msg), {}, {}});
}

void Simulator::schedule(Timestamp at, std::function<void()> fn) {
  push(std::max(at, now_), Event{EventKind::callback, {}, {}, std::nullopt, {}, std::move(fn)});
}

void Simulator::sever_dc(DcId dc, Timestamp at) {
  severed_dc_ = dc;
  severed_at_ = at;
}

bool Simulator::crosses_severed(const Address& from, const Address& to) const {
  if (!severed_dc_ || now_ < severed_at_ || from.dc == to.dc) return false;
  return from.dc == *severed_dc_ || to.dc == *severed_dc_;
}

void Simulator::run_until(Timestamp t) {
  while (!queue_.empty() && queue_.begin()->first.first <= t) {
    auto node = queue_.extract(queue_.begin());
    now_ = node.key().first;
    ++stats_.events;
    dispatch(node.mapped());
  }
  if (t > now_) now_ = t;
}

void Simulator::dispatch(Event& ev) {
  switch (ev.kind) {
    case EventKind::message:
      if (crosses_severed(ev.from, ev.to)) {
        ++stats_.held_messages;
        held_.emplace_back(ev.from, ev.to);
        return;
      }
      if (ev.to.is_server()) {
        hosts_[index_of(ev.to.dc, ev.to.index)]->server->handle(ev.from, *ev.msg);
      } else {
        clients_.at(ev.to)(ev.from, *ev.msg);
      }
      return;
    case EventKind::timer:
      fire_timer(ev.to, ev.timer);
      return;
    case EventKind::callback:
      ev.fn();
      return;
    case EventKind::sample:
      sample_stability();
      push(now_ + topology_.config().delta_ust_us, std::move(ev));
      return;
  }
}

void Simulator::fire_timer(const Address& at, TimerKind kind) {
  Server& s = *hosts_[index_of(at.dc, at.index)]->server;
  const ClusterConfig& cfg = topology_.config();
  Timestamp period = 0;
  switch (kind) {
    case TimerKind::apply:
      s.tick_apply_replicate();
      period = cfg.delta_replicate_us;
      break;
    case TimerKind::gsv:
      s.tick_gsv();
      period = cfg.delta_gsv_us;
      break;
    case TimerKind::ust:
      s.tick_ust();
      s.tick_s_old();
      period = cfg.delta_ust_us;
      break;
  }
  push(now_ + period, Event{EventKind::timer, at, at, std::nullopt, kind, {}});
}

void Simulator::sample_stability() {
  Timestamp max_ust = 0;
  Timestamp min_floor = kNoTimestamp;
  for (const Server* s : servers()) {
    max_ust = std::max(max_ust, s->ust());
    min_floor = std::min(min_floor, s->applied_floor());
  }
  ++stats_.stability_samples;
  if (max_ust > min_floor) ++stats_.stability_violations;
}

void Simulator::audit_gc(const Server& s, Timestamp s_old, bool after) {
  (void)s_old;
  // Snapshots of every transaction still open anywhere in the system.
  std::set<Timestamp> open;
  for (const Server* other : servers()) {
    for (const auto& [id, ctx] : other->contexts()) open.insert(ctx.snapshot);
  }
  if (!after) {
    gc_before_.clear();
    for (Timestamp snap : open) {
      for (const Key& k : s.storage().keys()) gc_before_[{snap, k}] = s.storage().read_visible(k, snap);
    }
    return;
  }
  for (const auto& [probe, before] : gc_before_) {
    ++stats_.gc_audit_reads;
    if (s.storage().read_visible(probe.second, probe.first) != before) ++stats_.gc_audit_diffs;
  }
  gc_before_.clear();
}

std::string Simulator::digest() const {
  std::ostringstream os;
  write_trace(os, recorder_->trace());
  for (const Server* s : servers()) {
    os << s->dc() << '.' << s->partition() << ' ' << s->hlc() << ' ' << s->ust() << ' ' << s->applied_floor();
    for (Timestamp v : s->version_vector()) os << ' ' << v;
    os << ' ' << s->storage().version_count() << '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

}  // namespace paris
