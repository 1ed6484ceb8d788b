#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "paris/topology.hpp"
#include "paris/types.hpp"

namespace paris {

// Trace format, one record per line, tab-separated:
//
//   #paris-trace  v1  protocol=<paris|bpr>  dcs=<M>  partitions=<N>  placement=<d,d;d,d;...>
//   <seq> <time> StartTx         <session> <tx> <snapshot>
//   <seq> <time> ReadResult      <session> <tx> <snapshot> <key> <store|ws|rs|wc> <stamp|->
//   <seq> <time> CommitDone      <session> <tx> <snapshot> <ct> <key@sr,...>
//   <seq> <time> FinishTx        <session> <tx>
//   <seq> <time> ApplyLocal      <dc.partition> <tx> <ct> <key,...>
//   <seq> <time> ApplyReplicated <dc.partition> <from_dc> <tx> <ct> <key,...>
//   <seq> <time> UstAdvance      <dc.partition> <ust>
//   <seq> <time> FloorAdvance    <dc.partition> <applied floor>
//   <seq> <time> ChannelRecv     <dc.partition> <from_dc> <R|H> <ct or heartbeat>
//   <seq> <time> BlockedRead     <dc.partition> <snapshot> <blocked duration>
//
// tx is dc.partition.seq, stamp is ut:tx:sr, keys are percent-escaped.

inline constexpr const char* kTraceMagic = "#paris-trace";
inline constexpr const char* kTraceVersion = "v1";

enum class TraceKind : std::uint8_t {
  start_tx,
  read_result,
  commit_done,
  finish_tx,
  apply_local,
  apply_replicated,
  ust_advance,
  floor_advance,
  channel_recv,
  blocked_read,
};

enum class ReadSource : std::uint8_t { store, ws, rs, wc };

const char* to_string(TraceKind k);
const char* to_string(ReadSource s);

struct TraceWrite {
  Key key;
  DcId sr = 0;
  friend bool operator==(const TraceWrite&, const TraceWrite&) = default;
};

struct ServerRef {
  DcId dc = 0;
  PartitionId partition = 0;
  friend constexpr auto operator<=>(const ServerRef&, const ServerRef&) = default;
};

/// One externally visible protocol action. Only the fields relevant to the
/// kind are meaningful.
struct TraceEvent {
  std::uint64_t seq = 0;
  Timestamp time = 0;
  TraceKind kind = TraceKind::start_tx;

  SessionId session = 0;
  TxId tx;
  Timestamp snapshot = 0;
  Timestamp ct = 0;

  Key key;
  ReadSource source = ReadSource::store;
  std::optional<VersionStamp> stamp;

  std::vector<TraceWrite> writes;
  std::vector<Key> keys;

  ServerRef server;
  DcId from_dc = 0;
  char channel = 'H';
  Timestamp value = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceHeader {
  Protocol protocol = Protocol::paris;
  std::uint32_t dcs = 0;
  std::uint32_t partitions = 0;
  std::vector<std::vector<DcId>> placement;
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

TraceHeader make_trace_header(const ClusterConfig& config);

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;
};

/// Thrown by the trace parser on malformed input.
class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string escape_key(const Key& key);
Key unescape_key(const std::string& text);

std::string format_event(const TraceEvent& ev);
std::string format_header(const TraceHeader& h);
void write_trace(std::ostream& os, const Trace& trace);
std::string serialize_trace(const Trace& trace);

Trace parse_trace(std::istream& in);
Trace parse_trace_text(const std::string& text);
Trace load_trace(const std::string& path);

/// Receives events from servers and clients. Implementations assign seq.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void record(TraceEvent ev) = 0;
};

/// Collects events in memory, assigning sequence numbers in arrival order.
/// Safe to share between threads.
class TraceRecorder : public TraceSink {
 public:
  explicit TraceRecorder(TraceHeader header) { trace_.header = std::move(header); }

  void record(TraceEvent ev) override;
  void set_enabled(bool on) { enabled_ = on; }

  Trace take();
  const Trace& trace() const { return trace_; }

 private:
  std::mutex mu_;
  Trace trace_;
  bool enabled_ = true;
};

}  // namespace paris
