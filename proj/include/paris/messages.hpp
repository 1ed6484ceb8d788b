#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "paris/storage.hpp"
#include "paris/types.hpp"

namespace paris {

/// Endpoint of a channel: a partition server (dc, partition) or a client
/// session (dc, session id).
struct Address {
  enum class Kind : std::uint8_t { server = 0, client = 1 };
  Kind kind = Kind::server;
  DcId dc = 0;
  std::uint32_t index = 0;

  static Address server(DcId dc, PartitionId n) { return {Kind::server, dc, n}; }
  static Address client(DcId dc, SessionId s) { return {Kind::client, dc, s}; }
  bool is_server() const { return kind == Kind::server; }

  friend constexpr auto operator<=>(const Address&, const Address&) = default;
};

std::string to_string(const Address& a);

using WriteSet = std::map<Key, Value>;

struct StartTxReq {
  Timestamp ust_c = 0;
  friend bool operator==(const StartTxReq&, const StartTxReq&) = default;
};
struct StartTxResp {
  TxId id;
  Timestamp ust = 0;
  friend bool operator==(const StartTxResp&, const StartTxResp&) = default;
};
struct ReadReq {
  TxId id;
  std::vector<Key> keys;
  friend bool operator==(const ReadReq&, const ReadReq&) = default;
};
struct ReadResp {
  std::vector<Version> versions;
  friend bool operator==(const ReadResp&, const ReadResp&) = default;
};
// rid correlates slice responses with the coordinator's pending read.
struct ReadSliceReq {
  std::uint64_t rid = 0;
  std::vector<Key> keys;
  Timestamp ust = 0;
  friend bool operator==(const ReadSliceReq&, const ReadSliceReq&) = default;
};
struct ReadSliceResp {
  std::uint64_t rid = 0;
  std::vector<Version> versions;
  friend bool operator==(const ReadSliceResp&, const ReadSliceResp&) = default;
};
struct PrepareReq {
  TxId id;
  Timestamp ust = 0;
  Timestamp ht = 0;
  WriteSet writes;
  friend bool operator==(const PrepareReq&, const PrepareReq&) = default;
};
struct PrepareResp {
  TxId id;
  Timestamp pt = 0;
  friend bool operator==(const PrepareResp&, const PrepareResp&) = default;
};
struct CommitReqClient {
  TxId id;
  Timestamp hwt = 0;
  WriteSet writes;
  friend bool operator==(const CommitReqClient&, const CommitReqClient&) = default;
};
struct CommitReqCohort {
  TxId id;
  Timestamp ct = 0;
  friend bool operator==(const CommitReqCohort&, const CommitReqCohort&) = default;
};
struct CommitResp {
  Timestamp ct = 0;
  friend bool operator==(const CommitResp&, const CommitResp&) = default;
};
struct ReplicatedTx {
  TxId id;
  WriteSet writes;
  friend bool operator==(const ReplicatedTx&, const ReplicatedTx&) = default;
};
/// All transactions a replica applied with one commit timestamp.
struct Replicate {
  std::vector<ReplicatedTx> txs;
  Timestamp ct = 0;
  friend bool operator==(const Replicate&, const Replicate&) = default;
};
struct Heartbeat {
  Timestamp t = 0;
  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};
/// Partial per-DC minima, child to parent. kNoTimestamp marks DCs the
/// subtree holds no replica for.
struct GsvUp {
  std::vector<Timestamp> mins;
  friend bool operator==(const GsvUp&, const GsvUp&) = default;
};
/// DC-wide stabilization vector and universal stable time, root downwards.
struct GsvDown {
  std::vector<Timestamp> gsv;
  Timestamp ust = 0;
  friend bool operator==(const GsvDown&, const GsvDown&) = default;
};
struct RootExchange {
  DcId dc = 0;
  std::vector<Timestamp> aggregate;
  friend bool operator==(const RootExchange&, const RootExchange&) = default;
};
/// Oldest-active-snapshot contribution; travels child to parent and between
/// DC roots.
struct SOldUp {
  Timestamp t = 0;
  friend bool operator==(const SOldUp&, const SOldUp&) = default;
};
struct SOldDown {
  Timestamp t = 0;
  friend bool operator==(const SOldDown&, const SOldDown&) = default;
};
/// Reply to a request naming a transaction the coordinator no longer knows.
struct ErrorResp {
  TxId id;
  std::string reason;
  friend bool operator==(const ErrorResp&, const ErrorResp&) = default;
};

using Message = std::variant<StartTxReq, StartTxResp, ReadReq, ReadResp, ReadSliceReq, ReadSliceResp, PrepareReq,
                             PrepareResp, CommitReqClient, CommitReqCohort, CommitResp, Replicate, Heartbeat, GsvUp,
                             GsvDown, RootExchange, SOldUp, SOldDown, ErrorResp>;

const char* message_name(const Message& m);

}  // namespace paris
