#include "paris/wire.hpp"

#include <cstring>
#include <string>

namespace paris {

namespace {

class Writer {
 public:
  Bytes out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void tx(const TxId& id) {
    u32(id.dc);
    u32(id.partition);
    u64(id.seq);
  }
  void stamp(const VersionStamp& s) {
    u64(s.ut);
    tx(s.tx);
    u32(s.sr);
  }
  void version(const Version& v) {
    str(v.key);
    str(v.value);
    stamp(v.stamp);
  }
  void writes(const WriteSet& ws) {
    u32(static_cast<std::uint32_t>(ws.size()));
    for (const auto& [k, v] : ws) {
      str(k);
      str(v);
    }
  }
  template <class T, class F>
  void list(const std::vector<T>& items, F each) {
    u32(static_cast<std::uint32_t>(items.size()));
    for (const T& item : items) each(item);
  }
  void stamps(const std::vector<Timestamp>& ts) {
    list(ts, [&](Timestamp t) { u64(t); });
  }
  void keys(const std::vector<Key>& ks) {
    list(ks, [&](const Key& k) { str(k); });
  }
  void versions(const std::vector<Version>& vs) {
    list(vs, [&](const Version& v) { version(v); });
  }

  void body(const StartTxReq& m) { u64(m.ust_c); }
  void body(const StartTxResp& m) {
    tx(m.id);
    u64(m.ust);
  }
  void body(const ReadReq& m) {
    tx(m.id);
    keys(m.keys);
  }
  void body(const ReadResp& m) { versions(m.versions); }
  void body(const ReadSliceReq& m) {
    u64(m.rid);
    keys(m.keys);
    u64(m.ust);
  }
  void body(const ReadSliceResp& m) {
    u64(m.rid);
    versions(m.versions);
  }
  void body(const PrepareReq& m) {
    tx(m.id);
    u64(m.ust);
    u64(m.ht);
    writes(m.writes);
  }
  void body(const PrepareResp& m) {
    tx(m.id);
    u64(m.pt);
  }
  void body(const CommitReqClient& m) {
    tx(m.id);
    u64(m.hwt);
    writes(m.writes);
  }
  void body(const CommitReqCohort& m) {
    tx(m.id);
    u64(m.ct);
  }
  void body(const CommitResp& m) { u64(m.ct); }
  void body(const Replicate& m) {
    list(m.txs, [&](const ReplicatedTx& t) {
      tx(t.id);
      writes(t.writes);
    });
    u64(m.ct);
  }
  void body(const Heartbeat& m) { u64(m.t); }
  void body(const GsvUp& m) { stamps(m.mins); }
  void body(const GsvDown& m) {
    stamps(m.gsv);
    u64(m.ust);
  }
  void body(const RootExchange& m) {
    u32(m.dc);
    stamps(m.aggregate);
  }
  void body(const SOldUp& m) { u64(m.t); }
  void body(const SOldDown& m) { u64(m.t); }
  void body(const ErrorResp& m) {
    tx(m.id);
    str(m.reason);
  }
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  bool done() const { return p_ == end_; }

  std::uint8_t u8() {
    need(1);
    return *p_++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += 8;
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  TxId tx() {
    TxId id;
    id.dc = u32();
    id.partition = u32();
    id.seq = u64();
    return id;
  }
  VersionStamp stamp() {
    VersionStamp s;
    s.ut = u64();
    s.tx = tx();
    s.sr = u32();
    return s;
  }
  Version version() {
    Version v;
    v.key = str();
    v.value = str();
    v.stamp = stamp();
    return v;
  }
  WriteSet writes() {
    WriteSet ws;
    std::uint32_t n = count(8);
    for (std::uint32_t i = 0; i < n; ++i) {
      Key k = str();
      ws[std::move(k)] = str();
    }
    if (ws.size() != n) throw WireError("write set repeats a key");
    return ws;
  }
  template <class F>
  auto list(std::size_t min_item, F each) {
    std::uint32_t n = count(min_item);
    std::vector<decltype(each())> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(each());
    return out;
  }
  std::vector<Timestamp> stamps() {
    return list(8, [&] { return u64(); });
  }
  std::vector<Key> keys() {
    return list(4, [&] { return str(); });
  }
  std::vector<Version> versions() {
    return list(36, [&] { return version(); });
  }

  void body(StartTxReq& m) { m.ust_c = u64(); }
  void body(StartTxResp& m) {
    m.id = tx();
    m.ust = u64();
  }
  void body(ReadReq& m) {
    m.id = tx();
    m.keys = keys();
  }
  void body(ReadResp& m) { m.versions = versions(); }
  void body(ReadSliceReq& m) {
    m.rid = u64();
    m.keys = keys();
    m.ust = u64();
  }
  void body(ReadSliceResp& m) {
    m.rid = u64();
    m.versions = versions();
  }
  void body(PrepareReq& m) {
    m.id = tx();
    m.ust = u64();
    m.ht = u64();
    m.writes = writes();
  }
  void body(PrepareResp& m) {
    m.id = tx();
    m.pt = u64();
  }
  void body(CommitReqClient& m) {
    m.id = tx();
    m.hwt = u64();
    m.writes = writes();
  }
  void body(CommitReqCohort& m) {
    m.id = tx();
    m.ct = u64();
  }
  void body(CommitResp& m) { m.ct = u64(); }
  void body(Replicate& m) {
    m.txs = list(20, [&] {
      ReplicatedTx t;
      t.id = tx();
      t.writes = writes();
      return t;
    });
    m.ct = u64();
  }
  void body(Heartbeat& m) { m.t = u64(); }
  void body(GsvUp& m) { m.mins = stamps(); }
  void body(GsvDown& m) {
    m.gsv = stamps();
    m.ust = u64();
  }
  void body(RootExchange& m) {
    m.dc = u32();
    m.aggregate = stamps();
  }
  void body(SOldUp& m) { m.t = u64(); }
  void body(SOldDown& m) { m.t = u64(); }
  void body(ErrorResp& m) {
    m.id = tx();
    m.reason = str();
  }

 private:
  // Inside a complete frame, running out of bytes means a bad length field.
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw WireError("field runs past the end of the frame");
  }
  std::uint32_t count(std::size_t min_item) {
    std::uint32_t n = u32();
    if (static_cast<std::size_t>(end_ - p_) / (min_item == 0 ? 1 : min_item) < n) {
      throw WireError("element count exceeds frame size");
    }
    return n;
  }

  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

template <std::size_t I = 0>
Message make_alternative(std::size_t index) {
  if constexpr (I < std::variant_size_v<Message>) {
    if (index == I) return Message{std::in_place_index<I>};
    return make_alternative<I + 1>(index);
  } else {
    throw WireError("unknown message tag " + std::to_string(index + 1));
  }
}

Bytes frame(std::uint8_t tag, const Bytes& body) {
  std::size_t len = body.size() + 1;
  if (len > kMaxFrameSize) throw WireError("message too large to frame");
  Bytes out;
  out.reserve(len + 4);
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.push_back(tag);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// Length of the frame starting at data, or nullopt if the header is incomplete.
std::optional<std::size_t> frame_length(const std::uint8_t* data, std::size_t size) {
  if (size < 4) return std::nullopt;
  std::uint32_t len = (std::uint32_t{data[0]} << 24) | (std::uint32_t{data[1]} << 16) |
                      (std::uint32_t{data[2]} << 8) | std::uint32_t{data[3]};
  if (len == 0) throw WireError("empty frame");
  if (len > kMaxFrameSize) throw WireError("frame length " + std::to_string(len) + " exceeds limit");
  return std::size_t{len} + 4;
}

}  // namespace

Bytes encode(const Message& msg) {
  Writer w;
  std::visit([&](const auto& m) { w.body(m); }, msg);
  return frame(static_cast<std::uint8_t>(msg.index() + 1), w.out);
}

std::optional<Message> try_decode(const std::uint8_t* data, std::size_t size, std::size_t& consumed) {
  auto total = frame_length(data, size);
  if (!total || size < *total) return std::nullopt;
  std::uint8_t tag = data[4];
  if (tag == 0 || tag > std::variant_size_v<Message>) throw WireError("unknown message tag " + std::to_string(tag));
  Message msg = make_alternative(tag - 1);
  Reader r(data + kFrameHeaderSize, *total - kFrameHeaderSize);
  std::visit([&](auto& m) { r.body(m); }, msg);
  if (!r.done()) throw WireError("trailing bytes after message body");
  consumed = *total;
  return msg;
}

Message decode(const Bytes& bytes) {
  std::size_t consumed = 0;
  auto msg = try_decode(bytes.data(), bytes.size(), consumed);
  if (!msg) throw NeedMoreBytes("incomplete frame: have " + std::to_string(bytes.size()) + " bytes");
  if (consumed != bytes.size()) throw WireError("bytes after the frame");
  return std::move(*msg);
}

Bytes encode_hello(const Address& from) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(from.kind));
  w.u32(from.dc);
  w.u32(from.index);
  return frame(0, w.out);
}

std::optional<Address> try_decode_hello(const std::uint8_t* data, std::size_t size, std::size_t& consumed) {
  auto total = frame_length(data, size);
  if (!total || size < *total) return std::nullopt;
  if (data[4] != 0) throw WireError("connection did not start with a hello");
  Reader r(data + kFrameHeaderSize, *total - kFrameHeaderSize);
  Address a;
  std::uint8_t kind = r.u8();
  if (kind > 1) throw WireError("bad endpoint kind in hello");
  a.kind = static_cast<Address::Kind>(kind);
  a.dc = r.u32();
  a.index = r.u32();
  if (!r.done()) throw WireError("trailing bytes after hello");
  consumed = *total;
  return a;
}

}  // namespace paris
