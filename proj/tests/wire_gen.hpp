#pragma once

#include <random>

#include "paris/messages.hpp"

namespace paris::testing {

// Random message generator shared by the wire tests and the acceptance run.
class MessageGen {
 public:
  explicit MessageGen(std::mt19937_64& rng) : rng_(rng) {}

  Message any() { return make(rng_() % std::variant_size_v<Message>); }

 private:
  Timestamp ts() { return rng_() % 4 == 0 ? rng_() : rng_() % 100000; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(rng_() % 8); }
  std::string str() {
    std::string s(rng_() % 12, '\0');
    for (char& c : s) c = static_cast<char>(rng_() % 256);
    return s;
  }
  TxId tx() { return TxId{u32(), u32(), rng_()}; }
  VersionStamp stamp() { return VersionStamp{ts(), tx(), u32()}; }
  Version version() { return Version{str(), str(), stamp()}; }
  WriteSet writes() {
    WriteSet w;
    for (std::size_t n = rng_() % 4; n > 0; --n) w[str()] = str();
    return w;
  }
  template <class F>
  auto list(F f) {
    std::vector<decltype(f())> out(rng_() % 5);
    for (auto& x : out) x = f();
    return out;
  }
  std::vector<Timestamp> stamps() {
    return list([&] { return ts(); });
  }

  template <std::size_t I = 0>
  Message make(std::size_t index) {
    if constexpr (I < std::variant_size_v<Message>) {
      if (index == I) {
        Message m{std::in_place_index<I>};
        fill(std::get<I>(m));
        return m;
      }
      return make<I + 1>(index);
    } else {
      return Heartbeat{};
    }
  }

  void fill(StartTxReq& m) { m.ust_c = ts(); }
  void fill(StartTxResp& m) { m = {tx(), ts()}; }
  void fill(ReadReq& m) { m = {tx(), list([&] { return str(); })}; }
  void fill(ReadResp& m) { m.versions = list([&] { return version(); }); }
  void fill(ReadSliceReq& m) { m = {rng_(), list([&] { return str(); }), ts()}; }
  void fill(ReadSliceResp& m) { m = {rng_(), list([&] { return version(); })}; }
  void fill(PrepareReq& m) { m = {tx(), ts(), ts(), writes()}; }
  void fill(PrepareResp& m) { m = {tx(), ts()}; }
  void fill(CommitReqClient& m) { m = {tx(), ts(), writes()}; }
  void fill(CommitReqCohort& m) { m = {tx(), ts()}; }
  void fill(CommitResp& m) { m.ct = ts(); }
  void fill(Replicate& m) {
    m.txs = list([&] { return ReplicatedTx{tx(), writes()}; });
    m.ct = ts();
  }
  void fill(Heartbeat& m) { m.t = ts(); }
  void fill(GsvUp& m) { m.mins = stamps(); }
  void fill(GsvDown& m) { m = {stamps(), ts()}; }
  void fill(RootExchange& m) { m = {u32(), stamps()}; }
  void fill(SOldUp& m) { m.t = ts(); }
  void fill(SOldDown& m) { m.t = ts(); }
  void fill(ErrorResp& m) { m = {tx(), str()}; }

  std::mt19937_64& rng_;
};

inline Message random_message(std::mt19937_64& rng) { return MessageGen(rng).any(); }

}  // namespace paris::testing
