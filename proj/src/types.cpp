#include "paris/types.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace paris {

namespace {

Timestamp checked_increment(Timestamp t) {
  if (t == std::numeric_limits<Timestamp>::max()) {
    throw Fault("hybrid clock overflow");
  }
  return t + 1;
}

std::uint64_t parse_u64(std::string_view text, const char* what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("malformed ") + what + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string to_string(const TxId& id) {
  return std::to_string(id.dc) + "." + std::to_string(id.partition) + "." + std::to_string(id.seq);
}

TxId parse_tx_id(const std::string& text) {
  auto first = text.find('.');
  auto second = first == std::string::npos ? std::string::npos : text.find('.', first + 1);
  if (second == std::string::npos) {
    throw std::invalid_argument("malformed transaction id: '" + text + "'");
  }
  std::string_view view(text);
  TxId id;
  id.dc = static_cast<DcId>(parse_u64(view.substr(0, first), "transaction id"));
  id.partition =
      static_cast<PartitionId>(parse_u64(view.substr(first + 1, second - first - 1), "transaction id"));
  id.seq = parse_u64(view.substr(second + 1), "transaction id");
  return id;
}

std::strong_ordering version_cmp(const VersionStamp& a, const VersionStamp& b) { return a <=> b; }

std::string to_string(const VersionStamp& s) {
  return std::to_string(s.ut) + ":" + to_string(s.tx) + ":" + std::to_string(s.sr);
}

VersionStamp parse_version_stamp(const std::string& text) {
  auto first = text.find(':');
  auto last = text.rfind(':');
  if (first == std::string::npos || first == last) {
    throw std::invalid_argument("malformed version stamp: '" + text + "'");
  }
  std::string_view view(text);
  VersionStamp s;
  s.ut = parse_u64(view.substr(0, first), "version stamp");
  s.tx = parse_tx_id(text.substr(first + 1, last - first - 1));
  s.sr = static_cast<DcId>(parse_u64(view.substr(last + 1), "version stamp"));
  return s;
}

Timestamp hlc_update_on_prepare(Timestamp physical, Timestamp hlc, Timestamp ht) {
  return std::max({physical, checked_increment(ht), checked_increment(hlc)});
}

Timestamp hlc_update_on_commit(Timestamp physical, Timestamp hlc, Timestamp ct) {
  return std::max({hlc, ct, physical});
}

}  // namespace paris
