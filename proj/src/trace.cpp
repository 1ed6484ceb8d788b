#include "paris/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace paris {

namespace {

constexpr const char* kKindNames[] = {"StartTx",         "ReadResult", "CommitDone",   "FinishTx",
                                      "ApplyLocal",      "ApplyReplicated", "UstAdvance", "FloorAdvance",
                                      "ChannelRecv",     "BlockedRead"};
constexpr const char* kSourceNames[] = {"store", "ws", "rs", "wc"};

bool needs_escape(unsigned char c) {
  return c <= 0x20 || c >= 0x7f || c == '%' || c == '@' || c == ',' || c == ';';
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join_keys(const std::vector<Key>& keys) {
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ',';
    out += escape_key(keys[i]);
  }
  return keys.empty() ? "-" : out;
}

std::string format_server(const ServerRef& s) {
  return std::to_string(s.dc) + "." + std::to_string(s.partition);
}

class LineParser {
 public:
  LineParser(std::size_t line, std::vector<std::string> fields) : line_(line), fields_(std::move(fields)) {}

  void expect_count(std::size_t n) const {
    if (fields_.size() != n) {
      fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields_.size()));
    }
  }
  const std::string& at(std::size_t i) const { return fields_.at(i); }

  std::uint64_t u64(std::size_t i) const {
    const auto& f = fields_.at(i);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size()) fail("bad integer '" + f + "'");
    return v;
  }
  TxId tx(std::size_t i) const {
    try {
      return parse_tx_id(fields_.at(i));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  ServerRef server(std::size_t i) const {
    auto parts = split(fields_.at(i), '.');
    if (parts.size() != 2) fail("bad server reference '" + fields_.at(i) + "'");
    LineParser sub(line_, parts);
    return {static_cast<DcId>(sub.u64(0)), static_cast<PartitionId>(sub.u64(1))};
  }
  std::vector<Key> keys(std::size_t i) const {
    if (fields_.at(i) == "-") return {};
    std::vector<Key> out;
    for (auto& k : split(fields_.at(i), ',')) out.push_back(unescape_key(k));
    return out;
  }
  [[noreturn]] void fail(const std::string& what) const { throw TraceParseError(line_, what); }

 private:
  std::size_t line_;
  std::vector<std::string> fields_;
};

TraceKind parse_kind(const LineParser& p, const std::string& name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (name == kKindNames[i]) return static_cast<TraceKind>(i);
  }
  p.fail("unknown event kind '" + name + "'");
}

ReadSource parse_source(const LineParser& p, const std::string& name) {
  for (std::size_t i = 0; i < std::size(kSourceNames); ++i) {
    if (name == kSourceNames[i]) return static_cast<ReadSource>(i);
  }
  p.fail("unknown read source '" + name + "'");
}

TraceHeader parse_header(std::size_t line_no, const std::string& line) {
  auto fields = split(line, '\t');
  LineParser p(line_no, fields);
  if (fields.size() < 2 || fields[0] != kTraceMagic) p.fail("missing trace header");
  if (fields[1] != kTraceVersion) p.fail("unsupported trace version '" + fields[1] + "'");
  TraceHeader h;
  for (std::size_t i = 2; i < fields.size(); ++i) {
    auto eq = fields[i].find('=');
    if (eq == std::string::npos) p.fail("bad header field '" + fields[i] + "'");
    std::string name = fields[i].substr(0, eq);
    std::string value = fields[i].substr(eq + 1);
    LineParser v(line_no, {value});
    if (name == "protocol") {
      try {
        h.protocol = parse_protocol(value);
      } catch (const ConfigError& e) {
        p.fail(e.what());
      }
    } else if (name == "dcs") {
      h.dcs = static_cast<std::uint32_t>(v.u64(0));
    } else if (name == "partitions") {
      h.partitions = static_cast<std::uint32_t>(v.u64(0));
    } else if (name == "placement") {
      if (value.empty()) continue;
      for (const auto& row : split(value, ';')) {
        std::vector<DcId> dcs;
        for (const auto& d : split(row, ',')) dcs.push_back(static_cast<DcId>(LineParser(line_no, {d}).u64(0)));
        h.placement.push_back(std::move(dcs));
      }
    }
    // Unknown header fields are ignored for forward compatibility.
  }
  return h;
}

}  // namespace

const char* to_string(TraceKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
const char* to_string(ReadSource s) { return kSourceNames[static_cast<std::size_t>(s)]; }

TraceHeader make_trace_header(const ClusterConfig& config) {
  return {config.protocol, config.dcs, config.partitions, config.placement};
}

std::string escape_key(const Key& key) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(key.size());
  for (unsigned char c : key) {
    if (needs_escape(c)) {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

Key unescape_key(const std::string& text) {
  Key out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + i + 1, text.data() + i + 3, value, 16);
      if (ec != std::errc{} || ptr != text.data() + i + 3) {
        throw std::invalid_argument("bad key escape in '" + text + "'");
      }
      out += static_cast<char>(value);
      i += 2;
    } else if (text[i] == '%') {
      throw std::invalid_argument("truncated key escape in '" + text + "'");
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string format_header(const TraceHeader& h) {
  std::string placement;
  for (std::size_t n = 0; n < h.placement.size(); ++n) {
    if (n) placement += ';';
    for (std::size_t i = 0; i < h.placement[n].size(); ++i) {
      if (i) placement += ',';
      placement += std::to_string(h.placement[n][i]);
    }
  }
  std::ostringstream os;
  os << kTraceMagic << '\t' << kTraceVersion << "\tprotocol=" << to_string(h.protocol) << "\tdcs=" << h.dcs
     << "\tpartitions=" << h.partitions << "\tplacement=" << placement;
  return os.str();
}

std::string format_event(const TraceEvent& ev) {
  std::string out = std::to_string(ev.seq) + '\t' + std::to_string(ev.time) + '\t' + to_string(ev.kind);
  auto field = [&out](const std::string& f) {
    out += '\t';
    out += f;
  };
  switch (ev.kind) {
    case TraceKind::start_tx:
      field(std::to_string(ev.session));
      field(to_string(ev.tx));
      field(std::to_string(ev.snapshot));
      break;
    case TraceKind::read_result:
      field(std::to_string(ev.session));
      field(to_string(ev.tx));
      field(std::to_string(ev.snapshot));
      field(escape_key(ev.key));
      field(to_string(ev.source));
      field(ev.stamp ? to_string(*ev.stamp) : "-");
      break;
    case TraceKind::commit_done: {
      field(std::to_string(ev.session));
      field(to_string(ev.tx));
      field(std::to_string(ev.snapshot));
      field(std::to_string(ev.ct));
      std::string writes;
      for (std::size_t i = 0; i < ev.writes.size(); ++i) {
        if (i) writes += ',';
        writes += escape_key(ev.writes[i].key) + "@" + std::to_string(ev.writes[i].sr);
      }
      field(writes.empty() ? "-" : writes);
      break;
    }
    case TraceKind::finish_tx:
      field(std::to_string(ev.session));
      field(to_string(ev.tx));
      break;
    case TraceKind::apply_local:
      field(format_server(ev.server));
      field(to_string(ev.tx));
      field(std::to_string(ev.ct));
      field(join_keys(ev.keys));
      break;
    case TraceKind::apply_replicated:
      field(format_server(ev.server));
      field(std::to_string(ev.from_dc));
      field(to_string(ev.tx));
      field(std::to_string(ev.ct));
      field(join_keys(ev.keys));
      break;
    case TraceKind::ust_advance:
    case TraceKind::floor_advance:
      field(format_server(ev.server));
      field(std::to_string(ev.value));
      break;
    case TraceKind::channel_recv:
      field(format_server(ev.server));
      field(std::to_string(ev.from_dc));
      field(std::string(1, ev.channel));
      field(std::to_string(ev.value));
      break;
    case TraceKind::blocked_read:
      field(format_server(ev.server));
      field(std::to_string(ev.snapshot));
      field(std::to_string(ev.value));
      break;
  }
  return out;
}

void write_trace(std::ostream& os, const Trace& trace) {
  os << format_header(trace.header) << '\n';
  for (const auto& ev : trace.events) os << format_event(ev) << '\n';
}

std::string serialize_trace(const Trace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      trace.header = parse_header(line_no, line);
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 3) throw TraceParseError(line_no, "too few fields");
    LineParser p(line_no, std::move(fields));
    TraceEvent ev;
    ev.seq = p.u64(0);
    ev.time = p.u64(1);
    ev.kind = parse_kind(p, p.at(2));
    try {
      switch (ev.kind) {
        case TraceKind::start_tx:
          p.expect_count(6);
          ev.session = static_cast<SessionId>(p.u64(3));
          ev.tx = p.tx(4);
          ev.snapshot = p.u64(5);
          break;
        case TraceKind::read_result:
          p.expect_count(9);
          ev.session = static_cast<SessionId>(p.u64(3));
          ev.tx = p.tx(4);
          ev.snapshot = p.u64(5);
          ev.key = unescape_key(p.at(6));
          ev.source = parse_source(p, p.at(7));
          if (p.at(8) != "-") ev.stamp = parse_version_stamp(p.at(8));
          break;
        case TraceKind::commit_done:
          p.expect_count(8);
          ev.session = static_cast<SessionId>(p.u64(3));
          ev.tx = p.tx(4);
          ev.snapshot = p.u64(5);
          ev.ct = p.u64(6);
          if (p.at(7) != "-") {
            for (const auto& w : split(p.at(7), ',')) {
              auto at = w.rfind('@');
              if (at == std::string::npos) p.fail("write without source DC: '" + w + "'");
              ev.writes.push_back(
                  {unescape_key(w.substr(0, at)), static_cast<DcId>(LineParser(line_no, {w.substr(at + 1)}).u64(0))});
            }
          }
          break;
        case TraceKind::finish_tx:
          p.expect_count(5);
          ev.session = static_cast<SessionId>(p.u64(3));
          ev.tx = p.tx(4);
          break;
        case TraceKind::apply_local:
          p.expect_count(7);
          ev.server = p.server(3);
          ev.tx = p.tx(4);
          ev.ct = p.u64(5);
          ev.keys = p.keys(6);
          break;
        case TraceKind::apply_replicated:
          p.expect_count(8);
          ev.server = p.server(3);
          ev.from_dc = static_cast<DcId>(p.u64(4));
          ev.tx = p.tx(5);
          ev.ct = p.u64(6);
          ev.keys = p.keys(7);
          break;
        case TraceKind::ust_advance:
        case TraceKind::floor_advance:
          p.expect_count(5);
          ev.server = p.server(3);
          ev.value = p.u64(4);
          break;
        case TraceKind::channel_recv:
          p.expect_count(7);
          ev.server = p.server(3);
          ev.from_dc = static_cast<DcId>(p.u64(4));
          if (p.at(5) != "R" && p.at(5) != "H") p.fail("channel kind must be R or H");
          ev.channel = p.at(5)[0];
          ev.value = p.u64(6);
          break;
        case TraceKind::blocked_read:
          p.expect_count(6);
          ev.server = p.server(3);
          ev.snapshot = p.u64(4);
          ev.value = p.u64(5);
          break;
      }
    } catch (const std::invalid_argument& e) {
      p.fail(e.what());
    }
    trace.events.push_back(std::move(ev));
  }
  if (!have_header) throw TraceParseError(0, "empty trace (no header)");
  return trace;
}

Trace parse_trace_text(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  return parse_trace(in);
}

void TraceRecorder::record(TraceEvent ev) {
  std::lock_guard lock(mu_);
  if (!enabled_) return;
  ev.seq = trace_.events.size();
  trace_.events.push_back(std::move(ev));
}

Trace TraceRecorder::take() {
  std::lock_guard lock(mu_);
  Trace out = std::move(trace_);
  trace_.events.clear();
  trace_.header = out.header;
  return out;
}

}  // namespace paris
