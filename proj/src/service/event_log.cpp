#include "gsp/service/event_log.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gsp/error.hpp"

namespace gsp::service {

namespace {

constexpr std::string_view kCrcKey = ",\"crc32\":\"";
// ,"crc32":"xxxxxxxx"}
constexpr std::size_t kFooterSize = kCrcKey.size() + 8 + 2;

std::uint32_t crc_of(std::string_view text) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

std::string hex8(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string encode_line(const Event& event) {
  std::string body = to_json(event).dump();
  const std::string crc = hex8(crc_of(body));
  body.pop_back();  // closing brace
  body += kCrcKey;
  body += crc;
  body += "\"}";
  return body;
}

Event decode_line(std::string_view line, std::uint64_t expected_seq) {
  if (line.size() <= kFooterSize || line.substr(line.size() - kFooterSize, kCrcKey.size()) != kCrcKey ||
      line.substr(line.size() - 2) != "\"}") {
    throw CorruptLogError(expected_seq, "missing checksum footer");
  }
  const std::string_view crc_text = line.substr(line.size() - 10, 8);
  std::string body(line.substr(0, line.size() - kFooterSize));
  body += '}';
  if (hex8(crc_of(body)) != crc_text) throw CorruptLogError(expected_seq, "checksum mismatch");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const std::exception& e) {
    throw CorruptLogError(expected_seq, std::string("unparsable record: ") + e.what());
  }
  Event event = event_from_json(j);
  if (event.seq != expected_seq) {
    throw CorruptLogError(expected_seq, "sequence gap: found " + std::to_string(event.seq));
  }
  return event;
}

std::vector<Event> parse_log(std::string_view text) {
  std::vector<Event> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    events.push_back(decode_line(line, events.size() + 1));
  }
  return events;
}

std::vector<Event> read_log(const std::filesystem::path& path) { return parse_log(slurp(path)); }

std::string format_log(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    out += encode_line(e);
    out += '\n';
  }
  return out;
}

ExperimentState replay(const std::vector<Event>& events) { return fold(events); }

std::filesystem::path snapshot_path(const std::filesystem::path& log_path) {
  auto p = log_path;
  p += ".snapshot";
  return p;
}

void write_snapshot(const std::filesystem::path& path, const ExperimentState& state) {
  const std::string body = to_json(state).dump();
  const nlohmann::json wrapper{{"seq", state.last_seq}, {"crc32", hex8(crc_of(body))}, {"state", body}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << wrapper.dump() << '\n';
    if (!out.flush()) throw Error(Errc::io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot replace " + path.string() + ": " + ec.message());
}

std::optional<Snapshot> read_snapshot(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto wrapper = nlohmann::json::parse(slurp(path));
    const auto body = wrapper.at("state").get<std::string>();
    if (hex8(crc_of(body)) != wrapper.at("crc32").get<std::string>()) return std::nullopt;
    Snapshot s;
    s.seq = wrapper.at("seq").get<std::uint64_t>();
    s.state = state_from_json(nlohmann::json::parse(body));
    if (s.state.last_seq != s.seq) return std::nullopt;
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

ExperimentState replay_with_snapshot(const std::vector<Event>& events, const std::optional<Snapshot>& snapshot) {
  if (!snapshot || snapshot->seq == 0 || snapshot->seq > events.size() ||
      snapshot->state.last_event_at != events[snapshot->seq - 1].at) {
    return replay(events);
  }
  ExperimentState state = snapshot->state;
  for (std::size_t i = snapshot->seq; i < events.size(); ++i) apply(state, events[i]);
  return state;
}

EventLog::EventLog(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw Error(Errc::io, "cannot open event log " + path.string());
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(const Event& event) {
  const std::string line = encode_line(event) + '\n';
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw Error(Errc::io, "cannot append to event log " + path_.string());
  }
}

}  // namespace gsp::service
