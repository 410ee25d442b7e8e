#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsp/events.hpp"
#include "gsp/state.hpp"

namespace gsp::service {

/// One JSON object per line: the canonical event record with a trailing
/// "crc32" field holding the CRC-32 of the record without that field.
std::string encode_line(const Event& event);
/// Throws CorruptLogError(expected_seq) on a bad checksum or malformed record.
Event decode_line(std::string_view line, std::uint64_t expected_seq);

/// Parses a whole log. Sequence numbers must run 1, 2, 3, ... without gaps.
std::vector<Event> parse_log(std::string_view text);
std::vector<Event> read_log(const std::filesystem::path& path);
std::string format_log(const std::vector<Event>& events);

/// Deterministic left fold; equivalent to gsp::fold.
ExperimentState replay(const std::vector<Event>& events);

struct Snapshot {
  std::uint64_t seq = 0;
  ExperimentState state;
};

std::filesystem::path snapshot_path(const std::filesystem::path& log_path);
void write_snapshot(const std::filesystem::path& path, const ExperimentState& state);
/// Empty when the file is missing or fails its checksum.
std::optional<Snapshot> read_snapshot(const std::filesystem::path& path);

/// Replays `events`, starting from the snapshot when it summarizes a prefix
/// of them.
ExperimentState replay_with_snapshot(const std::vector<Event>& events, const std::optional<Snapshot>& snapshot);

/// Single-writer append-only log file. Every append is flushed before it
/// returns.
class EventLog {
 public:
  /// Opens `path` for appending, creating it if absent.
  explicit EventLog(const std::filesystem::path& path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const Event& event);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

}  // namespace gsp::service
