#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace gsp {

using Milliseconds = std::chrono::milliseconds;
/// Wall-clock instant with millisecond resolution. Simulations drive their own
/// clock, so nothing in the core ever reads the system time itself.
using Timestamp = std::chrono::sys_time<Milliseconds>;

inline Timestamp from_millis(std::int64_t ms) { return Timestamp{Milliseconds{ms}}; }
inline std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp now_utc();

enum class Emotion { anger, happiness, sadness };

inline constexpr Emotion kAllEmotions[] = {Emotion::anger, Emotion::happiness, Emotion::sadness};

std::string_view to_string(Emotion e) noexcept;
std::optional<Emotion> parse_emotion(std::string_view name) noexcept;

/// Deterministic generator for one named purpose. Every random decision in the
/// system draws from `substream(seed, purpose, index)` so that a replayed
/// experiment never needs to restore generator state.
std::mt19937_64 substream(std::uint64_t seed, std::string_view purpose, std::uint64_t index);

}  // namespace gsp
