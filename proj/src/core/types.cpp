#include "gsp/types.hpp"

#include "gsp/error.hpp"

namespace gsp {

namespace {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Timestamp now_utc() {
  return std::chrono::time_point_cast<Milliseconds>(std::chrono::system_clock::now());
}

std::string_view to_string(Emotion e) noexcept {
  switch (e) {
    case Emotion::anger:
      return "anger";
    case Emotion::happiness:
      return "happiness";
    case Emotion::sadness:
      return "sadness";
  }
  return "unknown";
}

std::optional<Emotion> parse_emotion(std::string_view name) noexcept {
  for (Emotion e : kAllEmotions) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

std::mt19937_64 substream(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
  const std::uint64_t tag = fnv1a(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64{seq};
}

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_grid: return "invalid-grid";
    case Errc::balanced_design: return "balanced-design";
    case Errc::config: return "config";
    case Errc::auth: return "auth";
    case Errc::experiment_closed: return "experiment-closed";
    case Errc::duplicate: return "duplicate";
    case Errc::expired: return "expired";
    case Errc::not_found: return "not-found";
    case Errc::arity: return "arity";
    case Errc::state: return "state";
    case Errc::empty_experiment: return "empty-experiment";
    case Errc::shape: return "shape";
    case Errc::render_backend: return "render-backend";
    case Errc::batch: return "batch";
    case Errc::corrupt_log: return "corrupt-log";
    case Errc::phase: return "phase";
    case Errc::range: return "range";
    case Errc::conditioning: return "conditioning";
    case Errc::size: return "size";
    case Errc::degenerate_variance: return "degenerate-variance";
    case Errc::undefined_correlation: return "undefined-correlation";
    case Errc::stratification: return "stratification";
    case Errc::feature_schema: return "feature-schema";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace gsp
