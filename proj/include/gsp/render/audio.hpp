#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gsp::render {

inline constexpr int kDefaultSampleRate = 22050;

/// Mono audio in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  double duration() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  double peak() const noexcept;
  /// True when every sample is finite and within [-1, 1].
  bool valid() const noexcept;

  bool operator==(const AudioBuffer&) const = default;
};

/// RIFF/WAVE, PCM 16-bit little-endian, mono.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
/// Accepts mono PCM16 WAVE only; throws Error(render_backend) otherwise.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);
AudioBuffer read_wav(const std::filesystem::path& path);

/// Round-trips through 16-bit quantization, as a stored stimulus would.
AudioBuffer quantize16(const AudioBuffer& audio);

}  // namespace gsp::render
