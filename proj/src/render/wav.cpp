#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gsp/error.hpp"
#include "gsp/render/audio.hpp"

namespace gsp::render {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::render_backend, "invalid WAVE data: " + what); }

}  // namespace

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double s : audio.samples) {
    const double clamped = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    bad("missing RIFF/WAVE header");
  }
  std::size_t at = 12;
  int channels = 0;
  int bits = 0;
  int format = 0;
  AudioBuffer audio;
  audio.sample_rate = 0;
  bool have_data = false;
  while (at + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) bad("truncated chunk");
    if (std::memcmp(b.data() + at, "fmt ", 4) == 0) {
      if (size < 16) bad("short fmt chunk");
      format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      audio.sample_rate = static_cast<int>(get_u32(b, body + 4));
      bits = get_u16(b, body + 14);
    } else if (std::memcmp(b.data() + at, "data", 4) == 0) {
      if (format != 1 || channels != 1 || bits != 16) bad("only mono 16-bit PCM is supported");
      audio.samples.reserve(size / 2);
      for (std::size_t i = 0; i + 1 < size; i += 2) {
        audio.samples.push_back(static_cast<std::int16_t>(get_u16(b, body + i)) / 32767.0);
      }
      for (double& s : audio.samples) s = std::max(s, -1.0);
      have_data = true;
    }
    at = body + size + (size & 1U);
  }
  if (!have_data) bad("no data chunk");
  if (audio.sample_rate <= 0) bad("non-positive sample rate");
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  const auto bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

}  // namespace gsp::render
