#include "gsp/render/audio.hpp"

#include <algorithm>
#include <cmath>

namespace gsp::render {

double AudioBuffer::peak() const noexcept {
  double p = 0.0;
  for (double s : samples) p = std::max(p, std::abs(s));
  return p;
}

bool AudioBuffer::valid() const noexcept {
  return std::all_of(samples.begin(), samples.end(), [](double s) { return std::isfinite(s) && std::abs(s) <= 1.0; });
}

AudioBuffer quantize16(const AudioBuffer& audio) { return decode_wav(encode_wav(audio)); }

}  // namespace gsp::render
