#include "gsp/analysis/pitch.hpp"

#include <algorithm>
#include <cmath>

namespace gsp::analysis {

namespace {

void remove_outliers(std::vector<PitchFrame>& frames, double max_semitones) {
  constexpr long kReach = 5;
  std::vector<bool> reject(frames.size(), false);
  std::vector<double> neighbours;
  for (long i = 0; i < static_cast<long>(frames.size()); ++i) {
    if (!frames[static_cast<std::size_t>(i)].voiced) continue;
    neighbours.clear();
    for (long j = std::max(0L, i - kReach); j <= std::min<long>(static_cast<long>(frames.size()) - 1, i + kReach); ++j) {
      if (j != i && frames[static_cast<std::size_t>(j)].voiced) neighbours.push_back(frames[static_cast<std::size_t>(j)].f0);
    }
    if (neighbours.size() < 3) continue;
    auto mid = neighbours.begin() + static_cast<long>(neighbours.size() / 2);
    std::nth_element(neighbours.begin(), mid, neighbours.end());
    const double distance = std::abs(12.0 * std::log2(frames[static_cast<std::size_t>(i)].f0 / *mid));
    if (distance > max_semitones) reject[static_cast<std::size_t>(i)] = true;
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (reject[i]) frames[i] = PitchFrame{frames[i].time, 0.0, 0.0, false};
  }
}

}  // namespace

std::vector<PitchFrame> track_pitch(const render::AudioBuffer& audio, const PitchOptions& options) {
  const auto& x = audio.samples;
  const double sr = audio.sample_rate;
  const auto n = static_cast<long>(x.size());
  const long window = std::lround(options.frame_s * sr);
  const long hop = std::max(1L, std::lround(options.hop_s * sr));
  const long min_lag = std::max(2L, static_cast<long>(std::floor(sr / options.max_f0)));
  const long max_lag = static_cast<long>(std::ceil(sr / options.min_f0));
  std::vector<PitchFrame> frames;
  if (n < window || window < 2) return frames;

  // Zero-padded tail so every frame can be compared at the longest lag.
  std::vector<double> padded(x.begin(), x.end());
  padded.resize(static_cast<std::size_t>(n + max_lag + 2), 0.0);
  std::vector<double> prefix(padded.size() + 1, 0.0);
  for (std::size_t i = 0; i < padded.size(); ++i) prefix[i + 1] = prefix[i] + padded[i] * padded[i];
  auto energy = [&](long start) { return prefix[static_cast<std::size_t>(start + window)] - prefix[static_cast<std::size_t>(start)]; };

  double loudest = 0.0;
  for (long start = 0; start + window <= n; start += hop) loudest = std::max(loudest, energy(start));
  const double floor = loudest * std::pow(10.0, options.silence_db / 10.0);

  std::vector<double> r(static_cast<std::size_t>(max_lag + 2), 0.0);
  for (long start = 0; start + window <= n; start += hop) {
    PitchFrame frame;
    frame.time = (static_cast<double>(start) + window / 2.0) / sr;
    const double e0 = energy(start);
    if (e0 <= floor || e0 <= 0.0) {
      frames.push_back(frame);
      continue;
    }
    const double* a = padded.data() + start;
    for (long lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      const double* b = a + lag;
      double dot = 0.0;
      for (long i = 0; i < window; ++i) dot += a[i] * b[i];
      const double el = energy(start + lag);
      r[static_cast<std::size_t>(lag)] = el > 0.0 ? dot / std::sqrt(e0 * el) : 0.0;
    }
    double best = 0.0;
    for (long lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, r[static_cast<std::size_t>(lag)]);
    if (best >= options.voicing_threshold) {
      for (long lag = min_lag; lag <= max_lag; ++lag) {
        const double c = r[static_cast<std::size_t>(lag)];
        const double left = r[static_cast<std::size_t>(lag - 1)];
        const double right = r[static_cast<std::size_t>(lag + 1)];
        if (c < left || c < right || c < options.octave_tolerance * best) continue;
        const double denom = left - 2.0 * c + right;
        const double shift = denom < 0.0 ? std::clamp(0.5 * (left - right) / denom, -0.5, 0.5) : 0.0;
        frame.f0 = sr / (static_cast<double>(lag) + shift);
        frame.strength = c;
        frame.voiced = true;
        break;
      }
    }
    frames.push_back(frame);
  }
  remove_outliers(frames, options.outlier_semitones);
  return frames;
}

}  // namespace gsp::analysis
