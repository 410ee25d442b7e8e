#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gsp/config.hpp"
#include "gsp/render/audio.hpp"
#include "gsp/types.hpp"

namespace gsp::test {

inline Timestamp t0() { return from_millis(1'700'000'000'000); }
inline Timestamp at(double seconds) { return t0() + Milliseconds(static_cast<std::int64_t>(seconds * 1000.0)); }

/// 9 chains (one per emotion x sentence), short chains, 3 raters per slot.
inline ExperimentConfig small_config(int iterations = 4, int per_iteration = 3) {
  ExperimentConfig c;
  c.n_chains = 9;
  c.n_iterations = iterations;
  c.participants_per_iteration = per_iteration;
  c.n_random = 3;
  c.rating_target = 2;
  return c;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gsp-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Narrow Gaussian pulses whose rate glides linearly from `f_start` to
/// `f_end` Hz, starting 10 ms in.
inline render::AudioBuffer pulse_train(double f_start, double f_end, double seconds, int rate = 22050) {
  render::AudioBuffer a;
  a.sample_rate = rate;
  a.samples.assign(static_cast<std::size_t>(seconds * rate), 0.0);
  constexpr double kWidth = 0.0004;
  for (double t = 0.01; t < seconds - 0.01;) {
    const long centre = std::lround(t * rate);
    for (long i = centre - 40; i <= centre + 40; ++i) {
      if (i < 0 || i >= static_cast<long>(a.samples.size())) continue;
      const double d = (static_cast<double>(i) / rate - t) / kWidth;
      a.samples[static_cast<std::size_t>(i)] += 0.8 * std::exp(-0.5 * d * d);
    }
    t += 1.0 / (f_start + (f_end - f_start) * t / seconds);
  }
  return a;
}

}  // namespace gsp::test
