#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsp/state.hpp"
#include "gsp/types.hpp"

namespace gsp::analysis {

struct RatingRow {
  std::string stimulus_id;
  StimulusKind kind = StimulusKind::trajectory;
  /// Emotion counted as intended: the chain's target, or for random stimuli a
  /// reference emotion assigned round-robin so that the bin stays comparable.
  std::optional<Emotion> intended;
  std::optional<int> iteration;
  Emotion probed = Emotion::anger;
  int rating = 1;
};

using RatingTable = std::vector<RatingRow>;

struct ContrastBin {
  std::string label;
  StimulusKind kind = StimulusKind::trajectory;
  int first_iteration = 0;  // trajectory bins only, inclusive
  int last_iteration = 0;

  bool contains(const RatingRow& row) const noexcept;
};

/// {0}, {1-4}, {5-8}, {9-12}, {13-16}, {17-20}, transfer, random.
std::vector<ContrastBin> default_bins(int n_iterations = 20, int bin_width = 4);

struct ContrastPoint {
  std::string label;
  bool missing = true;
  std::size_t stimuli = 0;
  std::size_t ratings = 0;
  double mean_intended = 0.0;
  double mean_nonintended = 0.0;
  double contrast = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct BootstrapOptions {
  int resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
};

/// Mean intended minus mean non-intended rating per bin, with a percentile
/// bootstrap interval that resamples stimuli. Bins without both intended and
/// non-intended ratings are reported as missing. Throws Error(size) on an
/// empty table and Error(range) on a rating outside 1..4.
std::vector<ContrastPoint> contrast_curve(const RatingTable& table, const std::vector<ContrastBin>& bins = default_bins(),
                                          const BootstrapOptions& options = {});

}  // namespace gsp::analysis
