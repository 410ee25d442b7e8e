#include "gsp/analysis/contrast.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "gsp/error.hpp"

namespace gsp::analysis {

namespace {

// Per-stimulus sums so a bootstrap draw is a cheap re-weighting.
struct StimulusSums {
  double intended = 0.0;
  int n_intended = 0;
  double other = 0.0;
  int n_other = 0;
};

struct Totals {
  double intended = 0.0;
  long n_intended = 0;
  double other = 0.0;
  long n_other = 0;

  void add(const StimulusSums& s) {
    intended += s.intended;
    n_intended += s.n_intended;
    other += s.other;
    n_other += s.n_other;
  }
  bool usable() const { return n_intended > 0 && n_other > 0; }
  double contrast() const { return intended / n_intended - other / n_other; }
};

double percentile(std::vector<double>& sorted, double q) {
  // Linear interpolation between order statistics.
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

bool ContrastBin::contains(const RatingRow& row) const noexcept {
  if (row.kind != kind) return false;
  if (kind != StimulusKind::trajectory) return true;
  return row.iteration && *row.iteration >= first_iteration && *row.iteration <= last_iteration;
}

std::vector<ContrastBin> default_bins(int n_iterations, int bin_width) {
  std::vector<ContrastBin> bins{{"0", StimulusKind::trajectory, 0, 0}};
  for (int first = 1; first <= n_iterations; first += bin_width) {
    const int last = std::min(n_iterations, first + bin_width - 1);
    bins.push_back({std::to_string(first) + "-" + std::to_string(last), StimulusKind::trajectory, first, last});
  }
  bins.push_back({"transfer", StimulusKind::transfer, 0, 0});
  bins.push_back({"random", StimulusKind::random, 0, 0});
  return bins;
}

std::vector<ContrastPoint> contrast_curve(const RatingTable& table, const std::vector<ContrastBin>& bins,
                                          const BootstrapOptions& options) {
  if (table.empty()) throw Error(Errc::size, "rating table is empty");
  for (const auto& row : table) {
    if (row.rating < 1 || row.rating > 4) throw Error(Errc::range, "rating outside 1..4 for " + row.stimulus_id);
  }

  std::vector<ContrastPoint> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const auto& bin = bins[b];
    ContrastPoint point;
    point.label = bin.label;

    std::map<std::string, StimulusSums> per_stimulus;
    for (const auto& row : table) {
      if (!bin.contains(row) || !row.intended) continue;
      auto& s = per_stimulus[row.stimulus_id];
      if (row.probed == *row.intended) {
        s.intended += row.rating;
        ++s.n_intended;
      } else {
        s.other += row.rating;
        ++s.n_other;
      }
      ++point.ratings;
    }
    std::vector<StimulusSums> stimuli;
    Totals totals;
    for (const auto& [id, s] : per_stimulus) {
      stimuli.push_back(s);
      totals.add(s);
    }
    point.stimuli = stimuli.size();
    if (!totals.usable()) {
      out.push_back(point);
      continue;
    }
    point.missing = false;
    point.mean_intended = totals.intended / totals.n_intended;
    point.mean_nonintended = totals.other / totals.n_other;
    point.contrast = totals.contrast();

    std::mt19937_64 rng(options.seed + 1000003ULL * b);
    std::uniform_int_distribution<std::size_t> pick(0, stimuli.size() - 1);
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(options.resamples));
    for (int r = 0; r < options.resamples; ++r) {
      Totals t;
      for (std::size_t i = 0; i < stimuli.size(); ++i) t.add(stimuli[pick(rng)]);
      if (t.usable()) draws.push_back(t.contrast());
    }
    if (draws.empty()) {
      point.ci_low = point.ci_high = point.contrast;
    } else {
      std::sort(draws.begin(), draws.end());
      const double tail = (1.0 - options.level) / 2.0;
      point.ci_low = percentile(draws, tail);
      point.ci_high = percentile(draws, 1.0 - tail);
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace gsp::analysis
