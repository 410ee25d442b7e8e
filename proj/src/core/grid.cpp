#include "gsp/grid.hpp"

#include <cmath>
#include <string>

#include "gsp/error.hpp"

namespace gsp {

SliderGrid::SliderGrid(double lo, double hi, int n_positions) : lo_(lo), hi_(hi), n_(n_positions) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(Errc::invalid_grid, "grid bounds must be finite");
  }
  if (!(lo < hi)) {
    throw Error(Errc::invalid_grid, "grid requires lo < hi");
  }
  if (n_positions < 2) {
    throw Error(Errc::invalid_grid, "grid needs at least 2 positions, got " + std::to_string(n_positions));
  }
  step_ = (hi - lo) / (n_positions - 1);
}

double SliderGrid::position(int index) const {
  if (!contains(index)) {
    throw Error(Errc::range, "grid index " + std::to_string(index) + " outside [0, " +
                                 std::to_string(n_ - 1) + "]");
  }
  // lo + k*step lands on exact zero for the default grid; the last index is
  // pinned so hi is reproduced bit for bit.
  if (index == n_ - 1) return hi_;
  return lo_ + index * step_;
}

int SliderGrid::nearest_index(double weight) const noexcept {
  if (!(weight > lo_)) return 0;
  if (!(weight < hi_)) return n_ - 1;
  int k = static_cast<int>(std::floor((weight - lo_) / step_));
  if (k >= n_ - 1) return n_ - 1;
  const double below = weight - position(k);
  const double above = position(k + 1) - weight;
  return above < below ? k + 1 : k;
}

std::vector<double> SliderGrid::positions() const {
  std::vector<double> out(static_cast<std::size_t>(n_));
  for (int k = 0; k < n_; ++k) out[static_cast<std::size_t>(k)] = position(k);
  return out;
}

SliderGrid make_slider_grid(double lo, double hi, int n_positions) { return SliderGrid(lo, hi, n_positions); }

std::vector<double> LatentPoint::weights(const SliderGrid& grid) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (int k : indices) out.push_back(grid.position(k));
  return out;
}

bool LatentPoint::on_grid(const SliderGrid& grid) const noexcept {
  for (int k : indices) {
    if (!grid.contains(k)) return false;
  }
  return true;
}

LatentPoint origin_point(const SliderGrid& grid, int dimensions) {
  return LatentPoint{std::vector<int>(static_cast<std::size_t>(dimensions), grid.nearest_index(0.0))};
}

}  // namespace gsp
