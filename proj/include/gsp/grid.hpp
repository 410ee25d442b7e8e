#pragma once

#include <cstddef>
#include <vector>

namespace gsp {

/// Discrete slider over one latent dimension: `size()` equally spaced weights
/// from `lo()` to `hi()`, both endpoints hit exactly.
class SliderGrid {
 public:
  SliderGrid(double lo, double hi, int n_positions);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  int size() const noexcept { return n_; }
  double step() const noexcept { return step_; }

  bool contains(int index) const noexcept { return index >= 0 && index < n_; }
  double position(int index) const;
  /// Closest grid index to `weight`; ties resolve to the lower index.
  int nearest_index(double weight) const noexcept;
  std::vector<double> positions() const;

  bool operator==(const SliderGrid&) const = default;

 private:
  double lo_;
  double hi_;
  int n_;
  double step_;
};

SliderGrid make_slider_grid(double lo, double hi, int n_positions);

/// A location in the synthesizer's latent space, stored as one grid index per
/// dimension. Weights are always derived through a SliderGrid.
struct LatentPoint {
  std::vector<int> indices;

  std::size_t dimensions() const noexcept { return indices.size(); }
  std::vector<double> weights(const SliderGrid& grid) const;
  bool on_grid(const SliderGrid& grid) const noexcept;

  bool operator==(const LatentPoint&) const = default;
};

/// Point whose every weight is the grid position nearest to zero.
LatentPoint origin_point(const SliderGrid& grid, int dimensions);

}  // namespace gsp
