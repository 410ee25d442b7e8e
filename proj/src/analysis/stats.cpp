#include "gsp/analysis/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "gsp/error.hpp"

namespace gsp::analysis {

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(Errc::size, "mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) throw Error(Errc::size, "standard deviation needs two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::shape, "pearson inputs differ in length");
  if (x.size() < 3) throw Error(Errc::undefined_correlation, "pearson needs at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error(Errc::undefined_correlation, "zero variance input");

  PearsonResult out;
  out.df = static_cast<int>(x.size()) - 2;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double r2 = out.r * out.r;
  if (r2 >= 1.0) {
    out.p = 0.0;
  } else {
    // P(|T| > t) for t = r sqrt(df / (1 - r^2)) equals I_{df/(df+t^2)}(df/2, 1/2) = I_{1-r^2}(df/2, 1/2).
    out.p = boost::math::ibeta(out.df / 2.0, 0.5, 1.0 - r2);
  }
  return out;
}

}  // namespace gsp::analysis
