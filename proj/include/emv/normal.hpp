#pragma once

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

namespace emv {

/// z(p), the standard normal quantile.
inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// z(1 - p) without forming 1 - p.
inline double normal_quantile_complement(double p) {
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), p));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace emv
