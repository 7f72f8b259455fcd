#pragma once

#include "emv/choquet.hpp"
#include "emv/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace emv::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Fourth-order central difference.
inline double central_difference(const std::function<double(double)>& f, double x, double step) {
  return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) / (12 * step);
}

/// |a - b| / max(|a|, |b|), with differences below `floor` counting as exact.
inline double relative_error(double a, double b, double floor = 1e-12) {
  const double diff = std::abs(a - b);
  if (diff <= floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

/// Random nondecreasing piecewise-linear map on [0,1] with `knots` interior breakpoints.
struct Ramp {
  std::vector<double> knots;
  std::function<double(double)> f;
};

inline Ramp random_ramp(Rng& rng, int knots) {
  std::vector<double> xs{0.0, 1.0};
  for (int i = 0; i < knots; ++i) xs.push_back(rng.uniform());
  std::sort(xs.begin(), xs.end());
  std::vector<double> ys{0.0};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double jump = rng.uniform() < 0.3 ? 10.0 : 1.0;
    ys.push_back(ys.back() + jump * rng.uniform());
  }
  std::vector<double> interior(xs.begin() + 1, xs.end() - 1);
  return {interior, [xs, ys](double p) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), p);
    const auto i = static_cast<std::size_t>(std::clamp<long>(it - xs.begin(), 1, static_cast<long>(xs.size()) - 1));
    const double span = xs[i] - xs[i - 1];
    const double f = span > 0 ? (p - xs[i - 1]) / span : 0.0;
    return ys[i - 1] + f * (ys[i] - ys[i - 1]);
  }};
}

/// A feasible quantile with mean m and variance s^2: a convex mixture of the
/// built-in maximizer shapes and their mirror images plus a random ramp,
/// renormalized by quadrature.
inline QuantileFn random_feasible_quantile(Rng& rng, double m, double s) {
  using Shape = std::function<double(double)>;
  static const std::array<Shape, 5> shapes{
      [](double p) { return normal_quantile(p); },
      [](double p) { return -std::log1p(-p) - 1.0; },
      [](double p) { return std::log(p) + 1.0; },
      [](double p) { return std::sqrt(3.0) * (2 * p - 1); },
      [](double p) { return p * p * p; },
  };
  std::array<double, shapes.size()> weights{};
  const int favourite = rng.integer(0, static_cast<int>(shapes.size()) - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = -std::log(rng.uniform(1e-12, 1.0));
    if (static_cast<int>(i) == favourite && rng.uniform() < 0.5) weights[i] *= 50.0;
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  const double ramp_weight = rng.uniform() < 0.2 ? 0.0 : std::pow(rng.uniform(), 2);
  auto ramp = random_ramp(rng, rng.integer(1, 8));
  auto raw = [weights, ramp = ramp.f, ramp_weight](double p) {
    double v = ramp_weight * ramp(p);
    for (std::size_t i = 0; i < weights.size(); ++i) v += weights[i] * shapes[i](p);
    return v;
  };
  QuantileFn base{raw};
  base.breakpoints = ramp.knots;
  const auto mv = quantile_moments(base);
  const double sd = std::sqrt(mv.variance);
  const double mean = mv.mean;
  QuantileFn out{[raw, mean, sd, m, s](double p) { return m + s * (raw(p) - mean) / sd; }};
  out.breakpoints = ramp.knots;
  return out;
}

inline std::vector<DistortionFn> builtin_distortions() {
  return {DistortionFn::entropy_like(), DistortionFn::gaussian_score(), DistortionFn::gini()};
}

}  // namespace emv::testing
