#include "emv/choquet.hpp"

#include "emv/normal.hpp"
#include "emv/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace emv {

namespace {

constexpr double kBoundaryTolerance = 1e-12;
constexpr double kIntegralTolerance = 1e-8;

double divergence_checked(double value, const char* what) {
  if (!std::isfinite(value)) throw std::domain_error(what);
  return value;
}

double endpoint_or(const DistortionFn& h, double p, double fallback) {
  try {
    const double v = h.hprime_reflected(p);
    return std::isnan(v) ? fallback : v;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace

DistortionFn DistortionFn::entropy_like() {
  DistortionFn d;
  d.name_ = "entropy_like";
  d.family_ = DistortionFamily::entropy_like;
  d.h_ = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  d.hprime_ = [](double p) { return -std::log(p) - 1.0; };
  d.hprime_reflected_ = [](double p) { return -std::log1p(-p) - 1.0; };
  d.l2_norm_ = 1.0;
  d.l2_analytic_ = true;
  return d;
}

DistortionFn DistortionFn::gaussian_score() {
  DistortionFn d;
  d.name_ = "gaussian_score";
  d.family_ = DistortionFamily::gaussian_score;
  d.h_ = [](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    const double z = normal_quantile(p);
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  d.hprime_ = [](double p) { return normal_quantile_complement(p); };
  d.hprime_reflected_ = [](double p) { return normal_quantile(p); };
  d.l2_norm_ = 1.0;
  d.l2_analytic_ = true;
  return d;
}

DistortionFn DistortionFn::gini() {
  DistortionFn d;
  d.name_ = "gini";
  d.family_ = DistortionFamily::gini;
  d.h_ = [](double p) { return p - p * p; };
  d.hprime_ = [](double p) { return 1.0 - 2.0 * p; };
  d.hprime_reflected_ = [](double p) { return 2.0 * p - 1.0; };
  d.l2_norm_ = std::sqrt(1.0 / 3.0);
  d.l2_analytic_ = true;
  return d;
}

DistortionFn DistortionFn::from_name(std::string_view name) {
  if (name == "entropy_like") return entropy_like();
  if (name == "gaussian_score") return gaussian_score();
  if (name == "gini") return gini();
  throw std::invalid_argument("unknown distortion function: " + std::string(name));
}

DistortionFn DistortionFn::custom(std::string name, UnitMap h, UnitMap hprime) {
  if (!h || !hprime) throw std::invalid_argument("custom distortion needs both h and h'");
  DistortionFn d;
  d.name_ = std::move(name);
  d.family_ = DistortionFamily::custom;
  d.h_ = std::move(h);
  d.hprime_ = std::move(hprime);
  d.hprime_reflected_ = [hp = d.hprime_](double p) { return hp(1.0 - p); };
  check_distortion(d);
  d.l2_norm_ = l2_norm_by_quadrature(d);
  if (!(d.l2_norm_ > 0.0)) throw std::invalid_argument("distortion " + d.name_ + " is constantly zero");
  d.l2_analytic_ = false;
  return d;
}

DistortionFn DistortionFn::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("distortion scale factor must be positive");
  DistortionFn d = *this;
  d.gain_ *= c;
  d.l2_norm_ *= c;
  return d;
}

SupportBounds template_support(const DistortionFn& h) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (h.family()) {
    case DistortionFamily::entropy_like:
      return {-h.gain(), inf};
    case DistortionFamily::gaussian_score:
      return {-inf, inf};
    case DistortionFamily::gini:
      return {-h.gain(), h.gain()};
    case DistortionFamily::custom:
      break;
  }
  return {endpoint_or(h, 0.0, -inf), endpoint_or(h, 1.0, inf)};
}

double l2_norm(const DistortionFn& h) { return h.l2_norm(); }

double l2_norm_by_quadrature(const DistortionFn& h, QuadratureRule rule, int gauss_nodes) {
  const auto sq = [&h](double p) {
    const double d = h.hprime(p);
    return d * d;
  };
  double integral = 0.0;
  try {
    integral = rule == QuadratureRule::tanh_sinh ? integrate_unit(sq) : gauss_legendre(sq, 0.0, 1.0, gauss_nodes);
  } catch (const std::exception&) {
    throw std::domain_error("divergent derivative norm for " + h.name());
  }
  if (!std::isfinite(integral)) throw std::domain_error("divergent derivative norm for " + h.name());
  return std::sqrt(integral);
}

double regularizer_of_quantile(const DistortionFn& h, const QuantileFn& q) {
  const auto integrand = [&](double p) { return q(p) * h.hprime_reflected(p); };
  try {
    return divergence_checked(integrate_unit(integrand, q.breakpoints), "divergent Choquet integral");
  } catch (const std::exception&) {
    throw std::domain_error("divergent Choquet integral");
  }
}

QuantileMoments quantile_moments(const QuantileFn& q) {
  const double mean = integrate_unit([&](double p) { return q(p); }, q.breakpoints);
  const double variance = integrate_unit(
      [&](double p) {
        const double d = q(p) - mean;
        return d * d;
      },
      q.breakpoints);
  return {mean, variance};
}

ConstrainedMaximizer max_constrained(const DistortionFn& h, double m, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("max_constrained: standard deviation s must be positive");
  const double norm = h.l2_norm();
  const double ratio = s / norm;
  QuantileFn q;
  q.q = [h, m, ratio](double p) { return m + ratio * h.hprime_reflected(p); };
  const SupportBounds support = template_support(h);
  q.lower = m + ratio * support.lower;
  q.upper = m + ratio * support.upper;
  return {std::move(q), s * norm};
}

void check_distortion(const DistortionFn& h, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("check_distortion: grid too small");
  if (std::abs(h.h(0.0)) > kBoundaryTolerance || std::abs(h.h(1.0)) > kBoundaryTolerance) {
    throw std::invalid_argument("distortion " + h.name() + " must vanish at 0 and 1");
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double p = (i + 0.5) / grid_points;
    const double d = h.hprime(p);
    if (!std::isfinite(d)) throw std::invalid_argument("distortion " + h.name() + " has non-finite h' inside (0,1)");
    if (d > previous + kBoundaryTolerance * (1.0 + std::abs(previous))) {
      throw std::invalid_argument("distortion " + h.name() + " is not concave (h' increases)");
    }
    previous = d;
  }
  double mass = 0.0;
  try {
    mass = tanh_sinh([&h](double p) { return h.hprime(p); });
  } catch (const std::exception&) {
    throw std::invalid_argument("distortion " + h.name() + " has a non-integrable h'");
  }
  if (std::abs(mass) > kIntegralTolerance) {
    throw std::invalid_argument("distortion " + h.name() + ": h' must integrate to zero");
  }
}

}  // namespace emv
