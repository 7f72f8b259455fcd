#include "emv/policy.hpp"

#include "emv/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace emv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Relative slack for support tests so that round-off in M + S h'(1-p) never
// pushes a freshly drawn sample outside its own support.
constexpr double kSupportSlack = 1e-12;

double effective_scale(const LocationScalePolicy& policy) {
  if (policy.degenerate()) throw std::invalid_argument("density undefined for a degenerate policy");
  return policy.scale() * policy.distortion().gain();
}

void require_density(const LocationScalePolicy& policy) {
  if (policy.distortion().family() == DistortionFamily::custom) {
    throw std::invalid_argument("density unavailable for distortion " + policy.distortion().name());
  }
}

}  // namespace

RegularizerMode mode_from_name(std::string_view name) {
  if (name == "plain") return RegularizerMode::plain;
  if (name == "log") return RegularizerMode::log;
  throw std::invalid_argument("unknown regularizer mode: " + std::string(name));
}

const char* mode_name(RegularizerMode mode) noexcept {
  return mode == RegularizerMode::plain ? "plain" : "log";
}

LocationScalePolicy::LocationScalePolicy(DistortionFn h, double location, double scale)
    : h_(std::move(h)), location_(location), scale_(scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("policy scale must be finite and nonnegative");
  }
}

double sample(const LocationScalePolicy& policy, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sample: uniform draw must lie in (0,1)");
  if (policy.degenerate()) return policy.location();
  return policy.location() + policy.scale() * policy.distortion().hprime_reflected(p);
}

PolicyMoments moments(const LocationScalePolicy& policy) {
  const double s = policy.scale();
  return {policy.location(), s * s * policy.distortion().l2_norm_squared()};
}

double regularizer_value(const LocationScalePolicy& policy, RegularizerMode mode) {
  const double phi = policy.scale() * policy.distortion().l2_norm_squared();
  if (mode == RegularizerMode::plain) return phi;
  return phi > 0.0 ? std::log(phi) : kNegInf;
}

bool in_support(const LocationScalePolicy& policy, double u) {
  const double m = policy.location();
  const double s = policy.scale() * policy.distortion().gain();
  const double slack = kSupportSlack * (std::abs(m) + s);
  switch (policy.distortion().family()) {
    case DistortionFamily::gaussian_score:
      return std::isfinite(u);
    case DistortionFamily::entropy_like:
      return u >= m - s - slack;
    case DistortionFamily::gini:
      return u >= m - s - slack && u <= m + s + slack;
    case DistortionFamily::custom: {
      const SupportBounds b = template_support(policy.distortion());
      if (policy.degenerate()) return u == m;
      return u >= m + policy.scale() * b.lower - slack && u <= m + policy.scale() * b.upper + slack;
    }
  }
  return false;
}

double log_density(const LocationScalePolicy& policy, double u) {
  require_density(policy);
  const double s = effective_scale(policy);
  if (!in_support(policy, u)) return kNegInf;
  const double y = (u - policy.location()) / s;
  switch (policy.distortion().family()) {
    case DistortionFamily::gaussian_score:
      return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s) - 0.5 * y * y;
    case DistortionFamily::entropy_like:
      return -std::log(s) - std::max(y, -1.0) - 1.0;
    case DistortionFamily::gini:
      return -std::log(2.0 * s);
    case DistortionFamily::custom:
      break;
  }
  throw std::logic_error("unreachable");
}

std::optional<ScoreGradient> log_density_grad(const LocationScalePolicy& policy, double u) {
  require_density(policy);
  const double s = effective_scale(policy);
  if (!in_support(policy, u)) return std::nullopt;
  const double gain = policy.distortion().gain();
  const double d = u - policy.location();
  ScoreGradient g;
  switch (policy.distortion().family()) {
    case DistortionFamily::gaussian_score:
      g.d_location = d / (s * s);
      g.d_scale = (-1.0 / s + d * d / (s * s * s)) * gain;
      break;
    case DistortionFamily::entropy_like:
      g.d_location = 1.0 / s;
      g.d_scale = (-1.0 / s + d / (s * s)) * gain;
      break;
    case DistortionFamily::gini:
      g.d_location = 0.0;
      g.d_scale = -gain / s;
      break;
    case DistortionFamily::custom:
      throw std::logic_error("unreachable");
  }
  return g;
}

double cdf(const LocationScalePolicy& policy, double u) {
  require_density(policy);
  const double s = effective_scale(policy);
  const double y = (u - policy.location()) / s;
  switch (policy.distortion().family()) {
    case DistortionFamily::gaussian_score:
      return normal_cdf(y);
    case DistortionFamily::entropy_like:
      return y <= -1.0 ? 0.0 : -std::expm1(-(y + 1.0));
    case DistortionFamily::gini:
      return std::clamp(0.5 * (y + 1.0), 0.0, 1.0);
    case DistortionFamily::custom:
      break;
  }
  throw std::logic_error("unreachable");
}

}  // namespace emv
