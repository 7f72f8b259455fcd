#pragma once

#include "emv/choquet.hpp"

#include <optional>

namespace emv {

/// Regularizer variant: Phi_h itself or log Phi_h.
enum class RegularizerMode { plain, log };

RegularizerMode mode_from_name(std::string_view name);
const char* mode_name(RegularizerMode mode) noexcept;

/// Exploratory action law with quantile Q(p) = M + S h'(1-p).
class LocationScalePolicy {
 public:
  /// Throws std::invalid_argument for a negative or non-finite scale.
  LocationScalePolicy(DistortionFn h, double location, double scale);

  const DistortionFn& distortion() const noexcept { return h_; }
  double location() const noexcept { return location_; }
  double scale() const noexcept { return scale_; }
  bool degenerate() const noexcept { return scale_ == 0.0; }

 private:
  DistortionFn h_;
  double location_;
  double scale_;
};

struct PolicyMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// d/dM and d/dS of log density at a fixed action.
struct ScoreGradient {
  double d_location = 0.0;
  double d_scale = 0.0;
};

/// Inverse-transform draw Q(p). Throws std::invalid_argument unless 0 < p < 1.
double sample(const LocationScalePolicy& policy, double p);

PolicyMoments moments(const LocationScalePolicy& policy);

/// Phi_h(policy) = S ||h'||_2^2, or its logarithm. In log mode a degenerate
/// policy yields -infinity rather than an error.
double regularizer_value(const LocationScalePolicy& policy, RegularizerMode mode);

/// True when u lies in the closed support. Boundary points count as inside.
bool in_support(const LocationScalePolicy& policy, double u);

/// Closed-form log density; -infinity outside the support. Throws
/// std::invalid_argument for custom distortions ("density unavailable") or
/// a degenerate policy.
double log_density(const LocationScalePolicy& policy, double u);

/// Exact partials of log_density; std::nullopt outside the support. At the
/// support edge the one-sided (interior) derivative is returned.
std::optional<ScoreGradient> log_density_grad(const LocationScalePolicy& policy, double u);

/// Closed-form CDF for the built-in families.
double cdf(const LocationScalePolicy& policy, double u);

}  // namespace emv
