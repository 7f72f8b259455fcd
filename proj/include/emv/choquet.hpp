#pragma once

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace emv {

using UnitMap = std::function<double(double)>;

/// Which closed-form exploration family a distortion generates. Only the
/// three built-ins carry densities; `custom` supports quantiles and norms.
enum class DistortionFamily { entropy_like, gaussian_score, gini, custom };

/// A concave distortion h on [0,1] with h(0) = h(1) = 0, its right-derivative
/// and ||h'||_2. Immutable after construction.
class DistortionFn {
 public:
  /// h(p) = -p log p; the optimal sampler is a shifted exponential.
  static DistortionFn entropy_like();
  /// h(p) = phi(z(p)); h'(p) = z(1-p), a normal sampler.
  static DistortionFn gaussian_score();
  /// h(p) = p - p^2; a uniform sampler.
  static DistortionFn gini();
  /// Built-in lookup by name. Throws std::invalid_argument on unknown names.
  static DistortionFn from_name(std::string_view name);

  /// User-supplied distortion. The norm is computed by quadrature and the
  /// sampled concavity / boundary invariants are checked; violations throw
  /// std::invalid_argument, a divergent norm throws std::domain_error.
  static DistortionFn custom(std::string name, UnitMap h, UnitMap hprime);

  /// c * h for c > 0. Keeps the family (densities rescale with c).
  [[nodiscard]] DistortionFn scaled(double c) const;

  const std::string& name() const noexcept { return name_; }
  DistortionFamily family() const noexcept { return family_; }
  /// Multiplier applied to the family template h'.
  double gain() const noexcept { return gain_; }
  double h(double p) const { return gain_ * h_(p); }
  double hprime(double p) const { return gain_ * hprime_(p); }
  /// h'(1 - p) evaluated without cancellation near p = 0.
  double hprime_reflected(double p) const { return gain_ * hprime_reflected_(p); }
  double l2_norm() const noexcept { return l2_norm_; }
  double l2_norm_squared() const noexcept { return l2_norm_ * l2_norm_; }
  bool l2_analytic() const noexcept { return l2_analytic_; }

 private:
  DistortionFn() = default;

  std::string name_;
  DistortionFamily family_ = DistortionFamily::custom;
  double gain_ = 1.0;
  UnitMap h_;
  UnitMap hprime_;
  UnitMap hprime_reflected_;
  double l2_norm_ = 0.0;
  bool l2_analytic_ = false;
};

/// A nondecreasing quantile function on (0,1) with its support bounds.
struct QuantileFn {
  UnitMap q;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  /// Points in (0,1) where q has a kink or jump; quadrature splits there.
  std::vector<double> breakpoints;

  double operator()(double p) const { return q(p); }
};

struct SupportBounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Range of the template p -> h'(1-p) over (0,1).
SupportBounds template_support(const DistortionFn& h);

enum class QuadratureRule { tanh_sinh, gauss_legendre };

/// ||h'||_2: the analytic value when the descriptor carries one.
double l2_norm(const DistortionFn& h);

/// ||h'||_2 by quadrature regardless of analytic availability.
double l2_norm_by_quadrature(const DistortionFn& h,
                             QuadratureRule rule = QuadratureRule::tanh_sinh,
                             int gauss_nodes = 256);

/// Phi_h(Pi) = int_0^1 Q(p) h'(1-p) dp. Throws std::domain_error when the
/// integral diverges.
double regularizer_of_quantile(const DistortionFn& h, const QuantileFn& q);

struct QuantileMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the law with quantile q, by quadrature.
QuantileMoments quantile_moments(const QuantileFn& q);

struct ConstrainedMaximizer {
  QuantileFn quantile;  // m + s h'(1-p) / ||h'||_2
  double value = 0.0;   // s ||h'||_2
};

/// argmax of Phi_h over laws with mean m and variance s^2.
/// Throws std::invalid_argument for s <= 0.
ConstrainedMaximizer max_constrained(const DistortionFn& h, double m, double s);

/// Checks h(0) = h(1) = 0, h' nonincreasing on a uniform grid and
/// int h' = 0. Throws std::invalid_argument describing the first violation.
void check_distortion(const DistortionFn& h, int grid_points = 2048);

}  // namespace emv
