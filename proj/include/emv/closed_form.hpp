#pragma once

#include "emv/choquet.hpp"
#include "emv/policy.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace emv {

/// Raised wherever a formula divides by rho^2 or by e^{rho^2 T} - 1.
class DegenerateSharpeRatio : public std::domain_error {
 public:
  DegenerateSharpeRatio() : std::domain_error("degenerate Sharpe ratio (rho = 0)") {}
};

/// Raised by policy improvement when the value function is not convex in x.
class ConvexityViolated : public std::domain_error {
 public:
  ConvexityViolated() : std::domain_error("convexity violated: V_xx must be positive") {}
};

/// One risky asset (mu, sigma) and a riskless rate r.
class MarketParams {
 public:
  /// Throws std::invalid_argument unless sigma > 0.
  MarketParams(double mu, double sigma, double r);

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double r() const noexcept { return r_; }
  /// Sharpe ratio (mu - r) / sigma.
  double rho() const noexcept { return (mu_ - r_) / sigma_; }

 private:
  double mu_;
  double sigma_;
  double r_;
};

/// Exploratory mean-variance problem data.
struct EMVSpec {
  double T = 1.0;
  double lambda = 0.01;
  double z = 1.4;
  double x0 = 1.0;
  RegularizerMode mode = RegularizerMode::plain;
  DistortionFn h = DistortionFn::gaussian_score();

  /// Throws std::invalid_argument unless T > 0 and lambda > 0.
  void validate() const;
};

/// w = (z e^{rho^2 T} - x0) / (e^{rho^2 T} - 1).
double lagrange_multiplier(const EMVSpec& spec, const MarketParams& market);

struct ClassicalSolution {
  double control = 0.0;  // u* = -(rho/sigma)(x - w)
  double value = 0.0;    // (x-w)^2 e^{-rho^2 (T-t)} - (w-z)^2
};

ClassicalSolution classical_solution(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                     double w);

/// Value function of the Phi_h-regularized problem.
double value_plain(double t, double x, const EMVSpec& spec, const MarketParams& market, double w);

/// Value function of the log Phi_h-regularized problem.
double value_log(double t, double x, const EMVSpec& spec, const MarketParams& market, double w);

/// value_plain or value_log according to spec.mode.
double value(double t, double x, const EMVSpec& spec, const MarketParams& market, double w);

struct ValueDerivatives {
  double v = 0.0;
  double v_t = 0.0;
  double v_x = 0.0;
  double v_xx = 0.0;
};

/// Analytic value and partial derivatives for spec.mode.
ValueDerivatives value_derivatives(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                   double w);

/// Residual of the HJB equation after the inner minimization over (m, s),
/// evaluated with the analytic derivatives of the closed-form value.
///   plain: V_t - rho^2 V_x^2 / (2 V_xx) - lambda^2 ||h'||^2 / (2 sigma^2 V_xx)
///   log:   V_t - rho^2 V_x^2 / (2 V_xx) + lambda/2
///              - (lambda/2) log(lambda ||h'||^2 / (sigma^2 V_xx))
double hjb_residual(double t, double x, const EMVSpec& spec, const MarketParams& market, double w);

/// Optimal exploratory policy at (t, x) for spec.mode.
LocationScalePolicy optimal_policy(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                   double w);

/// Closed-form exploration cost: lambda^2 ||h'||^2 (e^{rho^2 T}-1) / (4 rho^2 sigma^2)
/// in plain mode, lambda T / 2 in log mode.
double exploration_cost(const EMVSpec& spec, const MarketParams& market);

/// V(0,x0) + lambda int_0^T p(Pi*_t) dt - Vcl(0,x0) with the time integral of
/// the optimal regularizer schedule done by Gauss-Legendre quadrature.
double exploration_cost_by_quadrature(const EMVSpec& spec, const MarketParams& market, int nodes = 256);

/// Plain-mode cost over log-mode cost for the same (lambda, h, market, T).
double cost_ratio(const EMVSpec& spec, const MarketParams& market);

/// V(t,x) = A(t) (x - w)^2 + F(t).
struct QuadraticValueFn {
  std::function<double(double)> A;
  std::function<double(double)> F;
  double w = 0.0;

  double operator()(double t, double x) const { return A(t) * (x - w) * (x - w) + F(t); }
  double dx(double t, double x) const { return 2.0 * A(t) * (x - w); }
  double dxx(double t) const { return 2.0 * A(t); }
};

/// Improved policy from a quadratic value: M = -(rho/sigma) V_x / V_xx and
/// S = lambda / (sigma^2 V_xx) (plain) or sqrt(lambda / (sigma^2 ||h'||^2 V_xx)) (log).
/// Throws ConvexityViolated if A(t) <= 0.
LocationScalePolicy improvement_step(const QuadraticValueFn& value, const EMVSpec& spec,
                                     const MarketParams& market, double t, double x);

/// Feedback policies with quantile a (x - w) + c1 e^{c2 (T - t)} h'(1 - p).
struct FeedbackFamily {
  double a = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  LocationScalePolicy at(double t, double x, double w, const EMVSpec& spec) const;
};

/// Exact value of following `policy` (Feynman-Kac in the quadratic family):
/// A(t) = e^{(2 rho sigma a + sigma^2 a^2)(T - t)}, F solved in closed form.
QuadraticValueFn family_value(const FeedbackFamily& policy, const EMVSpec& spec, const MarketParams& market,
                              double w);

struct PolicyIterate {
  FeedbackFamily policy;
  QuadraticValueFn value;
};

/// Policy iteration from `initial`; element 0 is the initial policy and its
/// value, element n the n-th improvement. From any start, element 2 is the
/// optimal policy and later elements repeat it.
std::vector<PolicyIterate> policy_iteration(const FeedbackFamily& initial, const EMVSpec& spec,
                                            const MarketParams& market, int steps = 3);

/// The optimal policy written as a FeedbackFamily.
FeedbackFamily optimal_family(const EMVSpec& spec, const MarketParams& market);

/// E[X_t*] = (x0 - w) e^{-rho^2 t} + w.
double expected_wealth(double t, const EMVSpec& spec, const MarketParams& market, double w);

}  // namespace emv
