#include "emv/closed_form.hpp"

#include "emv/quadrature.hpp"

#include <cmath>

namespace emv {

namespace {

double checked_rho_squared(const MarketParams& market) {
  const double rho = market.rho();
  if (rho == 0.0) throw DegenerateSharpeRatio();
  return rho * rho;
}

// int_t^T e^{beta (T - s)} ds for tau = T - t, stable as beta -> 0.
double exp_integral(double beta, double tau) {
  if (beta == 0.0) return tau;
  return std::expm1(beta * tau) / beta;
}

// int_t^T (T - s) ds.
double linear_integral(double tau) { return 0.5 * tau * tau; }

void check_time(double t, const EMVSpec& spec) {
  if (!(t >= 0.0 && t <= spec.T)) throw std::invalid_argument("time must lie in [0, T]");
}

}  // namespace

MarketParams::MarketParams(double mu, double sigma, double r) : mu_(mu), sigma_(sigma), r_(r) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("volatility sigma must be positive");
  if (!std::isfinite(mu) || !std::isfinite(r)) throw std::invalid_argument("market parameters must be finite");
}

void EMVSpec::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("exploration weight lambda must be positive");
  if (!std::isfinite(z) || !std::isfinite(x0)) throw std::invalid_argument("z and x0 must be finite");
}

double lagrange_multiplier(const EMVSpec& spec, const MarketParams& market) {
  const double growth = std::expm1(checked_rho_squared(market) * spec.T);
  // (z e^a - x0) / (e^a - 1) rewritten as z + (z - x0) / (e^a - 1).
  return spec.z + (spec.z - spec.x0) / growth;
}

ClassicalSolution classical_solution(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                     double w) {
  check_time(t, spec);
  const double rho = market.rho();
  const double d = x - w;
  return {-(rho / market.sigma()) * d,
          d * d * std::exp(-rho * rho * (spec.T - t)) - (w - spec.z) * (w - spec.z)};
}

ValueDerivatives value_derivatives(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                   double w) {
  check_time(t, spec);
  const double rho2 = checked_rho_squared(market);
  const double sigma2 = market.sigma() * market.sigma();
  const double lambda = spec.lambda;
  const double norm2 = spec.h.l2_norm_squared();
  const double tau = spec.T - t;
  const double d = x - w;
  const double a = std::exp(-rho2 * tau);
  const double terminal_gap = (w - spec.z) * (w - spec.z);

  ValueDerivatives out;
  out.v_x = 2.0 * a * d;
  out.v_xx = 2.0 * a;
  if (spec.mode == RegularizerMode::plain) {
    const double c = lambda * lambda * norm2 / (4.0 * rho2 * sigma2);
    out.v = a * d * d - c * std::expm1(rho2 * tau) - terminal_gap;
    out.v_t = rho2 * a * d * d + c * rho2 * std::exp(rho2 * tau);
  } else {
    const double log_term = rho2 * spec.T + std::log(lambda * norm2 / (2.0 * sigma2)) - 1.0;
    out.v = a * d * d + 0.25 * lambda * rho2 * (spec.T * spec.T - t * t) - 0.5 * lambda * log_term * tau -
            terminal_gap;
    out.v_t = rho2 * a * d * d - 0.5 * lambda * rho2 * t + 0.5 * lambda * log_term;
  }
  return out;
}

double value_plain(double t, double x, const EMVSpec& spec, const MarketParams& market, double w) {
  EMVSpec s = spec;
  s.mode = RegularizerMode::plain;
  return value_derivatives(t, x, s, market, w).v;
}

double value_log(double t, double x, const EMVSpec& spec, const MarketParams& market, double w) {
  EMVSpec s = spec;
  s.mode = RegularizerMode::log;
  return value_derivatives(t, x, s, market, w).v;
}

double value(double t, double x, const EMVSpec& spec, const MarketParams& market, double w) {
  return value_derivatives(t, x, spec, market, w).v;
}

double hjb_residual(double t, double x, const EMVSpec& spec, const MarketParams& market, double w) {
  const ValueDerivatives d = value_derivatives(t, x, spec, market, w);
  const double rho = market.rho();
  const double sigma2 = market.sigma() * market.sigma();
  const double norm2 = spec.h.l2_norm_squared();
  const double drift_term = 0.5 * rho * rho * d.v_x * d.v_x / d.v_xx;
  if (spec.mode == RegularizerMode::plain) {
    return d.v_t - drift_term - spec.lambda * spec.lambda * norm2 / (2.0 * sigma2 * d.v_xx);
  }
  return d.v_t - drift_term + 0.5 * spec.lambda -
         0.5 * spec.lambda * std::log(spec.lambda * norm2 / (sigma2 * d.v_xx));
}

LocationScalePolicy optimal_policy(double t, double x, const EMVSpec& spec, const MarketParams& market,
                                   double w) {
  check_time(t, spec);
  return optimal_family(spec, market).at(t, x, w, spec);
}

FeedbackFamily optimal_family(const EMVSpec& spec, const MarketParams& market) {
  const double rho = market.rho();
  const double sigma2 = market.sigma() * market.sigma();
  FeedbackFamily f;
  f.a = -rho / market.sigma();
  if (spec.mode == RegularizerMode::plain) {
    f.c1 = spec.lambda / (2.0 * sigma2);
    f.c2 = rho * rho;
  } else {
    f.c1 = std::sqrt(spec.lambda / (2.0 * sigma2 * spec.h.l2_norm_squared()));
    f.c2 = 0.5 * rho * rho;
  }
  return f;
}

double exploration_cost(const EMVSpec& spec, const MarketParams& market) {
  if (spec.mode == RegularizerMode::log) return 0.5 * spec.lambda * spec.T;
  const double rho2 = checked_rho_squared(market);
  const double sigma2 = market.sigma() * market.sigma();
  return spec.lambda * spec.lambda * spec.h.l2_norm_squared() * std::expm1(rho2 * spec.T) / (4.0 * rho2 * sigma2);
}

double exploration_cost_by_quadrature(const EMVSpec& spec, const MarketParams& market, int nodes) {
  const double w = lagrange_multiplier(spec, market);
  const auto running = [&](double t) {
    return regularizer_value(optimal_policy(t, spec.x0, spec, market, w), spec.mode);
  };
  const double integral = gauss_legendre(running, 0.0, spec.T, nodes);
  return value(0.0, spec.x0, spec, market, w) + spec.lambda * integral -
         classical_solution(0.0, spec.x0, spec, market, w).value;
}

double cost_ratio(const EMVSpec& spec, const MarketParams& market) {
  const double rho2 = checked_rho_squared(market);
  const double sigma2 = market.sigma() * market.sigma();
  return spec.lambda * spec.h.l2_norm_squared() / (2.0 * sigma2) * std::expm1(rho2 * spec.T) / (rho2 * spec.T);
}

LocationScalePolicy improvement_step(const QuadraticValueFn& value, const EMVSpec& spec,
                                     const MarketParams& market, double t, double x) {
  const double a = value.A(t);
  if (!(a > 0.0)) throw ConvexityViolated();
  const double sigma = market.sigma();
  const double v_xx = value.dxx(t);
  const double location = -(market.rho() / sigma) * value.dx(t, x) / v_xx;
  const double scale = spec.mode == RegularizerMode::plain
                           ? spec.lambda / (sigma * sigma * v_xx)
                           : std::sqrt(spec.lambda / (sigma * sigma * spec.h.l2_norm_squared() * v_xx));
  return LocationScalePolicy(spec.h, location, scale);
}

LocationScalePolicy FeedbackFamily::at(double t, double x, double w, const EMVSpec& spec) const {
  return LocationScalePolicy(spec.h, a * (x - w), c1 * std::exp(c2 * (spec.T - t)));
}

QuadraticValueFn family_value(const FeedbackFamily& policy, const EMVSpec& spec, const MarketParams& market,
                              double w) {
  const double rho = market.rho();
  const double sigma = market.sigma();
  const double k = 2.0 * rho * sigma * policy.a + sigma * sigma * policy.a * policy.a;
  const double T = spec.T;
  const double lambda = spec.lambda;
  const double norm2 = spec.h.l2_norm_squared();
  const double c1 = policy.c1;
  const double c2 = policy.c2;
  const RegularizerMode mode = spec.mode;
  if (mode == RegularizerMode::log && !(c1 > 0.0)) {
    throw std::invalid_argument("log regularizer needs a nondegenerate policy (c1 > 0)");
  }

  QuadraticValueFn v;
  v.w = w;
  v.A = [k, T](double t) { return std::exp(k * (T - t)); };
  // F' = lambda p(S) - sigma^2 S^2 ||h'||^2 A, F(T) = -(w - z)^2.
  const double offset = (w - spec.z) * (w - spec.z);
  v.F = [=](double t) {
    const double tau = T - t;
    const double diffusion = sigma * sigma * c1 * c1 * norm2 * exp_integral(2.0 * c2 + k, tau);
    const double reward = mode == RegularizerMode::plain
                              ? c1 * norm2 * exp_integral(c2, tau)
                              : std::log(c1 * norm2) * tau + c2 * linear_integral(tau);
    return diffusion - lambda * reward - offset;
  };
  return v;
}

std::vector<PolicyIterate> policy_iteration(const FeedbackFamily& initial, const EMVSpec& spec,
                                            const MarketParams& market, int steps) {
  if (steps < 0) throw std::invalid_argument("policy_iteration: steps must be nonnegative");
  const double w = lagrange_multiplier(spec, market);
  const double rho = market.rho();
  const double sigma = market.sigma();
  const double sigma2 = sigma * sigma;

  std::vector<PolicyIterate> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  FeedbackFamily current = initial;
  for (int n = 0; n <= steps; ++n) {
    out.push_back({current, family_value(current, spec, market, w)});
    // A(t) = e^{k (T-t)} with V_xx = 2A. The improved scale is c1 e^{c2 (T-t)}.
    const double k = 2.0 * rho * sigma * current.a + sigma2 * current.a * current.a;
    FeedbackFamily next;
    next.a = -rho / sigma;
    if (spec.mode == RegularizerMode::plain) {
      next.c1 = spec.lambda / (2.0 * sigma2);
      next.c2 = -k;
    } else {
      next.c1 = std::sqrt(spec.lambda / (2.0 * sigma2 * spec.h.l2_norm_squared()));
      next.c2 = -0.5 * k;
    }
    current = next;
  }
  return out;
}

double expected_wealth(double t, const EMVSpec& spec, const MarketParams& market, double w) {
  check_time(t, spec);
  const double rho = market.rho();
  return (spec.x0 - w) * std::exp(-rho * rho * t) + w;
}

}  // namespace emv
