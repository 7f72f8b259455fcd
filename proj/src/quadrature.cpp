// Boost 1.74's finite-interval tanh_sinh asserts that no abscissa rounds onto
// a panel edge at or above 0.5; interior panel edges are regular points here.
#define BOOST_DISABLE_ASSERTS
#include "emv/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emv {

namespace {
constexpr int kPanelPoints = 32;
}

double gauss_legendre(const UnitIntegrand& f, double a, double b, int nodes) {
  if (nodes < 1) throw std::invalid_argument("gauss_legendre: nodes must be positive");
  const int panels = (nodes + kPanelPoints - 1) / kPanelPoints;
  const double width = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * width;
    sum += boost::math::quadrature::gauss<double, kPanelPoints>::integrate(f, lo, lo + width);
  }
  return sum;
}

namespace {

struct Estimate {
  double value;
  double error;
  double l1;
};

Estimate tanh_sinh_estimate(const UnitIntegrand& f, double a, double b, double tolerance) {
  // Reusing one integrator instance keeps the abscissa tables cached.
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  Estimate e{};
  e.value = integrator.integrate(f, a, b, tolerance, &e.error, &e.l1);
  if (!std::isfinite(e.value)) throw std::domain_error("tanh_sinh: non-finite integral");
  return e;
}

}  // namespace

double tanh_sinh(const UnitIntegrand& f, double a, double b, double tolerance) {
  return tanh_sinh_estimate(f, a, b, tolerance).value;
}

double integrate_unit(const UnitIntegrand& f, const std::vector<double>& breakpoints, double tolerance,
                      double max_relative_error) {
  std::vector<double> edges{0.0};
  for (double p : breakpoints) {
    if (p > 0.0 && p < 1.0) edges.push_back(p);
  }
  edges.push_back(1.0);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto e = tanh_sinh_estimate(f, edges[i], edges[i + 1], tolerance);
    if (e.error > max_relative_error * std::max(1.0, e.l1)) {
      throw std::domain_error("quadrature did not converge");
    }
    sum += e.value;
  }
  return sum;
}

}  // namespace emv
