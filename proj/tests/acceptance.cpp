#include "emv/actor_critic.hpp"
#include "emv/choquet.hpp"
#include "emv/closed_form.hpp"
#include "emv/experiment.hpp"
#include "emv/market.hpp"
#include "emv/policy.hpp"
#include "emv/quadrature.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

using namespace emv;
using emv::testing::Rng;
using emv::testing::central_difference;
using emv::testing::relative_error;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  double budget_seconds;
  std::function<Outcome()> run;
  /// Failures that are analysed in the README and do not change the exit code.
  bool known_failure = false;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

EMVSpec make_spec(RegularizerMode mode, double lambda, DistortionFn h = DistortionFn::gaussian_score()) {
  EMVSpec s;
  s.mode = mode;
  s.lambda = lambda;
  s.h = std::move(h);
  return s;
}

double default_lambda(RegularizerMode mode) { return mode == RegularizerMode::plain ? 0.01 : 0.1; }

const RegularizerMode kModes[] = {RegularizerMode::plain, RegularizerMode::log};

Outcome maximality() {
  Rng rng(2024);
  double worst_gap = HUGE_VAL, worst_moment = 0.0;
  for (const auto& h : emv::testing::builtin_distortions()) {
    for (auto [m, s] : {std::pair{0.0, 1.0}, std::pair{2.0, 0.5}}) {
      const auto best = max_constrained(h, m, s);
      for (int k = 0; k < 1000; ++k) {
        const auto q = emv::testing::random_feasible_quantile(rng, m, s);
        worst_gap = std::min(worst_gap, best.value - regularizer_of_quantile(h, q));
      }
      const auto mom = quantile_moments(best.quantile);
      worst_moment = std::max({worst_moment, std::abs(mom.mean - m), std::abs(mom.variance - s * s)});
    }
  }
  return {worst_gap >= -1e-9 && worst_moment < 1e-8,
          fmt("min(bound - candidate)=%.3g, max moment error=%.3g", worst_gap, worst_moment)};
}

Outcome hjb() {
  Rng rng(21);
  double worst = 0.0;
  for (auto mode : kModes) {
    for (int setting = 0; setting < 5; ++setting) {
      const auto spec = make_spec(mode, rng.uniform(0.005, 0.2), emv::testing::builtin_distortions()[setting % 3]);
      double mu = rng.uniform(-0.3, 0.3);
      if (std::abs(mu - 0.02) < 0.01) mu += 0.05;
      const MarketParams market(mu, rng.uniform(0.1, 0.4), 0.02);
      const double w = lagrange_multiplier(spec, market);
      for (int k = 0; k < 100; ++k) {
        worst = std::max(worst, std::abs(hjb_residual(rng.uniform(0.0, 1.0), rng.uniform(-1.0, 4.0), spec, market, w)));
      }
    }
  }
  return {worst < 1e-9, fmt("max |residual|=%.3g", worst)};
}

Outcome monte_carlo() {
  const MarketParams market(0.1, 0.2, 0.02);
  SimConfig sim;
  sim.n_paths = 100000;
  sim.seed = 3;
  bool pass = true;
  std::string detail;
  for (auto mode : kModes) {
    const auto spec = make_spec(mode, default_lambda(mode));
    const double w = lagrange_multiplier(spec, market);
    const auto est = mc_objective(optimal_schedule(spec, market, w), spec, market, sim, w);
    const double exact = value(0.0, spec.x0, spec, market, w);
    const double z = std::abs(est.estimate - exact) / est.std_error;
    pass = pass && z < 3.0;
    detail += fmt("%s: mc=%.6f exact=%.6f |z|=%.2f; ", mode_name(mode), est.estimate, exact, z);
  }
  return {pass, detail};
}

Outcome costs() {
  const MarketParams market(0.1, 0.2, 0.02);
  double worst = 0.0;
  for (auto mode : kModes) {
    for (const auto& h : emv::testing::builtin_distortions()) {
      const auto spec = make_spec(mode, default_lambda(mode), h);
      worst = std::max(worst, std::abs(exploration_cost_by_quadrature(spec, market) - exploration_cost(spec, market)));
    }
  }
  const double log_cost = exploration_cost(make_spec(RegularizerMode::log, 0.1), market);
  return {worst < 1e-10 && log_cost == 0.05, fmt("max |quadrature - closed form|=%.3g, log cost=%.17g", worst, log_cost)};
}

Outcome policy_iteration_two_steps() {
  const MarketParams market(0.1, 0.2, 0.02);
  double worst = 0.0;
  bool fixed = true;
  for (auto mode : kModes) {
    const auto spec = make_spec(mode, default_lambda(mode));
    const double w = lagrange_multiplier(spec, market);
    const double ratio = market.rho() / market.sigma();
    for (double a : {0.0, 1.0, -2 * ratio}) {
      const auto it = policy_iteration({a, 0.5, 0.3}, spec, market, 3);
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (double x : {0.5, 1.3, 2.0}) {
          const auto p = it[2].policy.at(t, x, w, spec);
          const auto q = optimal_policy(t, x, spec, market, w);
          worst = std::max({worst, std::abs(p.location() - q.location()), std::abs(p.scale() - q.scale())});
        }
      }
      fixed = fixed && it[3].policy.a == it[2].policy.a && it[3].policy.c1 == it[2].policy.c1 &&
              it[3].policy.c2 == it[2].policy.c2;
    }
  }
  return {worst < 1e-12 && fixed, fmt("max |(M,S) - optimal|=%.3g, step 3 fixed point=%s", worst, fixed ? "yes" : "no")};
}

Outcome vanishing_lambda() {
  const MarketParams market(0.42, 0.2, 0.02);
  const double t = 0.1;
  auto plain = make_spec(RegularizerMode::plain, 0.1);
  const double w = lagrange_multiplier(plain, market);
  const double x = w + 0.05;
  const double vcl = classical_solution(t, x, plain, market, w).value;
  std::vector<double> ratios;
  bool monotone = true;
  double previous = HUGE_VAL;
  for (double lambda : {1e-1, 1e-2, 1e-3, 1e-4}) {
    plain.lambda = lambda;
    ratios.push_back(std::abs(value_plain(t, x, plain, market, w) - vcl) / (lambda * lambda));
    const double gap = std::abs(value_log(t, x, make_spec(RegularizerMode::log, lambda), market, w) - vcl);
    monotone = monotone && gap < previous;
    previous = gap;
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = (*hi - *lo) / *hi;
  return {spread < 1e-9 && monotone,
          fmt("relative spread of |V-Vcl|/lambda^2=%.3g, log gap monotone=%s", spread, monotone ? "yes" : "no")};
}

Vec3 with(Vec3 v, std::size_t k, double value) {
  v[k] = value;
  return v;
}

Outcome gradients() {
  Rng rng(7);
  double critic = 0.0, schedule = 0.0, density = 0.0;
  for (auto form : {CriticForm::paper, CriticForm::corrected}) {
    EpisodeContext ctx;
    ctx.w = 1.55;
    ctx.critic_form = form;
    for (int k = 0; k < 1000; ++k) {
      const Vec3 th{rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-2, 2)};
      const double t = rng.uniform(0, 1), x = rng.uniform(-1, 3);
      const Vec3 g = critic_grad(CriticParams::from_array(th), t, x, ctx);
      for (std::size_t i = 0; i < 3; ++i) {
        const double fd = central_difference(
            [&](double v) { return critic_value(CriticParams::from_array(with(th, i, v)), t, x, ctx); }, th[i], 1e-4);
        critic = std::max(critic, relative_error(g[i], fd, 1e-11));
      }
    }
  }
  for (auto mode : kModes) {
    for (const auto& h : emv::testing::builtin_distortions()) {
      EpisodeContext ctx;
      ctx.mode = mode;
      ctx.lambda = default_lambda(mode);
      ctx.h = h;
      for (int k = 0; k < 1000; ++k) {
        const Vec3 ph{rng.uniform(-2, 2), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const double t = rng.uniform(0, 1);
        const auto r = regularizer_schedule(ActorParams::from_array(ph), t, ctx);
        for (std::size_t i = 0; i < 3; ++i) {
          const double fd = central_difference(
              [&](double v) { return regularizer_schedule(ActorParams::from_array(with(ph, i, v)), t, ctx).value; },
              ph[i], 1e-4);
          schedule = std::max(schedule, relative_error(r.grad[i], fd, 1e-11));
        }
      }
    }
  }
  for (const auto& h : emv::testing::builtin_distortions()) {
    for (int k = 0; k < 1000; ++k) {
      const double M = rng.normal() * 3, S = std::exp(rng.uniform(-2, 2));
      const LocationScalePolicy pi(h, M, S);
      const double u = sample(pi, rng.uniform(0.02, 0.98));
      const auto g = log_density_grad(pi, u);
      const double step = 1e-4 * S;
      const double dM = central_difference([&](double m) { return log_density(LocationScalePolicy(h, m, S), u); }, M, step);
      const double dS = central_difference([&](double s) { return log_density(LocationScalePolicy(h, M, s), u); }, S, step);
      density = std::max({density, relative_error(g->d_location, dM, 1e-9), relative_error(g->d_scale, dS, 1e-9)});
    }
  }
  return {critic < 1e-6 && schedule < 1e-6 && density < 1e-6,
          fmt("max rel err: critic=%.3g schedule=%.3g log-density=%.3g", critic, schedule, density)};
}

Outcome sampler_law() {
  constexpr int n = 100000;
  double worst_ks = 0.0, worst_z = 0.0;
  for (const auto& h : emv::testing::builtin_distortions()) {
    for (auto [M, S] : {std::pair{0.0, 1.0}, std::pair{-1.3, 0.7}}) {
      const LocationScalePolicy pi(h, M, S);
      RandomStream stream(8, 0);
      std::vector<double> xs(n);
      double s1 = 0.0;
      for (auto& x : xs) {
        x = sample(pi, stream.uniform_open());
        s1 += x;
      }
      const double mean = s1 / n;
      double s2 = 0.0, s4 = 0.0;
      for (double x : xs) {
        const double d = x - mean;
        s2 += d * d;
        s4 += d * d * d * d;
      }
      const double var = s2 / (n - 1);
      const auto target = moments(pi);
      worst_z = std::max({worst_z, std::abs(mean - target.mean) / std::sqrt(var / n),
                          std::abs(var - target.variance) / std::sqrt((s4 / n - var * var) / n)});
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(pi, xs[i]);
        worst_ks = std::max({worst_ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
      }
    }
  }
  return {worst_ks < 0.01 && worst_z < 4.0, fmt("max KS=%.4f, max moment |z|=%.2f", worst_ks, worst_z)};
}

ExperimentGrid table_cells(int K) {
  ExperimentGrid g;
  g.mu_list = {-0.5, -0.3};
  g.sigma_list = {0.1};
  g.K = K;
  g.seeds = 5;
  g.clip_norm = 0.0;
  return g;
}

struct ReferenceCell {
  double mu, mean, variance;
};
const ReferenceCell kReference[] = {{-0.5, 1.4052, 0.0035}, {-0.3, 1.4141, 0.0103}};

Outcome table_full() {
  const auto cells = run_cells(table_cells(20000));
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = cells[i].summary;
    const auto& p = kReference[i];
    const bool mean_ok = std::abs(s.mean - p.mean) <= 0.03;
    const bool var_ok = std::abs(s.variance - p.variance) <= 0.5 * p.variance;
    pass = pass && mean_ok && var_ok && cells[i].status == "ok";
    detail += fmt("mu=%g: mean %.4f vs %.4f (%s), variance %.4f vs %.4f (%s); ", p.mu, s.mean, p.mean,
                  mean_ok ? "ok" : "off", s.variance, p.variance, var_ok ? "ok" : "off");
  }
  return {pass, detail};
}

Outcome table_smoke() {
  const auto cells = run_cells(table_cells(4000));
  bool pass = true;
  std::string detail;
  for (const auto& c : cells) {
    pass = pass && c.summary.mean >= 1.30 && c.summary.mean <= 1.50 && c.status == "ok";
    detail += fmt("mu=%g: median mean %.4f; ", c.key.mu, c.summary.mean);
  }
  return {pass, detail};
}

Outcome constraint() {
  const MarketParams market(0.1, 0.2, 0.02);
  SimConfig sim;
  sim.n_paths = 100000;
  sim.seed = 10;
  double worst = 0.0;
  for (auto mode : kModes) {
    for (const auto& h : emv::testing::builtin_distortions()) {
      const auto spec = make_spec(mode, default_lambda(mode), h);
      const double w = lagrange_multiplier(spec, market);
      const auto paths = simulate_paths(optimal_schedule(spec, market, w), spec, market, sim, w);
      std::vector<double> terminal;
      terminal.reserve(paths.size());
      for (const auto& p : paths) terminal.push_back(p.terminal_wealth);
      const auto est = summarize(terminal);
      worst = std::max(worst, std::abs(est.estimate - spec.z) / est.std_error);
    }
  }
  return {worst < 4.0, fmt("max |mean X_T - z| / SE=%.2f", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<Criterion> criteria{
      {"1 maximality", 5, maximality},
      {"2 hjb-residual", 1, hjb},
      {"3 monte-carlo-value", 120, monte_carlo},
      {"4 cost-identities", 1, costs},
      {"5 policy-iteration", 1, policy_iteration_two_steps},
      {"6 lambda-to-zero", 1, vanishing_lambda},
      {"7 gradient-fidelity", 10, gradients},
      {"8 sampler-law", 10, sampler_law},
      {"9 table-smoke", 180, table_smoke, true},
      {"9 table-full", 3600, table_full, true},
      {"10 constraint", 60, constraint},
  };

  int failures = 0, known = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = out.pass && in_time;
    std::printf("%s %-22s %7.2fs (budget %gs) %s%s\n", pass ? "PASS" : "FAIL", c.id.c_str(), seconds,
                c.budget_seconds, out.detail.c_str(), in_time ? "" : " [over budget]");
    std::fflush(stdout);
    if (!pass) {
      if (c.known_failure && !strict) {
        ++known;
      } else {
        ++failures;
      }
    }
  }
  std::printf("%d unexpected failure(s), %d known failure(s)%s\n", failures, known,
              known > 0 ? " (see README, \"Known deviations\")" : "");
  return failures == 0 ? 0 : 1;
}
