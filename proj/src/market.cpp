#include "emv/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace emv {

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform_open() {
  double p = 0.0;
  do {
    p = std::generate_canonical<double, 53>(engine_);
  } while (p <= 0.0 || p >= 1.0);
  return p;
}

double RandomStream::normal() { return normal_(engine_); }

void SimConfig::validate() const {
  if (N < 1) throw std::invalid_argument("time grid count N must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
  if (jobs < 1) throw std::invalid_argument("jobs must be positive");
}

double step(double x, double u, const MarketParams& market, double dt, double xi) {
  return x + market.sigma() * u * (market.rho() * dt + std::sqrt(dt) * xi);
}

namespace {

WealthPath empty_path(const SimConfig& sim, double x0) {
  WealthPath path;
  path.times.reserve(static_cast<std::size_t>(sim.N) + 1);
  path.states.reserve(static_cast<std::size_t>(sim.N) + 1);
  path.actions.reserve(static_cast<std::size_t>(sim.N));
  path.times.push_back(0.0);
  path.states.push_back(x0);
  return path;
}

}  // namespace

WealthPath simulate_exploratory(const PolicySchedule& schedule, const MarketParams& market, const SimConfig& sim,
                                double x0, std::uint64_t path_index, const RunningReward& reward) {
  RandomStream stream(sim.seed, path_index);
  const double dt = sim.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double sigma = market.sigma();
  const double rho = market.rho();
  WealthPath path = empty_path(sim, x0);
  double x = x0;
  for (int i = 0; i < sim.N; ++i) {
    const double t = i * dt;
    const LocationScalePolicy policy = schedule(t, x);
    const PolicyMoments mv = moments(policy);
    if (reward.lambda != 0.0) path.running_regularizer += reward.lambda * regularizer_value(policy, reward.mode) * dt;
    x += rho * sigma * mv.mean * dt + sigma * std::sqrt(mv.mean * mv.mean + mv.variance) * sqrt_dt * stream.normal();
    path.actions.push_back(mv.mean);
    path.times.push_back((i + 1) * dt);
    path.states.push_back(x);
  }
  return path;
}

WealthPath simulate_sampled(const PolicySchedule& schedule, const MarketParams& market, const SimConfig& sim,
                            double x0, RandomStream& stream, const RunningReward& reward) {
  const double dt = sim.dt();
  WealthPath path = empty_path(sim, x0);
  double x = x0;
  for (int i = 0; i < sim.N; ++i) {
    const double t = i * dt;
    const LocationScalePolicy policy = schedule(t, x);
    if (reward.lambda != 0.0) path.running_regularizer += reward.lambda * regularizer_value(policy, reward.mode) * dt;
    const double u = sample(policy, stream.uniform_open());
    x = step(x, u, market, dt, stream.normal());
    path.actions.push_back(u);
    path.times.push_back((i + 1) * dt);
    path.states.push_back(x);
  }
  return path;
}

std::vector<PathOutcome> simulate_paths(const PolicySchedule& schedule, const EMVSpec& spec,
                                        const MarketParams& market, const SimConfig& sim, double w,
                                        Dynamics dynamics) {
  sim.validate();
  const RunningReward reward{spec.lambda, spec.mode};
  const double gap = (w - spec.z) * (w - spec.z);
  std::vector<PathOutcome> out(static_cast<std::size_t>(sim.n_paths));

  const auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      WealthPath path;
      if (dynamics == Dynamics::exploratory) {
        path = simulate_exploratory(schedule, market, sim, spec.x0, k, reward);
      } else {
        RandomStream stream(sim.seed, k);
        path = simulate_sampled(schedule, market, sim, spec.x0, stream, reward);
      }
      const double d = path.terminal() - w;
      out[k] = {path.terminal(), d * d - path.running_regularizer - gap};
    }
  };

  const std::size_t n = out.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(sim.jobs), n);
  if (workers <= 1) {
    run_range(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(run_range, begin, std::min(n, begin + chunk));
  }
  pool.clear();
  return out;
}

MonteCarloEstimate summarize(const std::vector<double>& samples) {
  MonteCarloEstimate est;
  est.n = static_cast<int>(samples.size());
  if (samples.empty()) return est;
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= samples.size();
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  est.estimate = mean;
  est.std_error = samples.size() > 1 ? std::sqrt(ss / (samples.size() - 1) / samples.size()) : 0.0;
  return est;
}

MonteCarloEstimate mc_objective(const PolicySchedule& schedule, const EMVSpec& spec, const MarketParams& market,
                                const SimConfig& sim, double w) {
  const std::vector<PathOutcome> paths = simulate_paths(schedule, spec, market, sim, w);
  std::vector<double> objective;
  objective.reserve(paths.size());
  for (const PathOutcome& p : paths) objective.push_back(p.objective);
  return summarize(objective);
}

PolicySchedule optimal_schedule(const EMVSpec& spec, const MarketParams& market, double w) {
  const FeedbackFamily family = optimal_family(spec, market);
  return [family, spec, w](double t, double x) { return family.at(t, x, w, spec); };
}

PolicySchedule classical_schedule(const EMVSpec& spec, const MarketParams& market, double w) {
  const double gain = -market.rho() / market.sigma();
  const DistortionFn h = spec.h;
  return [gain, h, w](double, double x) { return LocationScalePolicy(h, gain * (x - w), 0.0); };
}

}  // namespace emv
