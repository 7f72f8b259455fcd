#pragma once

#include "emv/closed_form.hpp"
#include "emv/policy.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace emv {

/// Independent, reproducible random stream number `stream` under `seed`.
/// Every path (or episode) owns one stream, so results do not depend on the
/// order or thread in which paths run.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on the open interval (0,1).
  double uniform_open();
  double normal();

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Time grid and Monte Carlo sizing.
struct SimConfig {
  int N = 252;
  double T = 1.0;
  int n_paths = 10000;
  std::uint64_t seed = 0;
  int jobs = 1;

  double dt() const noexcept { return T / N; }
  /// Throws std::invalid_argument for non-positive sizes.
  void validate() const;
};

/// Policy as a function of (t, x); deterministic-in-t schedules ignore x.
using PolicySchedule = std::function<LocationScalePolicy(double t, double x)>;

/// Running-reward weight: the path accumulates lambda * sum p(Pi_{t_i}) dt.
struct RunningReward {
  double lambda = 0.0;
  RegularizerMode mode = RegularizerMode::plain;
};

struct WealthPath {
  std::vector<double> times;
  std::vector<double> states;
  /// Sampled actions (single-action dynamics) or policy means (exploratory).
  std::vector<double> actions;
  double running_regularizer = 0.0;

  double terminal() const { return states.back(); }
};

/// One Euler step of dX = sigma u (rho dt + dW) with dW = sqrt(dt) xi.
double step(double x, double u, const MarketParams& market, double dt, double xi);

/// Euler path of the exploratory dynamics
/// dX = rho sigma mean_t dt + sigma sqrt(mean_t^2 + var_t) dW.
WealthPath simulate_exploratory(const PolicySchedule& schedule, const MarketParams& market, const SimConfig& sim,
                                double x0, std::uint64_t path_index, const RunningReward& reward = {});

/// Path driven by actions drawn from the schedule by inverse transform and
/// applied through `step`.
WealthPath simulate_sampled(const PolicySchedule& schedule, const MarketParams& market, const SimConfig& sim,
                            double x0, RandomStream& stream, const RunningReward& reward = {});

enum class Dynamics { exploratory, sampled };

struct PathOutcome {
  double terminal_wealth = 0.0;
  double objective = 0.0;  // (X_T - w)^2 - running regularizer - (w - z)^2
};

/// All paths of a Monte Carlo run, in path order. Runs on sim.jobs threads.
std::vector<PathOutcome> simulate_paths(const PolicySchedule& schedule, const EMVSpec& spec,
                                        const MarketParams& market, const SimConfig& sim, double w,
                                        Dynamics dynamics = Dynamics::exploratory);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int n = 0;
};

MonteCarloEstimate summarize(const std::vector<double>& samples);

/// Sample mean and standard error of the pathwise objective.
MonteCarloEstimate mc_objective(const PolicySchedule& schedule, const EMVSpec& spec, const MarketParams& market,
                                const SimConfig& sim, double w);

/// Schedule of the closed-form optimal policy for spec.mode.
PolicySchedule optimal_schedule(const EMVSpec& spec, const MarketParams& market, double w);

/// Degenerate schedule of the classical control u* = -(rho/sigma)(x - w).
PolicySchedule classical_schedule(const EMVSpec& spec, const MarketParams& market, double w);

}  // namespace emv
