#pragma once

#include "emv/closed_form.hpp"
#include "emv/market.hpp"
#include "emv/policy.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace emv {

using Vec3 = std::array<double, 3>;

/// Critic V(t,x) = (x-w)^2 e^{-theta2 (T-t)} - theta1 e^{theta0 (T-t)} - (w-z)^2.
struct CriticParams {
  double theta0 = 1.0;
  double theta1 = 0.1;
  double theta2 = 1.0;

  Vec3 as_array() const noexcept { return {theta0, theta1, theta2}; }
  static CriticParams from_array(const Vec3& v) noexcept { return {v[0], v[1], v[2]}; }
};

/// Actor with quantile -phi0 (x-w) + e^{phi1/2 + phi2 (T-t)/2} h'(1-p).
struct ActorParams {
  double phi0 = 0.5;
  double phi1 = 0.0;
  double phi2 = 1.0;

  Vec3 as_array() const noexcept { return {phi0, phi1, phi2}; }
  static ActorParams from_array(const Vec3& v) noexcept { return {v[0], v[1], v[2]}; }
};

/// `paper` keeps the bare -theta1 e^{theta0 (T-t)} term, which is off by
/// -theta1 at t = T; `corrected` uses -theta1 (e^{theta0 (T-t)} - 1).
enum class CriticForm { paper, corrected };

CriticForm critic_form_from_name(std::string_view name);
const char* critic_form_name(CriticForm form) noexcept;

/// Quantities held fixed during one episode.
struct EpisodeContext {
  double T = 1.0;
  double z = 1.4;
  double w = 1.4;
  double lambda = 0.01;
  RegularizerMode mode = RegularizerMode::plain;
  DistortionFn h = DistortionFn::gaussian_score();
  CriticForm critic_form = CriticForm::paper;
};

double critic_value(const CriticParams& theta, double t, double x, const EpisodeContext& ctx);

/// dV/dtheta at (t, x).
Vec3 critic_grad(const CriticParams& theta, double t, double x, const EpisodeContext& ctx);

/// S(t) = e^{phi1/2 + phi2 (T-t)/2}.
double actor_scale(const ActorParams& phi, double t, double T);

LocationScalePolicy actor_policy(const ActorParams& phi, double t, double x, const EpisodeContext& ctx);

struct RegularizerSchedule {
  double value = 0.0;  // p(t, phi)
  Vec3 grad{};         // dp/dphi
};

/// plain: p = S(t) ||h'||^2; log: p = phi1/2 + phi2 (T-t)/2 + 2 log ||h'||.
RegularizerSchedule regularizer_schedule(const ActorParams& phi, double t, const EpisodeContext& ctx);

struct Transition {
  double t0 = 0.0;
  double x0 = 0.0;
  double t1 = 0.0;
  double x1 = 0.0;
};

/// delta = -lambda p(t0) (t1 - t0) + V(t1, x1) - V(t0, x0).
double td_error(const CriticParams& theta, const ActorParams& phi, const Transition& tr, const EpisodeContext& ctx);

struct EpisodeGradients {
  Vec3 theta{};
  Vec3 phi{};
  /// Actions outside their policy's support; their score term is dropped.
  int skipped = 0;
};

/// Semi-gradient critic direction -sum dV/dtheta(t_i, x_i) delta_i and the
/// policy-gradient direction sum [dlog pi/dphi (u_i) delta_i - lambda dp/dphi dt].
EpisodeGradients episode_gradients(const WealthPath& episode, const CriticParams& theta, const ActorParams& phi,
                                   const EpisodeContext& ctx);

/// w - alpha_w (mean(terminal_wealths) - z).
double lagrange_update(double w, std::span<const double> terminal_wealths, double alpha_w, double z);

struct TrainConfig {
  EMVSpec spec;
  int N = 252;
  int episodes = 20000;
  int m = 10;
  double alpha_theta = 0.01;
  double alpha_phi = 0.01;
  double alpha_w = 0.01;
  double decay = 0.51;
  std::uint64_t seed = 0;
  CriticParams theta;
  ActorParams phi;
  /// Initial multiplier; defaults to z.
  std::optional<double> w0;
  CriticForm critic_form = CriticForm::paper;
  /// Rescale a raw gradient whose Euclidean norm exceeds this; 0 disables.
  double clip_norm = 0.0;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  double terminal_wealth = 0.0;
  CriticParams theta;
  ActorParams phi;
  double w = 0.0;
};

struct TrainSummary {
  double mean = 0.0;
  double variance = 0.0;
  double sharpe = 0.0;
  int window = 0;
};

/// (mean - 1) / sqrt(variance), the terminal-wealth statistic of the tables.
double sharpe_ratio(double mean, double variance, double base = 1.0);

/// Mean and population variance of the last `window` values.
TrainSummary summarize_terminal(std::span<const double> terminal_wealths, int window = 200, double base = 1.0);

struct TrainLog {
  std::vector<EpisodeRecord> episodes;
  int clip_events = 0;
  int skipped_terms = 0;

  std::vector<double> terminal_wealths() const;
  TrainSummary summary(int window = 200, double base = 1.0) const;
};

/// Raised when a parameter becomes non-finite or the actor's scale over- or underflows.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int episode);
  int episode() const noexcept { return episode_; }

 private:
  int episode_;
};

/// Runs the actor-critic loop for config.episodes episodes.
TrainLog train(const TrainConfig& config, const MarketParams& market);

}  // namespace emv
