#include "emv/actor_critic.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace emv {

namespace {

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

bool finite(const Vec3& v) { return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]); }

// Returns true when the vector was rescaled.
bool clip(Vec3& g, double limit) {
  if (limit <= 0.0) return false;
  const double n = norm(g);
  if (!(n > limit)) return false;
  for (double& c : g) c *= limit / n;
  return true;
}

}  // namespace

CriticForm critic_form_from_name(std::string_view name) {
  if (name == "paper") return CriticForm::paper;
  if (name == "corrected") return CriticForm::corrected;
  throw std::invalid_argument("unknown critic form: " + std::string(name));
}

const char* critic_form_name(CriticForm form) noexcept {
  return form == CriticForm::paper ? "paper" : "corrected";
}

double critic_value(const CriticParams& theta, double t, double x, const EpisodeContext& ctx) {
  const double tau = ctx.T - t;
  const double d = x - ctx.w;
  const double growth = ctx.critic_form == CriticForm::paper ? std::exp(theta.theta0 * tau)
                                                             : std::expm1(theta.theta0 * tau);
  return d * d * std::exp(-theta.theta2 * tau) - theta.theta1 * growth - (ctx.w - ctx.z) * (ctx.w - ctx.z);
}

Vec3 critic_grad(const CriticParams& theta, double t, double x, const EpisodeContext& ctx) {
  const double tau = ctx.T - t;
  const double d = x - ctx.w;
  const double e0 = std::exp(theta.theta0 * tau);
  const double growth = ctx.critic_form == CriticForm::paper ? e0 : std::expm1(theta.theta0 * tau);
  return {-theta.theta1 * tau * e0, -growth, -tau * d * d * std::exp(-theta.theta2 * tau)};
}

double actor_scale(const ActorParams& phi, double t, double T) {
  return std::exp(0.5 * phi.phi1 + 0.5 * phi.phi2 * (T - t));
}

LocationScalePolicy actor_policy(const ActorParams& phi, double t, double x, const EpisodeContext& ctx) {
  return LocationScalePolicy(ctx.h, -phi.phi0 * (x - ctx.w), actor_scale(phi, t, ctx.T));
}

RegularizerSchedule regularizer_schedule(const ActorParams& phi, double t, const EpisodeContext& ctx) {
  const double tau = ctx.T - t;
  RegularizerSchedule out;
  if (ctx.mode == RegularizerMode::plain) {
    out.value = actor_scale(phi, t, ctx.T) * ctx.h.l2_norm_squared();
    out.grad = {0.0, 0.5 * out.value, 0.5 * tau * out.value};
  } else {
    out.value = 0.5 * phi.phi1 + 0.5 * phi.phi2 * tau + 2.0 * std::log(ctx.h.l2_norm());
    out.grad = {0.0, 0.5, 0.5 * tau};
  }
  return out;
}

double td_error(const CriticParams& theta, const ActorParams& phi, const Transition& tr, const EpisodeContext& ctx) {
  const double p = regularizer_schedule(phi, tr.t0, ctx).value;
  return -ctx.lambda * p * (tr.t1 - tr.t0) + critic_value(theta, tr.t1, tr.x1, ctx) -
         critic_value(theta, tr.t0, tr.x0, ctx);
}

EpisodeGradients episode_gradients(const WealthPath& episode, const CriticParams& theta, const ActorParams& phi,
                                   const EpisodeContext& ctx) {
  EpisodeGradients g;
  const std::size_t steps = episode.actions.size();
  if (steps == 0) return g;
  if (episode.states.size() != steps + 1 || episode.times.size() != steps + 1) {
    throw std::invalid_argument("episode_gradients: inconsistent episode lengths");
  }

  // V(t_{i+1}, x_{i+1}) is the frozen target; it never contributes a gradient.
  double v_here = critic_value(theta, episode.times[0], episode.states[0], ctx);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = episode.times[i];
    const double x = episode.states[i];
    const double dt = episode.times[i + 1] - t;
    const double v_next = critic_value(theta, episode.times[i + 1], episode.states[i + 1], ctx);
    const RegularizerSchedule reg = regularizer_schedule(phi, t, ctx);
    const double delta = -ctx.lambda * reg.value * dt + v_next - v_here;

    const Vec3 dv = critic_grad(theta, t, x, ctx);
    for (int k = 0; k < 3; ++k) g.theta[k] -= dv[k] * delta;

    const LocationScalePolicy policy = actor_policy(phi, t, x, ctx);
    const std::optional<ScoreGradient> score = log_density_grad(policy, episode.actions[i]);
    if (score) {
      // M = -phi0 (x - w); S = e^{phi1/2 + phi2 (T-t)/2}.
      const double s = policy.scale();
      const Vec3 dlog{-(x - ctx.w) * score->d_location, 0.5 * s * score->d_scale,
                      0.5 * (ctx.T - t) * s * score->d_scale};
      for (int k = 0; k < 3; ++k) g.phi[k] += dlog[k] * delta;
    } else {
      ++g.skipped;
    }
    for (int k = 0; k < 3; ++k) g.phi[k] -= ctx.lambda * reg.grad[k] * dt;
    v_here = v_next;
  }
  return g;
}

double lagrange_update(double w, std::span<const double> terminal_wealths, double alpha_w, double z) {
  if (terminal_wealths.empty()) throw std::invalid_argument("lagrange_update: empty batch");
  const double mean = std::accumulate(terminal_wealths.begin(), terminal_wealths.end(), 0.0) /
                      static_cast<double>(terminal_wealths.size());
  return w - alpha_w * (mean - z);
}

void TrainConfig::validate() const {
  spec.validate();
  if (N < 1) throw std::invalid_argument("N must be positive");
  if (episodes < 1) throw std::invalid_argument("episodes K must be positive");
  if (m < 1) throw std::invalid_argument("sample-average window m must be positive");
  if (!(alpha_theta > 0.0 && alpha_phi > 0.0 && alpha_w > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (!(decay >= 0.0)) throw std::invalid_argument("decay exponent must be nonnegative");
  if (clip_norm < 0.0) throw std::invalid_argument("clip norm must be nonnegative");
  if (spec.h.family() == DistortionFamily::custom) {
    throw std::invalid_argument("training needs a built-in distortion (density required)");
  }
}

double sharpe_ratio(double mean, double variance, double base) { return (mean - base) / std::sqrt(variance); }

TrainSummary summarize_terminal(std::span<const double> terminal_wealths, int window, double base) {
  TrainSummary s;
  const std::size_t n = std::min<std::size_t>(terminal_wealths.size(), static_cast<std::size_t>(window));
  s.window = static_cast<int>(n);
  if (n == 0) return s;
  const auto tail = terminal_wealths.last(n);
  s.mean = std::accumulate(tail.begin(), tail.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : tail) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / n;
  s.sharpe = sharpe_ratio(s.mean, s.variance, base);
  return s;
}

std::vector<double> TrainLog::terminal_wealths() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const EpisodeRecord& r : episodes) out.push_back(r.terminal_wealth);
  return out;
}

TrainSummary TrainLog::summary(int window, double base) const {
  const std::vector<double> tw = terminal_wealths();
  return summarize_terminal(tw, window, base);
}

TrainingDiverged::TrainingDiverged(int episode)
    : std::runtime_error("training diverged at episode " + std::to_string(episode)),
      episode_(episode) {}

TrainLog train(const TrainConfig& config, const MarketParams& market) {
  config.validate();
  const EMVSpec& spec = config.spec;
  SimConfig sim;
  sim.N = config.N;
  sim.T = spec.T;
  sim.seed = config.seed;

  EpisodeContext ctx;
  ctx.T = spec.T;
  ctx.z = spec.z;
  ctx.w = config.w0.value_or(spec.z);
  ctx.lambda = spec.lambda;
  ctx.mode = spec.mode;
  ctx.h = spec.h;
  ctx.critic_form = config.critic_form;

  CriticParams theta = config.theta;
  ActorParams phi = config.phi;
  TrainLog log;
  log.episodes.reserve(static_cast<std::size_t>(config.episodes));
  std::vector<double> batch;
  batch.reserve(static_cast<std::size_t>(config.m));

  for (int j = 1; j <= config.episodes; ++j) {
    RandomStream stream(config.seed, static_cast<std::uint64_t>(j));
    const PolicySchedule schedule = [&phi, &ctx](double t, double x) { return actor_policy(phi, t, x, ctx); };
    WealthPath episode;
    EpisodeGradients g;
    try {
      episode = simulate_sampled(schedule, market, sim, spec.x0, stream);
      g = episode_gradients(episode, theta, phi, ctx);
    } catch (const std::invalid_argument&) {
      // An actor scale that overflows or underflows surfaces as an invalid or degenerate policy.
      throw TrainingDiverged(j);
    }
    log.skipped_terms += g.skipped;
    if (clip(g.theta, config.clip_norm)) ++log.clip_events;
    if (clip(g.phi, config.clip_norm)) ++log.clip_events;

    const double rate = std::pow(static_cast<double>(j), -config.decay);
    Vec3 th = theta.as_array();
    Vec3 ph = phi.as_array();
    for (int k = 0; k < 3; ++k) {
      th[k] -= config.alpha_theta * rate * g.theta[k];
      ph[k] -= config.alpha_phi * rate * g.phi[k];
    }
    theta = CriticParams::from_array(th);
    phi = ActorParams::from_array(ph);

    batch.push_back(episode.terminal());
    if (j % config.m == 0) {
      ctx.w = lagrange_update(ctx.w, batch, config.alpha_w, spec.z);
      batch.clear();
    }
    if (!finite(th) || !finite(ph) || !std::isfinite(ctx.w) || !std::isfinite(episode.terminal())) {
      throw TrainingDiverged(j);
    }
    log.episodes.push_back({j, episode.terminal(), theta, phi, ctx.w});
  }
  return log;
}

}  // namespace emv
