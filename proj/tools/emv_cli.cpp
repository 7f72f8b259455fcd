#include "emv/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace emv;
using nlohmann::json;

namespace {

struct ProblemFlags {
  double mu = -0.5;
  double sigma = 0.1;
  double r = 0.02;
  double T = 1.0;
  std::optional<double> lambda;
  std::string mode = "plain";
  std::string h = "gaussian_score";
  double z = 1.4;
  double x0 = 1.0;

  void attach(CLI::App& app) {
    app.add_option("--mu", mu, "annualized return of the risky asset")->capture_default_str();
    app.add_option("--sigma", sigma, "volatility")->capture_default_str();
    app.add_option("--r", r, "interest rate")->capture_default_str();
    app.add_option("--T", T, "horizon")->capture_default_str();
    app.add_option("--lambda", lambda, "exploration weight (default 0.01 plain, 0.1 log)");
    app.add_option("--mode", mode, "plain or log")->capture_default_str();
    app.add_option("--h", h, "entropy_like, gaussian_score or gini")->capture_default_str();
    app.add_option("--z", z, "target terminal wealth")->capture_default_str();
    app.add_option("--x0", x0, "initial wealth")->capture_default_str();
  }

  EMVSpec spec() const {
    EMVSpec s;
    s.T = T;
    s.mode = mode_from_name(mode);
    s.lambda = lambda.value_or(s.mode == RegularizerMode::plain ? 0.01 : 0.1);
    s.z = z;
    s.x0 = x0;
    s.h = DistortionFn::from_name(h);
    s.validate();
    return s;
  }

  MarketParams market() const { return {mu, sigma, r}; }

  json to_json() const {
    const auto s = spec();
    return {{"mu", mu}, {"sigma", sigma}, {"r", r}, {"T", T}, {"lambda", s.lambda},
            {"mode", mode}, {"h", h},     {"z", z}, {"x0", x0}};
  }
};

void emit(const CsvTable& table, const CsvProvenance& provenance, const std::string& path,
          const std::vector<std::string>& trailer = {}) {
  auto write = [&](std::ostream& out) {
    write_csv(out, provenance, table);
    for (const auto& line : trailer) out << line << '\n';
  };
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
  std::cerr << "wrote " << path << '\n';
}

std::string hash_of(const json& j) { return hex64(fnv1a(j.dump())); }

int run_solve(const ProblemFlags& p, int points, const std::string& out) {
  const auto spec = p.spec();
  const auto market = p.market();
  const double w = lagrange_multiplier(spec, market);
  const auto policy = optimal_policy(0.0, spec.x0, spec, market, w);
  const auto mv = moments(policy);
  CsvTable t({"quantity", "t", "value"});
  auto add = [&](const char* name, double v) { t.add_row({name, "", format_number(v)}); };
  add("rho", market.rho());
  add("w", w);
  add("value_t0", value(0.0, spec.x0, spec, market, w));
  add("classical_value_t0", classical_solution(0.0, spec.x0, spec, market, w).value);
  add("policy_mean_t0", mv.mean);
  add("policy_scale_t0", policy.scale());
  add("policy_variance_t0", mv.variance);
  add("exploration_cost", exploration_cost(spec, market));
  add("cost_ratio", cost_ratio(spec, market));
  add("expected_terminal_wealth", expected_wealth(spec.T, spec, market, w));
  add("h_norm", spec.h.l2_norm());
  // Schedule along the expected optimal wealth path.
  for (int i = 0; i <= points; ++i) {
    const double s = spec.T * i / points;
    const auto pi = optimal_policy(s, expected_wealth(s, spec, market, w), spec, market, w);
    t.add_row({"policy_mean", format_number(s), format_number(pi.location())});
    t.add_row({"policy_scale", format_number(s), format_number(pi.scale())});
  }
  auto j = p.to_json();
  j["points"] = points;
  emit(t, {hash_of(j), 0, p.mode}, out);
  return 0;
}

int run_simulate(const ProblemFlags& p, SimConfig sim, const std::string& dynamics, const std::string& policy,
                 const std::string& out) {
  const auto spec = p.spec();
  const auto market = p.market();
  sim.T = spec.T;
  sim.validate();
  const double w = lagrange_multiplier(spec, market);
  PolicySchedule schedule;
  if (policy == "optimal") {
    schedule = optimal_schedule(spec, market, w);
  } else if (policy == "classical") {
    schedule = classical_schedule(spec, market, w);
  } else {
    throw std::invalid_argument("unknown policy '" + policy + "'");
  }
  Dynamics d;
  if (dynamics == "exploratory") {
    d = Dynamics::exploratory;
  } else if (dynamics == "sampled") {
    d = Dynamics::sampled;
  } else {
    throw std::invalid_argument("unknown dynamics '" + dynamics + "'");
  }
  const auto paths = simulate_paths(schedule, spec, market, sim, w, d);
  CsvTable t({"path", "terminal_wealth", "objective"});
  for (std::size_t i = 0; i < paths.size(); ++i) {
    t.add_row({std::to_string(i), format_number(paths[i].terminal_wealth), format_number(paths[i].objective)});
  }
  auto j = p.to_json();
  j["N"] = sim.N;
  j["paths"] = sim.n_paths;
  j["dynamics"] = dynamics;
  j["policy"] = policy;
  emit(t, {hash_of(j), sim.seed, p.mode}, out);
  return 0;
}

struct TrainFlags {
  int episodes = 20000;
  std::uint64_t seed = 0;
  int m = 10;
  int N = 252;
  double alpha = 0.01;
  double decay = 0.51;
  std::string critic_form = "paper";
  double clip_norm = 0.0;
  bool summary_only = false;
};

int run_train(const ProblemFlags& p, const TrainFlags& f, const std::string& out) {
  TrainConfig c;
  c.spec = p.spec();
  c.N = f.N;
  c.episodes = f.episodes;
  c.seed = f.seed;
  c.m = f.m;
  c.alpha_theta = c.alpha_phi = c.alpha_w = f.alpha;
  c.decay = f.decay;
  c.critic_form = critic_form_from_name(f.critic_form);
  c.clip_norm = f.clip_norm;
  const auto log = train(c, p.market());
  const auto s = log.summary();

  CsvTable t({"episode", "terminal_wealth", "theta0", "theta1", "theta2", "phi0", "phi1", "phi2", "w"});
  if (!f.summary_only) {
    for (const auto& e : log.episodes) {
      t.add_row({std::to_string(e.episode), format_number(e.terminal_wealth), format_number(e.theta.theta0),
                 format_number(e.theta.theta1), format_number(e.theta.theta2), format_number(e.phi.phi0),
                 format_number(e.phi.phi1), format_number(e.phi.phi2), format_number(e.w)});
    }
  }
  auto j = p.to_json();
  j["episodes"] = f.episodes;
  j["m"] = f.m;
  j["N"] = f.N;
  j["alpha"] = f.alpha;
  j["decay"] = f.decay;
  j["critic_form"] = f.critic_form;
  j["clip_norm"] = f.clip_norm;
  if (log.clip_events > 0) std::cerr << "gradient clipping active in " << log.clip_events << " updates\n";
  const std::string summary = "# summary,window=" + std::to_string(s.window) + ",mean=" + format_number(s.mean) +
                              ",variance=" + format_number(s.variance) + ",sharpe=" + format_number(s.sharpe);
  emit(t, {hash_of(j), f.seed, p.mode}, out, {summary});
  return 0;
}

struct GridFlags {
  std::string config;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<std::string> modes;
  std::vector<std::string> h;
  std::optional<int> episodes;
  std::optional<int> seeds;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::string> critic_form;
  std::optional<double> clip_norm;
  std::string output_dir;
  int jobs = 1;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON experiment file")->check(CLI::ExistingFile);
    app.add_option("--mu", mu, "override the mu grid");
    app.add_option("--sigma", sigma, "override the sigma grid");
    app.add_option("--modes", modes, "override modes (plain, log)");
    app.add_option("--h", h, "override distortion names");
    app.add_option("--episodes", episodes, "override K");
    app.add_option("--seeds", seeds, "replicates per cell");
    app.add_option("--base-seed", base_seed, "base seed");
    app.add_option("--critic-form", critic_form, "paper or corrected");
    app.add_option("--clip-norm", clip_norm, "gradient clipping norm, 0 disables");
    app.add_option("--output-dir", output_dir, "output directory (default $EMV_OUTPUT_DIR or ./out)");
    app.add_option("--jobs", jobs, "worker threads")->capture_default_str();
  }

  ExperimentGrid grid() const {
    ExperimentGrid g = config.empty() ? ExperimentGrid{} : ExperimentGrid::load(config);
    if (!mu.empty()) g.mu_list = mu;
    if (!sigma.empty()) g.sigma_list = sigma;
    if (!modes.empty()) {
      g.modes.clear();
      for (const auto& m : modes) g.modes.push_back(mode_from_name(m));
    }
    if (!h.empty()) g.h_names = h;
    if (episodes) g.K = *episodes;
    if (seeds) g.seeds = *seeds;
    if (base_seed) g.base_seed = *base_seed;
    if (critic_form) g.critic_form = critic_form_from_name(*critic_form);
    if (clip_norm) g.clip_norm = *clip_norm;
    g.output_dir = default_output_dir(output_dir.empty() ? g.output_dir : output_dir);
    g.jobs = jobs;
    g.validate();
    return g;
  }
};

std::string grid_output(const ExperimentGrid& g, const std::string& out, const char* name) {
  return out.empty() ? (std::filesystem::path(g.output_dir) / name).string() : out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exploratory mean-variance portfolio control: closed forms, simulation and actor-critic training"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  ProblemFlags problem;
  std::string out;

  auto* solve = app.add_subcommand("solve", "closed-form solution report");
  problem.attach(*solve);
  int points = 10;
  solve->add_option("--points", points, "schedule intervals on [0, T]")->check(CLI::PositiveNumber)->capture_default_str();
  solve->add_option("--out", out, "output file (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo wealth paths under a closed-form schedule");
  problem.attach(*simulate);
  SimConfig sim;
  std::string dynamics = "exploratory";
  std::string policy = "optimal";
  simulate->add_option("--N", sim.N, "time steps")->capture_default_str();
  simulate->add_option("--paths", sim.n_paths, "number of paths")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "seed")->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "worker threads")->capture_default_str();
  simulate->add_option("--dynamics", dynamics, "exploratory or sampled")->capture_default_str();
  simulate->add_option("--policy", policy, "optimal or classical")->capture_default_str();
  simulate->add_option("--out", out, "output file (default stdout)");

  auto* trainer = app.add_subcommand("train", "actor-critic training run");
  problem.attach(*trainer);
  TrainFlags tf;
  trainer->add_option("--episodes", tf.episodes, "episodes K")->capture_default_str();
  trainer->add_option("--seed", tf.seed, "seed")->capture_default_str();
  trainer->add_option("--m", tf.m, "episodes per multiplier update")->capture_default_str();
  trainer->add_option("--N", tf.N, "time steps per episode")->capture_default_str();
  trainer->add_option("--alpha", tf.alpha, "learning rate for theta, phi and w")->capture_default_str();
  trainer->add_option("--decay", tf.decay, "learning-rate decay exponent")->capture_default_str();
  trainer->add_option("--critic-form", tf.critic_form, "paper or corrected")->capture_default_str();
  trainer->add_option("--clip-norm", tf.clip_norm, "gradient clipping norm, 0 disables")->capture_default_str();
  trainer->add_flag("--summary-only", tf.summary_only, "omit per-episode rows");
  trainer->add_option("--out", out, "output file (default stdout)");

  GridFlags gf;
  auto* table = app.add_subcommand("table", "train a grid and tabulate last-window statistics");
  gf.attach(*table);
  table->add_option("--out", out, "output file (default <output-dir>/table.csv, '-' for stdout)");

  auto* figures = app.add_subcommand("figures", "block means of terminal wealth, with lambda sweeps");
  gf.attach(*figures);
  figures->add_option("--out", out, "output file (default <output-dir>/figures.csv, '-' for stdout)");

  auto* trajectory = app.add_subcommand("trajectory", "one sampled action path per distortion function");
  problem.attach(*trajectory);
  TrajectoryConfig tc;
  std::vector<double> actor;
  std::optional<double> w;
  trajectory->add_option("--N", tc.N, "time steps")->capture_default_str();
  trajectory->add_option("--seed", tc.seed, "seed")->capture_default_str();
  trajectory->add_option("--hs", tc.h_names, "distortion functions to compare");
  trajectory->add_option("--actor", actor, "phi0 phi1 phi2 of a trained actor (default: closed-form optimum)")
      ->expected(3);
  trajectory->add_option("--w", w, "multiplier (default: closed form, or z with --actor)");
  trajectory->add_option("--out", out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(problem, points, out);
    if (*simulate) return run_simulate(problem, sim, dynamics, policy, out);
    if (*trainer) return run_train(problem, tf, out);
    if (*table || *figures) {
      const auto g = gf.grid();
      const bool is_table = table->parsed();
      const auto result = is_table ? run_table(g) : run_figure_series(g);
      emit(result, {g.config_hash(), g.base_seed, modes_label(g.modes)},
           grid_output(g, out, is_table ? "table.csv" : "figures.csv"));
      return 0;
    }
    if (*trajectory) {
      tc.mu = problem.mu;
      tc.sigma = problem.sigma;
      tc.r = problem.r;
      tc.spec = problem.spec();
      if (!actor.empty()) tc.actor = ActorParams{actor[0], actor[1], actor[2]};
      tc.w = w;
      auto j = problem.to_json();
      j["N"] = tc.N;
      j["hs"] = tc.h_names;
      j["actor"] = actor;
      emit(run_sample_trajectory(tc), {hash_of(j), tc.seed, problem.mode}, out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
