#include "emv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace emv {

using nlohmann::json;

namespace {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t k = 0; k < std::min(workers, n); ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
}

void reject_unknown(const json& section, const std::set<std::string>& allowed, const std::string& where) {
  if (!section.is_object()) throw std::invalid_argument("config section '" + where + "' must be an object");
  for (const auto& [key, _] : section.items()) {
    if (!allowed.count(key)) throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
  }
}

std::vector<double> number_list(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

template <class T>
void read_if(const json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

std::string describe_failure(const std::exception& e) {
  if (const auto* d = dynamic_cast<const TrainingDiverged*>(&e)) {
    return "diverged at episode " + std::to_string(d->episode());
  }
  std::string what = e.what();
  std::replace(what.begin(), what.end(), ',', ';');
  return what;
}

std::string cell_name(const CellKey& key) {
  std::ostringstream s;
  s << key.h << "_mu" << format_number(key.mu) << "_sigma" << format_number(key.sigma) << '_' << mode_name(key.mode)
    << "_lambda" << format_number(key.lambda);
  return s.str();
}

struct SeedRun {
  std::optional<TrainSummary> summary;
  int clip_events = 0;
  std::vector<double> terminal;
  std::string error;
};

SeedRun run_one(const ExperimentGrid& grid, const CellKey& key, std::uint64_t seed, bool keep_terminal) {
  SeedRun out;
  try {
    auto log = train(cell_config(grid, key, seed), MarketParams(key.mu, key.sigma, grid.r));
    out.summary = log.summary(grid.window);
    out.clip_events = log.clip_events;
    if (keep_terminal) out.terminal = log.terminal_wealths();
  } catch (const std::exception& e) {
    out.error = describe_failure(e);
  }
  return out;
}

void write_cell_file(const ExperimentGrid& grid, const CellKey& key, int replicate, std::uint64_t seed,
                     const SeedRun& run) {
  if (grid.output_dir.empty()) return;
  const auto dir = std::filesystem::path(grid.output_dir) / "cells";
  std::filesystem::create_directories(dir);
  CsvTable t({"h", "mu", "sigma", "mode", "lambda", "replicate", "mean", "variance", "sharpe", "clip_events",
              "status"});
  const double nan = std::nan("");
  const auto& s = run.summary;
  t.add_row({key.h, format_number(key.mu), format_number(key.sigma), mode_name(key.mode), format_number(key.lambda),
             std::to_string(replicate), format_number(s ? s->mean : nan), format_number(s ? s->variance : nan),
             format_number(s ? s->sharpe : nan), std::to_string(run.clip_events), s ? "ok" : "failed: " + run.error});
  std::ofstream out(dir / (cell_name(key) + "_r" + std::to_string(replicate) + ".csv"));
  write_csv(out, {grid.config_hash(), seed, mode_name(key.mode)}, t);
}

std::vector<CellKey> table_keys(const ExperimentGrid& grid) {
  std::vector<CellKey> keys;
  for (const auto& h : grid.h_names)
    for (double mu : grid.mu_list)
      for (double sigma : grid.sigma_list)
        for (auto mode : grid.modes) keys.push_back({h, mu, sigma, mode, grid.lambda_for(mode)});
  return keys;
}

}  // namespace

int ExperimentGrid::steps() const {
  if (!(T > 0) || !(dt > 0)) throw std::invalid_argument("T and dt must be positive");
  const double n = T / dt;
  const double rounded = std::round(n);
  if (rounded < 1 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw std::invalid_argument("dt must divide T");
  }
  return static_cast<int>(rounded);
}

double ExperimentGrid::lambda_for(RegularizerMode mode) const noexcept {
  return mode == RegularizerMode::plain ? lambda_plain : lambda_log;
}

std::vector<double> ExperimentGrid::sweep_for(RegularizerMode mode) const {
  const auto& sweep = mode == RegularizerMode::plain ? sweep_plain : sweep_log;
  return sweep.empty() ? std::vector<double>{lambda_for(mode)} : sweep;
}

void ExperimentGrid::validate() const {
  if (mu_list.empty() || sigma_list.empty() || modes.empty() || h_names.empty()) {
    throw std::invalid_argument("grid lists must be non-empty");
  }
  for (double s : sigma_list) {
    if (!(s > 0)) throw std::invalid_argument("sigma values must be positive");
  }
  steps();
  for (const auto& h : h_names) DistortionFn::from_name(h);
  auto positive = [](double v) { return v > 0 && std::isfinite(v); };
  if (!positive(lambda_plain) || !positive(lambda_log)) throw std::invalid_argument("lambda must be positive");
  for (double l : sweep_plain)
    if (!positive(l)) throw std::invalid_argument("lambda must be positive");
  for (double l : sweep_log)
    if (!positive(l)) throw std::invalid_argument("lambda must be positive");
  if (K < 1 || m < 1 || seeds < 1 || block < 1 || window < 1 || jobs < 1) {
    throw std::invalid_argument("K, m, seeds, block, window and jobs must be at least 1");
  }
  if (!(clip_norm >= 0)) throw std::invalid_argument("clip_norm must be non-negative");
  if (!(alpha > 0) || !(decay >= 0)) throw std::invalid_argument("alpha must be positive and decay non-negative");
}

json ExperimentGrid::to_json() const {
  std::vector<std::string> mode_names;
  for (auto m : modes) mode_names.emplace_back(mode_name(m));
  return json{
      {"market", {{"mu", mu_list}, {"sigma", sigma_list}, {"r", r}}},
      {"horizon", {{"T", T}, {"dt", dt}}},
      {"target", {{"z", z}, {"x0", x0}}},
      {"regularizer",
       {{"modes", mode_names},
        {"h", h_names},
        {"lambda", {{"plain", lambda_plain}, {"log", lambda_log}}},
        {"sweep", {{"plain", sweep_plain}, {"log", sweep_log}}}}},
      {"training",
       {{"episodes", K},
        {"m", m},
        {"seeds", seeds},
        {"base_seed", base_seed},
        {"alpha", alpha},
        {"decay", decay},
        {"critic_form", critic_form_name(critic_form)},
        {"clip_norm", clip_norm},
        {"theta", theta.as_array()},
        {"phi", phi.as_array()}}},
      {"report", {{"block", block}, {"window", window}}},
  };
}

ExperimentGrid ExperimentGrid::from_json(const json& doc) {
  ExperimentGrid g;
  reject_unknown(doc, {"market", "horizon", "target", "regularizer", "training", "report", "output"}, "root");
  if (doc.contains("market")) {
    const auto& s = doc["market"];
    reject_unknown(s, {"mu", "sigma", "r"}, "market");
    if (s.contains("mu")) g.mu_list = number_list(s["mu"]);
    if (s.contains("sigma")) g.sigma_list = number_list(s["sigma"]);
    read_if(s, "r", g.r);
  }
  if (doc.contains("horizon")) {
    const auto& s = doc["horizon"];
    reject_unknown(s, {"T", "dt", "steps"}, "horizon");
    read_if(s, "T", g.T);
    if (s.contains("dt") && s.contains("steps")) throw std::invalid_argument("give either horizon.dt or horizon.steps");
    read_if(s, "dt", g.dt);
    if (s.contains("steps")) g.dt = g.T / s["steps"].get<int>();
  }
  if (doc.contains("target")) {
    const auto& s = doc["target"];
    reject_unknown(s, {"z", "x0"}, "target");
    read_if(s, "z", g.z);
    read_if(s, "x0", g.x0);
  }
  if (doc.contains("regularizer")) {
    const auto& s = doc["regularizer"];
    reject_unknown(s, {"modes", "h", "lambda", "sweep"}, "regularizer");
    if (s.contains("modes")) {
      g.modes.clear();
      for (const auto& name : s["modes"].get<std::vector<std::string>>()) g.modes.push_back(mode_from_name(name));
    }
    read_if(s, "h", g.h_names);
    if (s.contains("lambda")) {
      reject_unknown(s["lambda"], {"plain", "log"}, "regularizer.lambda");
      read_if(s["lambda"], "plain", g.lambda_plain);
      read_if(s["lambda"], "log", g.lambda_log);
    }
    if (s.contains("sweep")) {
      reject_unknown(s["sweep"], {"plain", "log"}, "regularizer.sweep");
      read_if(s["sweep"], "plain", g.sweep_plain);
      read_if(s["sweep"], "log", g.sweep_log);
    }
  }
  if (doc.contains("training")) {
    const auto& s = doc["training"];
    reject_unknown(s, {"episodes", "m", "seeds", "base_seed", "alpha", "decay", "critic_form", "clip_norm", "theta",
                      "phi"},
                   "training");
    read_if(s, "episodes", g.K);
    read_if(s, "m", g.m);
    read_if(s, "seeds", g.seeds);
    read_if(s, "base_seed", g.base_seed);
    read_if(s, "alpha", g.alpha);
    read_if(s, "decay", g.decay);
    if (s.contains("critic_form")) g.critic_form = critic_form_from_name(s["critic_form"].get<std::string>());
    read_if(s, "clip_norm", g.clip_norm);
    if (s.contains("theta")) g.theta = CriticParams::from_array(s["theta"].get<Vec3>());
    if (s.contains("phi")) g.phi = ActorParams::from_array(s["phi"].get<Vec3>());
  }
  if (doc.contains("report")) {
    const auto& s = doc["report"];
    reject_unknown(s, {"block", "window"}, "report");
    read_if(s, "block", g.block);
    read_if(s, "window", g.window);
  }
  if (doc.contains("output")) {
    const auto& s = doc["output"];
    reject_unknown(s, {"dir"}, "output");
    read_if(s, "dir", g.output_dir);
  }
  return g;
}

ExperimentGrid ExperimentGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return from_json(json::parse(in, nullptr, true, true));
}

std::string ExperimentGrid::config_hash() const { return hex64(fnv1a(to_json().dump())); }

std::string modes_label(const std::vector<RegularizerMode>& modes) {
  std::string out;
  for (auto m : modes) {
    if (!out.empty()) out += '+';
    out += mode_name(m);
  }
  return out;
}

std::string default_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("EMV_OUTPUT_DIR"); env && *env) return env;
  return "out";
}

std::uint64_t cell_seed(std::uint64_t base_seed, double mu, double sigma, RegularizerMode mode,
                        const std::string& h_name) {
  std::uint64_t h = fnv1a(&base_seed, sizeof base_seed);
  h = fnv1a(&mu, sizeof mu, h);
  h = fnv1a(&sigma, sizeof sigma, h);
  h = fnv1a(std::string(mode_name(mode)), h);
  return fnv1a(h_name, h);
}

TrainConfig cell_config(const ExperimentGrid& grid, const CellKey& key, std::uint64_t seed) {
  TrainConfig c;
  c.spec.T = grid.T;
  c.spec.lambda = key.lambda;
  c.spec.z = grid.z;
  c.spec.x0 = grid.x0;
  c.spec.mode = key.mode;
  c.spec.h = DistortionFn::from_name(key.h);
  c.N = grid.steps();
  c.episodes = grid.K;
  c.m = grid.m;
  c.alpha_theta = c.alpha_phi = c.alpha_w = grid.alpha;
  c.decay = grid.decay;
  c.seed = seed;
  c.theta = grid.theta;
  c.phi = grid.phi;
  c.critic_form = grid.critic_form;
  c.clip_norm = grid.clip_norm;
  return c;
}

TrainSummary median_summary(std::span<const TrainSummary> runs) {
  if (runs.empty()) throw std::invalid_argument("median of no runs");
  auto median = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(field(r));
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  TrainSummary out;
  out.mean = median([](const TrainSummary& r) { return r.mean; });
  out.variance = median([](const TrainSummary& r) { return r.variance; });
  out.sharpe = median([](const TrainSummary& r) { return r.sharpe; });
  out.window = runs.front().window;
  return out;
}

std::vector<CellResult> run_cells(const ExperimentGrid& grid) {
  grid.validate();
  const auto keys = table_keys(grid);
  const auto replicates = static_cast<std::size_t>(grid.seeds);
  std::vector<SeedRun> runs(keys.size() * replicates);
  parallel_for(runs.size(), grid.jobs, [&](std::size_t i) {
    const auto& key = keys[i / replicates];
    const int rep = static_cast<int>(i % replicates);
    const auto seed = cell_seed(grid.base_seed + static_cast<std::uint64_t>(rep), key.mu, key.sigma, key.mode, key.h);
    runs[i] = run_one(grid, key, seed, false);
    write_cell_file(grid, key, rep, seed, runs[i]);
  });

  std::vector<CellResult> out;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    CellResult cell;
    cell.key = keys[k];
    cell.seeds_total = grid.seeds;
    std::vector<TrainSummary> ok;
    std::string first_error;
    for (std::size_t r = 0; r < replicates; ++r) {
      const auto& run = runs[k * replicates + r];
      if (run.summary) {
        ok.push_back(*run.summary);
      } else if (first_error.empty()) {
        first_error = run.error;
      }
    }
    cell.seeds_ok = static_cast<int>(ok.size());
    if (ok.empty()) {
      const double nan = std::nan("");
      cell.summary = {nan, nan, nan, grid.window};
      cell.status = "failed: " + first_error;
    } else {
      cell.summary = median_summary(ok);
      cell.status = cell.seeds_ok == cell.seeds_total ? "ok"
                                                      : "partial " + std::to_string(cell.seeds_ok) + "/" +
                                                            std::to_string(cell.seeds_total) + ": " + first_error;
    }
    out.push_back(std::move(cell));
  }
  return out;
}

CsvTable run_table(const ExperimentGrid& grid) {
  const auto cells = run_cells(grid);
  std::vector<std::string> columns{"h", "mu", "sigma"};
  for (auto mode : grid.modes) {
    const std::string p = mode_name(mode);
    for (const char* c : {"_mean", "_variance", "_sharpe", "_status"}) columns.push_back(p + c);
  }
  CsvTable table(columns);
  const std::size_t per_row = grid.modes.size();
  for (std::size_t i = 0; i < cells.size(); i += per_row) {
    const auto& key = cells[i].key;
    std::vector<std::string> row{key.h, format_number(key.mu), format_number(key.sigma)};
    for (std::size_t j = 0; j < per_row; ++j) {
      const auto& c = cells[i + j];
      row.push_back(format_number(c.summary.mean));
      row.push_back(format_number(c.summary.variance));
      row.push_back(format_number(c.summary.sharpe));
      row.push_back(c.status);
    }
    table.add_row(std::move(row));
  }
  return table;
}

std::vector<double> block_means(std::span<const double> values, int block) {
  if (block < 1) throw std::invalid_argument("block size must be at least 1");
  std::vector<double> out;
  const auto b = static_cast<std::size_t>(block);
  for (std::size_t start = 0; start + b <= values.size(); start += b) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + b; ++i) sum += values[i];
    out.push_back(sum / block);
  }
  return out;
}

CsvTable run_figure_series(const ExperimentGrid& grid) {
  grid.validate();
  std::vector<CellKey> keys;
  for (const auto& h : grid.h_names)
    for (double mu : grid.mu_list)
      for (double sigma : grid.sigma_list)
        for (auto mode : grid.modes)
          for (double lambda : grid.sweep_for(mode)) keys.push_back({h, mu, sigma, mode, lambda});

  std::vector<SeedRun> runs(keys.size());
  parallel_for(keys.size(), grid.jobs, [&](std::size_t i) {
    const auto& key = keys[i];
    const auto seed = cell_seed(grid.base_seed, key.mu, key.sigma, key.mode, key.h);
    runs[i] = run_one(grid, key, seed, true);
    write_cell_file(grid, key, 0, seed, runs[i]);
  });

  CsvTable table({"h", "mu", "sigma", "mode", "lambda", "block", "mean", "status"});
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& key = keys[i];
    std::vector<std::string> prefix{key.h, format_number(key.mu), format_number(key.sigma), mode_name(key.mode),
                                    format_number(key.lambda)};
    auto row = [&](std::string block, double mean, std::string status) {
      auto r = prefix;
      r.push_back(std::move(block));
      r.push_back(format_number(mean));
      r.push_back(std::move(status));
      table.add_row(std::move(r));
    };
    if (!runs[i].summary) {
      row("", std::nan(""), "failed: " + runs[i].error);
      continue;
    }
    const auto means = block_means(runs[i].terminal, grid.block);
    for (std::size_t b = 0; b < means.size(); ++b) row(std::to_string(b + 1), means[b], "ok");
  }
  return table;
}

CsvTable run_sample_trajectory(const TrajectoryConfig& config) {
  const MarketParams market(config.mu, config.sigma, config.r);
  SimConfig sim;
  sim.N = config.N;
  sim.T = config.spec.T;
  sim.n_paths = 1;
  sim.seed = config.seed;
  sim.validate();

  CsvTable table({"h", "t", "u", "M", "S", "x"});
  for (const auto& name : config.h_names) {
    EMVSpec spec = config.spec;
    spec.h = DistortionFn::from_name(name);
    spec.validate();
    PolicySchedule schedule;
    if (config.actor) {
      EpisodeContext ctx;
      ctx.T = spec.T;
      ctx.z = spec.z;
      ctx.w = config.w.value_or(spec.z);
      ctx.lambda = spec.lambda;
      ctx.mode = spec.mode;
      ctx.h = spec.h;
      schedule = [phi = *config.actor, ctx](double t, double x) { return actor_policy(phi, t, x, ctx); };
    } else {
      schedule = optimal_schedule(spec, market, config.w.value_or(lagrange_multiplier(spec, market)));
    }
    RandomStream stream(config.seed, 0);
    const auto path = simulate_sampled(schedule, market, sim, spec.x0, stream);
    for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
      const auto policy = schedule(path.times[i], path.states[i]);
      table.add_row({name, format_number(path.times[i]), format_number(path.actions[i]),
                     format_number(policy.location()), format_number(policy.scale()), format_number(path.states[i])});
    }
  }
  return table;
}

}  // namespace emv
