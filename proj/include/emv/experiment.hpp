#pragma once

#include "emv/actor_critic.hpp"
#include "emv/csv.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emv {

/// A declarative training grid. Every (mu, sigma, mode, h) combination is one
/// cell, trained once per seed.
struct ExperimentGrid {
  std::vector<double> mu_list{-0.5};
  std::vector<double> sigma_list{0.1};
  double r = 0.02;
  double T = 1.0;
  double dt = 1.0 / 252.0;
  double z = 1.4;
  double x0 = 1.0;
  std::vector<RegularizerMode> modes{RegularizerMode::plain};
  std::vector<std::string> h_names{"gaussian_score"};
  double lambda_plain = 0.01;
  double lambda_log = 0.1;
  /// Extra lambda values for the figure series; empty means the mode's lambda only.
  std::vector<double> sweep_plain;
  std::vector<double> sweep_log;
  int K = 20000;
  int m = 10;
  int seeds = 1;
  std::uint64_t base_seed = 0;
  double alpha = 0.01;
  double decay = 0.51;
  CriticForm critic_form = CriticForm::paper;
  /// Gradient clipping norm for sweeps; 0 disables.
  double clip_norm = 1e3;
  CriticParams theta;
  ActorParams phi;
  int block = 100;
  int window = 200;

  std::string output_dir;
  int jobs = 1;

  /// Number of time steps T/dt. Throws std::invalid_argument if dt does not divide T.
  int steps() const;
  double lambda_for(RegularizerMode mode) const noexcept;
  std::vector<double> sweep_for(RegularizerMode mode) const;

  /// Throws std::invalid_argument on empty lists or inconsistent values.
  void validate() const;

  /// Canonical form; excludes output_dir and jobs, which do not change results.
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentGrid from_json(const nlohmann::json& doc);
  static ExperimentGrid load(const std::string& path);

  std::string config_hash() const;
};

/// "plain", "log" or "plain+log", for CSV provenance lines.
std::string modes_label(const std::vector<RegularizerMode>& modes);

/// Output directory: explicit value, else $EMV_OUTPUT_DIR, else "out".
std::string default_output_dir(const std::string& configured);

/// Independent seed for one cell and replicate.
std::uint64_t cell_seed(std::uint64_t base_seed, double mu, double sigma, RegularizerMode mode,
                        const std::string& h_name);

struct CellKey {
  std::string h;
  double mu = 0.0;
  double sigma = 0.0;
  RegularizerMode mode = RegularizerMode::plain;
  double lambda = 0.0;
};

/// TrainConfig for one cell.
TrainConfig cell_config(const ExperimentGrid& grid, const CellKey& key, std::uint64_t seed);

struct CellResult {
  CellKey key;
  int seeds_ok = 0;
  int seeds_total = 0;
  /// Medians over the successful seeds.
  TrainSummary summary;
  std::string status;
};

/// Median of the per-seed mean, variance and Sharpe ratio.
TrainSummary median_summary(std::span<const TrainSummary> runs);

/// Trains every cell on grid.jobs threads; results come back in grid order.
std::vector<CellResult> run_cells(const ExperimentGrid& grid);

/// One row per (h, mu, sigma) with mean/variance/sharpe/status per mode.
/// Per-cell files land in `<output_dir>/cells` when output_dir is non-empty.
CsvTable run_table(const ExperimentGrid& grid);

/// Means of consecutive blocks; a trailing partial block is dropped.
std::vector<double> block_means(std::span<const double> values, int block);

/// Block means of terminal wealth per (h, mu, sigma, mode, lambda), first seed.
CsvTable run_figure_series(const ExperimentGrid& grid);

struct TrajectoryConfig {
  double mu = -0.5;
  double sigma = 0.1;
  double r = 0.02;
  EMVSpec spec;
  int N = 252;
  std::vector<std::string> h_names{"entropy_like", "gaussian_score", "gini"};
  std::uint64_t seed = 0;
  /// When set, the actor policy is used in place of the closed-form optimum.
  std::optional<ActorParams> actor;
  std::optional<double> w;
};

/// Columns h, t, u, M, S, x. Every h sees the same random stream.
CsvTable run_sample_trajectory(const TrajectoryConfig& config);

}  // namespace emv
