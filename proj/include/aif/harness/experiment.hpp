#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aif/harness/agent.hpp"

namespace aif::harness {

struct EpisodeSummary {
  int episode = 0;
  int sim_steps = 0;
  bool goal_reached = false;
  double reward_total = 0.0;
  double cumulative_vfe = 0.0;
  double mean_vae_loss = 0.0;
  double mean_transition_kl = 0.0;
  int agent_steps = 0;
  bool aborted = false;
};

EpisodeSummary summarize(const EpisodeBuffer& buf);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeSummary> episodes;
  double seconds = 0.0;  // wall time; not written to the per-seed CSV
};

/// Cross-seed statistics of one quantity at one episode. [lower, upper] is
/// mean ± std clipped to the observed [min, max].
struct Band {
  double mean = 0.0;
  double std = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Band make_band(std::span<const double> values);

struct AggregateRow {
  int episode = 0;
  int seeds = 0;
  double success_rate = 0.0;
  Band length;
  Band vfe;
  Band reward;
};

struct RunSummary {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
};

/// Per-episode statistics across seeds (over the episodes every seed completed).
std::vector<AggregateRow> aggregate(std::span<const SeedResult> seeds);

using ProgressFn = std::function<void(std::uint64_t seed, const EpisodeSummary&)>;

/// Trains one agent for cfg.episodes episodes.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {});

/// Runs cfg.seeds independent agents (up to cfg.jobs at a time). When cfg.out_dir is
/// set, writes seed_<n>.csv, aggregate.csv, config_snapshot.json and per-seed
/// checkpoints, plus step/trajectory/planner detail files when requested.
RunSummary run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// CSV schemas are fixed; see README.
std::string seed_csv(const SeedResult& r);
std::string aggregate_csv(std::span<const AggregateRow> rows);
SeedResult parse_seed_csv(const std::string& text, std::uint64_t seed = 0);
/// Reads every seed_<n>.csv in `dir`, in ascending n.
std::vector<SeedResult> read_seed_dir(const std::filesystem::path& dir);

struct PortraitFiles {
  std::size_t grid_records = 0;
  std::size_t trajectory_records = 0;
  std::size_t reconstruction_records = 0;
  std::size_t prediction_records = 0;
};

/// Extrinsic value at each point of a grid × grid lattice over the observation space,
/// as (position, velocity, value) in environment units.
struct GridRecord {
  double position;
  double velocity;
  double extrinsic_value;
};
std::vector<GridRecord> extrinsic_grid(const Agent& agent, int grid);

/// Writes portrait_extrinsic.csv, portrait_observations.csv, portrait_reconstructions.csv
/// and portrait_predictions.csv for one recorded episode of `agent`.
PortraitFiles export_phase_portrait(Agent& agent, int grid, const std::filesystem::path& out_dir,
                                    std::uint64_t env_seed);

/// Creates `dir` and checks that a file can be written there; throws InputError otherwise.
void ensure_writable_dir(const std::filesystem::path& dir);

std::string format_double(double v);

}  // namespace aif::harness
