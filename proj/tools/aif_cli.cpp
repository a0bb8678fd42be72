// Command line entry point: train agents, export phase portraits, re-aggregate runs.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <json.hpp>

#include "aif/error.hpp"
#include "aif/harness/experiment.hpp"

using namespace aif;
using namespace aif::harness;

namespace {

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

// key=value pairs; values are read as JSON when they parse, as strings otherwise.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const std::vector<std::string>& sets) {
  nlohmann::json j = nlohmann::json::object();
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--set expects key=value, got '" + kv + "'");
    const std::string value = kv.substr(eq + 1);
    nlohmann::json v = nlohmann::json::parse(value, nullptr, false);
    j[kv.substr(0, eq)] = v.is_discarded() ? nlohmann::json(value) : v;
  }
  return ExperimentConfig::from_json(j, cfg);
}

int cmd_run(const CLI::App& sub, const std::string& config_path, const std::vector<std::string>& sets,
            ExperimentConfig cli, bool quiet) {
  ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  cfg = apply_overrides(cfg, sets);
  // Command-line flags override the config file only when given explicitly.
  auto given = [&sub](const char* name) { return sub.count(name) > 0; };
  if (given("--agent")) cfg.agent = cli.agent;
  if (given("--horizon")) cfg.horizon = cli.horizon;
  if (given("--noise")) cfg.noise_std = cli.noise_std;
  if (given("--ablation")) cfg.ablation = cli.ablation;
  if (given("--episodes")) cfg.episodes = cli.episodes;
  if (given("--seeds")) cfg.seeds = cli.seeds;
  if (given("--first-seed")) cfg.first_seed = cli.first_seed;
  if (given("--jobs")) cfg.jobs = cli.jobs;
  if (given("--planner-threads")) cfg.planner_threads = cli.planner_threads;
  if (given("--out")) cfg.out_dir = cli.out_dir;
  if (given("--verbose")) cfg.verbose = true;
  if (given("--planner-trace")) cfg.planner_trace = true;
  if (given("--no-checkpoints")) cfg.save_checkpoints = false;
  if (cfg.out_dir.empty()) throw ArgumentError("--out is required");
  cfg.validate();

  std::mutex io;
  ProgressFn progress;
  if (!quiet) {
    progress = [&io](std::uint64_t seed, const EpisodeSummary& s) {
      std::lock_guard lock(io);
      std::fprintf(stderr, "seed %llu episode %d: steps=%d goal=%d reward=%.3f vfe=%.3f%s\n",
                   static_cast<unsigned long long>(seed), s.episode, s.sim_steps, s.goal_reached ? 1 : 0,
                   s.reward_total, s.cumulative_vfe, s.aborted ? " ABORTED" : "");
    };
  }
  const RunSummary summary = run_experiment(cfg, progress);
  if (!summary.aggregate.empty()) {
    const std::size_t tail = std::min<std::size_t>(20, summary.aggregate.size());
    double rate = 0.0;
    for (std::size_t i = summary.aggregate.size() - tail; i < summary.aggregate.size(); ++i) {
      rate += summary.aggregate[i].success_rate;
    }
    std::printf("success rate over last %zu episodes: %.3f\n", tail, rate / static_cast<double>(tail));
  }
  std::printf("wrote %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_portrait(const std::string& checkpoint, int grid, const std::string& out, std::uint64_t env_seed) {
  const nn::Checkpoint ck = nn::Checkpoint::load(checkpoint);
  const auto it = ck.metadata.find("config");
  if (it == ck.metadata.end()) throw InputError("checkpoint has no stored config: " + checkpoint);
  ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(it->second));
  Agent agent(cfg, 0);
  agent.restore(ck);
  const PortraitFiles files = export_phase_portrait(agent, grid, out, env_seed);
  std::printf("grid=%zu trajectory=%zu reconstructions=%zu predictions=%zu -> %s\n", files.grid_records,
              files.trajectory_records, files.reconstruction_records, files.prediction_records, out.c_str());
  return 0;
}

int cmd_aggregate(const std::string& in, const std::string& out) {
  const std::vector<SeedResult> seeds = read_seed_dir(in);
  const std::vector<AggregateRow> rows = aggregate(seeds);
  const std::string text = aggregate_csv(rows);
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw InputError("cannot write " + out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active inference agent with learned priors on continuous mountain car"};
  app.require_subcommand(1);

  ExperimentConfig cli;
  std::string config_path;
  std::string agent_name = "learned";
  std::string ablation_name = "full";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "train agents over several seeds");
  run->add_option("--agent", agent_name, "given_prior | learned_prior | random");
  run->add_option("--horizon", cli.horizon, "planning horizon H")->check(CLI::PositiveNumber);
  run->add_option("--noise", cli.noise_std, "observation noise std (normalized units)")->check(CLI::NonNegativeNumber);
  run->add_option("--ablation", ablation_name, "full | intrinsic_only | extrinsic_only | extrinsic_hot_start");
  run->add_option("--episodes", cli.episodes)->check(CLI::PositiveNumber);
  run->add_option("--seeds", cli.seeds)->check(CLI::PositiveNumber);
  run->add_option("--first-seed", cli.first_seed);
  run->add_option("--jobs", cli.jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);
  run->add_option("--planner-threads", cli.planner_threads, "OpenMP threads per planner")->check(CLI::PositiveNumber);
  run->add_option("--out", cli.out_dir, "output directory");
  run->add_option("--config", config_path, "JSON config; flags override it");
  std::vector<std::string> sets;
  run->add_option("--set", sets, "override any config field, e.g. --set discount=0.99");
  run->add_flag("--verbose", cli.verbose, "also write per-step and trajectory CSVs");
  run->add_flag("--planner-trace", cli.planner_trace, "also write per-iteration CEM statistics");
  run->add_flag("--no-checkpoints");
  run->add_flag("--quiet", quiet, "no per-episode progress on stderr");

  std::string checkpoint, portrait_out = "portrait";
  int grid = 50;
  std::uint64_t env_seed = 0;
  auto* portrait = app.add_subcommand("portrait", "export extrinsic-value grid and one recorded episode");
  portrait->add_option("--checkpoint", checkpoint)->required();
  portrait->add_option("--grid", grid, "grid resolution per axis")->check(CLI::PositiveNumber);
  portrait->add_option("--out", portrait_out, "output directory");
  portrait->add_option("--seed", env_seed, "environment seed for the recorded episode");

  std::string agg_in, agg_out;
  auto* agg = app.add_subcommand("aggregate", "recompute aggregate.csv from seed_<n>.csv files");
  agg->add_option("--in", agg_in)->required();
  agg->add_option("--out", agg_out, "output file ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cli.agent = parse_agent_type(agent_name);
      cli.ablation = parse_ablation(ablation_name);
      return cmd_run(*run, config_path, sets, cli, quiet);
    }
    if (*portrait) return cmd_portrait(checkpoint, grid, portrait_out, env_seed);
    if (*agg) return cmd_aggregate(agg_in, agg_out.empty() ? (std::filesystem::path(agg_in) / "aggregate.csv").string()
                                                           : agg_out);
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
