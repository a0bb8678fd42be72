#include "aif/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "aif/error.hpp"
#include "aif/rng.hpp"

namespace aif::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

EpisodeSummary summarize(const EpisodeBuffer& buf) {
  EpisodeSummary s;
  s.episode = buf.episode;
  s.sim_steps = buf.sim_steps;
  s.goal_reached = buf.goal_reached;
  s.reward_total = buf.reward_total();
  s.cumulative_vfe = buf.cumulative_vfe();
  s.agent_steps = static_cast<int>(buf.size());
  s.aborted = buf.aborted;
  if (!buf.metrics.empty()) {
    double vae = 0.0, tkl = 0.0;
    int with_prediction = 0;
    for (const auto& m : buf.metrics) {
      vae += m.vae_loss;
      if (m.has_prediction) {
        tkl += m.transition_kl;
        ++with_prediction;
      }
    }
    s.mean_vae_loss = vae / static_cast<double>(buf.metrics.size());
    s.mean_transition_kl = with_prediction ? tkl / with_prediction : 0.0;
  }
  return s;
}

Band make_band(std::span<const double> values) {
  Band b;
  if (values.empty()) return b;
  const double n = static_cast<double>(values.size());
  for (double v : values) b.mean += v;
  b.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - b.mean) * (v - b.mean);
  b.std = std::sqrt(var / n);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  b.min = *lo;
  b.max = *hi;
  b.lower = std::max(b.mean - b.std, b.min);
  b.upper = std::min(b.mean + b.std, b.max);
  return b;
}

std::vector<AggregateRow> aggregate(std::span<const SeedResult> seeds) {
  std::vector<AggregateRow> rows;
  if (seeds.empty()) return rows;
  std::size_t episodes = seeds.front().episodes.size();
  for (const auto& s : seeds) episodes = std::min(episodes, s.episodes.size());
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> length, vfe, reward;
    int successes = 0;
    for (const auto& s : seeds) {
      const EpisodeSummary& ep = s.episodes[e];
      length.push_back(ep.sim_steps);
      vfe.push_back(ep.cumulative_vfe);
      reward.push_back(ep.reward_total);
      successes += ep.goal_reached ? 1 : 0;
    }
    AggregateRow row;
    row.episode = seeds.front().episodes[e].episode;
    row.seeds = static_cast<int>(seeds.size());
    row.success_rate = static_cast<double>(successes) / static_cast<double>(seeds.size());
    row.length = make_band(length);
    row.vfe = make_band(vfe);
    row.reward = make_band(reward);
    rows.push_back(row);
  }
  return rows;
}

namespace {

constexpr const char* kSeedHeader =
    "episode,sim_steps,goal_reached,reward_total,cumulative_vfe_capsule,mean_vae_loss,mean_transition_kl,"
    "agent_steps,aborted";

struct SeedDetail {
  std::string steps;
  std::string trajectory;
  std::string planner;
};

void append_band(std::string& out, const Band& b) {
  for (double v : {b.mean, b.std, b.lower, b.upper, b.min, b.max}) out += "," + format_double(v);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("failed writing " + path.string());
}

SeedResult run_seed_impl(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress,
                         SeedDetail* detail, nn::Checkpoint* final_checkpoint) {
  const auto start = std::chrono::steady_clock::now();
  SeedResult result;
  result.seed = seed;
  Agent agent(cfg, seed);
  env::MountainCar env(cfg.environment(), mix_seed({seed, 4}));
  const RecordOptions record{detail && cfg.verbose, detail && cfg.planner_trace};
  if (detail) {
    if (cfg.verbose) {
      detail->steps = "episode,step,vae_loss,transition_kl,vfe_capsule,has_prediction\n";
      detail->trajectory = "episode,step,position,velocity,action,reward\n";
    }
    if (cfg.planner_trace) {
      detail->planner = "episode,agent_step,iteration,sample_mean,elite_mean,elite_best,elite_worst\n";
    }
  }
  for (int e = 0; e < cfg.episodes; ++e) {
    const EpisodeBuffer buf = agent.run_episode(env, e, record);
    const EpisodeSummary s = summarize(buf);
    result.episodes.push_back(s);
    if (detail && cfg.verbose) {
      for (std::size_t t = 0; t < buf.metrics.size(); ++t) {
        const auto& m = buf.metrics[t];
        detail->steps += std::to_string(e) + "," + std::to_string(t) + "," + format_double(m.vae_loss) + "," +
                         format_double(m.transition_kl) + "," + format_double(m.vfe_capsule) + "," +
                         (m.has_prediction ? "1" : "0") + "\n";
      }
      for (const auto& r : buf.trajectory) {
        detail->trajectory += std::to_string(e) + "," + std::to_string(r.step) + "," + format_double(r.position) +
                              "," + format_double(r.velocity) + "," + format_double(r.action) + "," +
                              format_double(r.reward) + "\n";
      }
    }
    if (detail && cfg.planner_trace) {
      for (const auto& p : buf.plans) {
        for (std::size_t i = 0; i < p.iterations.size(); ++i) {
          const auto& it = p.iterations[i];
          detail->planner += std::to_string(e) + "," + std::to_string(p.agent_step) + "," + std::to_string(i) +
                             "," + format_double(it.sample_mean) + "," + format_double(it.elite_mean) + "," +
                             format_double(it.elite_best) + "," + format_double(it.elite_worst) + "\n";
        }
      }
    }
    if (progress) progress(seed, s);
  }
  if (final_checkpoint) *final_checkpoint = agent.checkpoint();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress) {
  cfg.validate();
  return run_seed_impl(cfg, seed, progress, nullptr, nullptr);
}

std::string seed_csv(const SeedResult& r) {
  std::string out = std::string(kSeedHeader) + "\n";
  for (const auto& e : r.episodes) {
    out += std::to_string(e.episode) + "," + std::to_string(e.sim_steps) + "," + (e.goal_reached ? "1" : "0") + "," +
           format_double(e.reward_total) + "," + format_double(e.cumulative_vfe) + "," +
           format_double(e.mean_vae_loss) + "," + format_double(e.mean_transition_kl) + "," +
           std::to_string(e.agent_steps) + "," + (e.aborted ? "1" : "0") + "\n";
  }
  return out;
}

std::string aggregate_csv(std::span<const AggregateRow> rows) {
  std::string out = "episode,seeds,success_rate";
  for (const char* q : {"length", "vfe", "reward"}) {
    for (const char* f : {"mean", "std", "lower", "upper", "min", "max"}) out += std::string(",") + q + "_" + f;
  }
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.episode) + "," + std::to_string(r.seeds) + "," + format_double(r.success_rate);
    append_band(out, r.length);
    append_band(out, r.vfe);
    append_band(out, r.reward);
    out += "\n";
  }
  return out;
}

SeedResult parse_seed_csv(const std::string& text, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSeedHeader) throw InputError("seed CSV has an unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw InputError("seed CSV row has " + std::to_string(f.size()) + " fields: " + line);
    try {
      EpisodeSummary e;
      e.episode = std::stoi(f[0]);
      e.sim_steps = std::stoi(f[1]);
      e.goal_reached = f[2] == "1";
      e.reward_total = std::stod(f[3]);
      e.cumulative_vfe = std::stod(f[4]);
      e.mean_vae_loss = std::stod(f[5]);
      e.mean_transition_kl = std::stod(f[6]);
      e.agent_steps = std::stoi(f[7]);
      e.aborted = f[8] == "1";
      r.episodes.push_back(e);
    } catch (const std::logic_error&) {
      throw InputError("malformed seed CSV row: " + line);
    }
  }
  return r;
}

std::vector<SeedResult> read_seed_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  static const std::regex name(R"(seed_(\d+)\.csv)");
  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string fname = entry.path().filename().string();
    if (std::regex_match(fname, m, name)) files.emplace_back(std::stoull(m[1].str()), entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SeedResult> out;
  for (const auto& [seed, path] : files) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    out.push_back(parse_seed_csv(ss.str(), seed));
  }
  if (out.empty()) throw InputError("no seed_<n>.csv files in " + dir.string());
  return out;
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw InputError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

RunSummary run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const bool write = !cfg.out_dir.empty();
  const fs::path out(cfg.out_dir);
  if (write) {
    ensure_writable_dir(out);
    write_text(out / "config_snapshot.json", cfg.to_json().dump(2) + "\n");
  }

  RunSummary summary;
  summary.config = cfg;
  summary.seeds.resize(static_cast<std::size_t>(cfg.seeds));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (int i = next++; i < cfg.seeds; i = next++) {
      try {
        const std::uint64_t seed = cfg.first_seed + static_cast<std::uint64_t>(i);
        SeedDetail detail;
        nn::Checkpoint ck;
        summary.seeds[static_cast<std::size_t>(i)] =
            run_seed_impl(cfg, seed, progress, write ? &detail : nullptr, write ? &ck : nullptr);
        if (write) {
          const std::string stem = "seed_" + std::to_string(seed);
          write_text(out / (stem + ".csv"), seed_csv(summary.seeds[static_cast<std::size_t>(i)]));
          if (cfg.save_checkpoints) ck.save(out / (stem + ".ckpt"));
          if (cfg.verbose) {
            write_text(out / (stem + "_steps.csv"), detail.steps);
            write_text(out / (stem + "_trajectory.csv"), detail.trajectory);
          }
          if (cfg.planner_trace) write_text(out / (stem + "_planner.csv"), detail.planner);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int jobs = std::min(cfg.jobs, cfg.seeds);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  summary.aggregate = aggregate(summary.seeds);
  if (write) {
    write_text(out / "aggregate.csv", aggregate_csv(summary.aggregate));
    nlohmann::json timing = nlohmann::json::object();
    for (const auto& s : summary.seeds) timing[std::to_string(s.seed)] = s.seconds;
    write_text(out / "timing.json", timing.dump(2) + "\n");
  }
  return summary;
}

std::vector<GridRecord> extrinsic_grid(const Agent& agent, int grid) {
  if (grid < 1) throw ArgumentError("grid resolution must be >= 1");
  const env::ObservationConfig obs;
  const double sd = agent.config().effective_decoder_std();
  auto axis = [grid](double lo, double hi, int i) {
    return grid == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
  };
  std::vector<GridRecord> out;
  out.reserve(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    const double p = axis(env::kMinPosition, env::kMaxPosition, i);
    for (int j = 0; j < grid; ++j) {
      const double v = axis(-env::kMaxSpeed, env::kMaxSpeed, j);
      const DiagGaussian decoded = DiagGaussian::isotropic({p / obs.position_scale, v / obs.velocity_scale}, sd);
      out.push_back(GridRecord{p, v, extrinsic_value(decoded, agent.prior())});
    }
  }
  return out;
}

PortraitFiles export_phase_portrait(Agent& agent, int grid, const fs::path& out_dir, std::uint64_t env_seed) {
  ensure_writable_dir(out_dir);
  const env::ObservationConfig scales;
  PortraitFiles files;

  std::string text = "position,velocity,extrinsic_value\n";
  for (const GridRecord& r : extrinsic_grid(agent, grid)) {
    text += format_double(r.position) + "," + format_double(r.velocity) + "," + format_double(r.extrinsic_value) + "\n";
    ++files.grid_records;
  }
  write_text(out_dir / "portrait_extrinsic.csv", text);

  env::MountainCar env(agent.config().environment(), env_seed);
  const EpisodeBuffer buf = agent.run_episode(env, agent.config().episodes, RecordOptions{true, true});

  text = "step,position,velocity,action,reward\n";
  for (const auto& r : buf.trajectory) {
    text += std::to_string(r.step) + "," + format_double(r.position) + "," + format_double(r.velocity) + "," +
            format_double(r.action) + "," + format_double(r.reward) + "\n";
    ++files.trajectory_records;
  }
  write_text(out_dir / "portrait_observations.csv", text);

  text = "agent_step,position,velocity,observed_position,observed_velocity\n";
  for (std::size_t t = 0; t < buf.size(); ++t) {
    const DiagGaussian recon = agent.model().decode(buf.posteriors[t].mean);
    text += std::to_string(t) + "," + format_double(recon.mean[0] * scales.position_scale) + "," +
            format_double(recon.mean[1] * scales.velocity_scale) + "," +
            format_double(buf.observations[t][0] * scales.position_scale) + "," +
            format_double(buf.observations[t][1] * scales.velocity_scale) + "\n";
    ++files.reconstruction_records;
  }
  write_text(out_dir / "portrait_reconstructions.csv", text);

  text = "plan,agent_step,tau,position,velocity\n";
  for (std::size_t k = 0; k < buf.plans.size(); ++k) {
    const PlanRecord& p = buf.plans[k];
    for (std::size_t tau = 0; tau < p.predicted_observations.size(); ++tau) {
      const auto& y = p.predicted_observations[tau];
      text += std::to_string(k) + "," + std::to_string(p.agent_step) + "," + std::to_string(tau + 1) + "," +
              format_double(y[0] * scales.position_scale) + "," + format_double(y[1] * scales.velocity_scale) + "\n";
      ++files.prediction_records;
    }
  }
  write_text(out_dir / "portrait_predictions.csv", text);
  return files;
}

}  // namespace aif::harness
