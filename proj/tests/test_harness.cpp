#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aif/error.hpp"
#include "aif/harness/experiment.hpp"

using namespace aif;
using namespace aif::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

ExperimentConfig tiny(int episodes = 2, int seeds = 2) {
  ExperimentConfig c;
  c.episodes = episodes;
  c.seeds = seeds;
  c.policy_samples = 64;
  c.candidates = 8;
  return c;
}

SeedResult lengths(std::uint64_t seed, std::vector<int> steps) {
  SeedResult r;
  r.seed = seed;
  for (std::size_t e = 0; e < steps.size(); ++e) {
    EpisodeSummary s;
    s.episode = static_cast<int>(e);
    s.sim_steps = steps[e];
    s.goal_reached = steps[e] < 200;
    s.reward_total = -0.1 * steps[e];
    r.episodes.push_back(s);
  }
  return r;
}

}  // namespace

TEST_CASE("aggregate examples") {
  const std::vector<SeedResult> one{lengths(0, {120, 90})};
  const auto rows1 = aggregate(one);
  REQUIRE(rows1.size() == 2);
  CHECK(rows1[0].length.mean == 120.0);
  CHECK(rows1[0].length.std == 0.0);
  CHECK(rows1[0].length.lower == 120.0);
  CHECK(rows1[0].length.upper == 120.0);

  const std::vector<SeedResult> two{lengths(0, {100}), lengths(1, {200})};
  const auto rows2 = aggregate(two);
  CHECK(rows2[0].length.mean == 150.0);
  CHECK(rows2[0].success_rate == 0.5);
  CHECK(rows2[0].length.lower >= rows2[0].length.min);
  CHECK(rows2[0].length.upper <= rows2[0].length.max);
}

TEST_CASE("band is clipped to the observed range") {
  const std::vector<double> v{0.0, 0.0, 0.0, 10.0};
  const Band b = make_band(v);
  CHECK(b.mean == 2.5);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == doctest::Approx(2.5 + std::sqrt(18.75)));
  const std::vector<double> w{0.0, 10.0, 10.0, 10.0};
  CHECK(make_band(w).upper == 10.0);
}

TEST_CASE("config json round trip and validation") {
  ExperimentConfig c;
  c.agent = AgentType::GivenPrior;
  c.horizon = 15;
  c.noise_std = 0.1;
  c.ablation = Ablation::ExtrinsicHotStart;
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.effective_decoder_std() == 0.1);
  CHECK(ExperimentConfig{}.effective_decoder_std() == 0.05);
  CHECK(back.planner().samples == 1500);

  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"horizn", 3}}), ArgumentError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"agent", "expert"}}), ArgumentError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"horizon", "six"}}), ArgumentError);
  ExperimentConfig bad;
  bad.seeds = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  CHECK(parse_agent_type("learned") == AgentType::LearnedPrior);
}

TEST_CASE("ablation schedule") {
  ExperimentConfig c;
  c.ablation = Ablation::ExtrinsicHotStart;
  c.hot_start_episodes = 2;
  CHECK(c.terms_for_episode(0).intrinsic);
  CHECK(c.terms_for_episode(1).intrinsic);
  CHECK_FALSE(c.terms_for_episode(2).intrinsic);
  CHECK(c.terms_for_episode(2).extrinsic);
  c.ablation = Ablation::IntrinsicOnly;
  CHECK_FALSE(c.terms_for_episode(0).extrinsic);
  c.ablation = Ablation::ExtrinsicOnly;
  CHECK_FALSE(c.terms_for_episode(0).intrinsic);
}

TEST_CASE("episode records are consistent") {
  for (AgentType t : {AgentType::LearnedPrior, AgentType::GivenPrior, AgentType::Random}) {
    ExperimentConfig c = tiny(3, 1);
    c.agent = t;
    Agent agent(c, 5);
    env::MountainCar env(c.environment(), 6);
    for (int e = 0; e < 3; ++e) {
      const EpisodeBuffer b = agent.run_episode(env, e, RecordOptions{true, true});
      CHECK_FALSE(b.aborted);
      CHECK(b.sim_steps <= 200);
      CHECK(b.goal_reached == (b.final_position >= 0.45));
      const std::size_t n = b.size();
      CHECK(b.actions.size() == n);
      CHECK(b.rewards.size() == n);
      CHECK(b.posteriors.size() == n);
      CHECK(b.predicted.size() == n);
      CHECK(b.metrics.size() == n);
      CHECK_FALSE(b.metrics[0].has_prediction);
      for (std::size_t i = 1; i < n; ++i) CHECK(b.metrics[i].has_prediction);
      CHECK(b.trajectory.size() == static_cast<std::size_t>(b.sim_steps) + 1);
      CHECK(std::isfinite(b.cumulative_vfe()));
      if (t == AgentType::Random) CHECK(b.plans.empty());
      else CHECK_FALSE(b.plans.empty());
    }
  }
}

TEST_CASE("run_experiment writes deterministic artifacts") {
  ExperimentConfig c = tiny(2, 2);
  c.verbose = true;
  c.planner_trace = true;
  c.out_dir = fresh_dir("aif_run_a").string();
  const RunSummary a = run_experiment(c);

  c.out_dir = fresh_dir("aif_run_b").string();
  c.jobs = 2;
  c.planner_threads = 3;
  const RunSummary b = run_experiment(c);

  for (const char* f : {"seed_0.csv", "seed_1.csv", "aggregate.csv", "seed_0_steps.csv", "seed_1_trajectory.csv",
                        "seed_0_planner.csv"}) {
    CAPTURE(f);
    const std::string x = slurp(fs::path("/tmp") / "aif_run_a" / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(fs::temp_directory_path() / "aif_run_b" / f));
  }
  CHECK(fs::exists(fs::temp_directory_path() / "aif_run_a" / "config_snapshot.json"));
  CHECK(fs::exists(fs::temp_directory_path() / "aif_run_a" / "seed_1.ckpt"));
  CHECK(slurp(fs::temp_directory_path() / "aif_run_a" / "seed_0.ckpt") ==
        slurp(fs::temp_directory_path() / "aif_run_b" / "seed_0.ckpt"));

  const auto reread = read_seed_dir(fs::temp_directory_path() / "aif_run_a");
  REQUIRE(reread.size() == 2);
  CHECK(aggregate_csv(aggregate(reread)) == slurp(fs::temp_directory_path() / "aif_run_a" / "aggregate.csv"));
  CHECK(seed_csv(reread[1]) == seed_csv(a.seeds[1]));
  CHECK(a.seeds[0].episodes.size() == 2);
}

TEST_CASE("different seeds give different runs") {
  const ExperimentConfig c = tiny(1, 1);
  CHECK(seed_csv(run_seed(c, 1)) != seed_csv(run_seed(c, 2)));
  CHECK(seed_csv(run_seed(c, 3)) == seed_csv(run_seed(c, 3)));
}

TEST_CASE("unwritable output directory fails at startup") {
  ExperimentConfig c = tiny(1, 1);
  const fs::path file = fs::temp_directory_path() / "aif_not_a_dir";
  std::ofstream(file) << "x";
  c.out_dir = (file / "sub").string();
  CHECK_THROWS_AS(run_experiment(c), InputError);
  fs::remove(file);
}

TEST_CASE("seed CSV parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_seed_csv("nonsense\n"), InputError);
  const std::string good = seed_csv(lengths(0, {50}));
  CHECK_NOTHROW(parse_seed_csv(good));
  CHECK_THROWS_AS(parse_seed_csv(good + "1,2,3\n"), InputError);
  CHECK_THROWS_AS(read_seed_dir(fresh_dir("aif_empty_dir")), InputError);
}

TEST_CASE("phase portrait export") {
  ExperimentConfig c = tiny(1, 1);
  c.agent = AgentType::GivenPrior;
  Agent agent(c, 7);
  const auto grid = extrinsic_grid(agent, 100);
  CHECK(grid.size() == 10000);
  const auto best = std::min_element(grid.begin(), grid.end(), [](const GridRecord& a, const GridRecord& b) {
    return a.extrinsic_value < b.extrinsic_value;
  });
  // the lattice point nearest the preference mean (goal position, zero velocity)
  double nearest = 1e9;
  for (const auto& g : grid) nearest = std::min(nearest, std::hypot((g.position - 0.45) / 1.2, g.velocity / 0.07));
  CHECK(std::hypot((best->position - 0.45) / 1.2, best->velocity / 0.07) == doctest::Approx(nearest));

  const fs::path dir = fresh_dir("aif_portrait");
  const PortraitFiles files = export_phase_portrait(agent, 20, dir, 3);
  CHECK(files.grid_records == 400);
  CHECK(files.trajectory_records > 0);
  CHECK(files.reconstruction_records > 0);
  CHECK(files.prediction_records > 0);
  for (const char* f : {"portrait_extrinsic.csv", "portrait_observations.csv", "portrait_reconstructions.csv",
                        "portrait_predictions.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK_THROWS_AS(extrinsic_grid(agent, 0), ArgumentError);
}

TEST_CASE("checkpoint restores an agent") {
  ExperimentConfig c = tiny(1, 1);
  const SeedResult r = run_seed(c, 4);
  Agent trained(c, 4);
  env::MountainCar env(c.environment(), 1);
  trained.run_episode(env, 0);
  const nn::Checkpoint ck = nn::Checkpoint::deserialize(trained.checkpoint().serialize());
  Agent fresh(c, 99);
  fresh.restore(ck);
  CHECK(fresh.checkpoint().serialize() == trained.checkpoint().serialize());
  (void)r;
}
