#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsad/harness/baselines.hpp"
#include "bsad/harness/bootstrap.hpp"
#include "bsad/harness/experiment.hpp"
#include "bsad/spec_io.hpp"
#include "support.hpp"

using namespace bsad;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bsad_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json small_experiment(const std::filesystem::path& out) {
  return {{"environment", {{"builder", "counterexample"}, {"D", 10.0}, {"epsilon", 0.1}, {"copies", 2}, {"weights", "equal"}}},
          {"algorithms",
           json::array({{{"kind", "bsad"}, {"name", "bsad"}, {"batch_size", 8}},
                        {{"kind", "peps"}, {"name", "peps"}, {"batch_size", 8}, {"visit_budget", 64}},
                        {{"kind", "q_learning"}, {"name", "ql"}}})},
          {"seeds", {0, 1, 2}},
          {"episode_budget", 2000},
          {"cadence", 500},
          {"output_dir", out.string()},
          {"parallelism", 3},
          {"bootstrap_resamples", 200}};
}

}  // namespace

TEST_CASE("counter-example builder") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 2, {0.3, 0.7});
  CHECK(in.mdp.num_states() == 5);
  CHECK(in.mdp.horizon() == 2);
  CHECK(in.mdp.actions_at(0, 0) == 2);
  CHECK(in.mdp.actions_at(0, 1) == 2);
  CHECK(in.mdp.actions_at(0, jackpot_state(2)) == 1);
  CHECK(in.mdp.actions_at(1, 0) == 1);
  CHECK(in.mdp.initial_dist()(1) == 0.7);
  CHECK(in.mdp.transition(0, 1, kRiskyArm)(jackpot_state(2)) == doctest::Approx(0.1));
  CHECK(in.reward.step_reward(1, jackpot_state(2), 0) == 10.0);
  CHECK(in.reward.step_reward(1, consolation_state(2), 0) == doctest::Approx(0.9));
  CHECK(in.reward.step_reward(1, safe_state(2), 0) == 1.0);
  CHECK(in.reward.step_reward(0, 0, kRiskyArm) == 0.0);
  CHECK(in.reward.bound() == 10.0);
  CHECK_THROWS_AS(build_counterexample_mdp(2.0, 0.1, 1, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_counterexample_mdp(10.0, 0.1, 2, {1.0}), std::invalid_argument);

  const Instance d = default_experiment_instance();
  CHECK(d.mdp.num_states() == 5);
  CHECK(d.mdp.initial_dist()(0) == 0.5);
  const DeterministicPolicy opt = optimal_policy_bruteforce(d.mdp, d.reward);
  CHECK(opt(0, 0) == kRiskyArm);
  CHECK(initial_value(d.mdp, d.reward, opt) == doctest::Approx(1.81));
  CHECK(min_probability_gap(d, opt, 1) == doctest::Approx(-0.4));
  CHECK(smallest_condorcet_batch(d, opt, {1, 2, 4, 8, 16}) == 8);
}

TEST_CASE("random builder") {
  const Instance in = build_random_mdp(3, 2, 2, 1000, 0.2);
  // Golden snapshot of the generator output; the generator avoids implementation-defined
  // distributions, so this holds across toolchains.
  CHECK(instance_hash(in) == "77d2d9a52d112041195affd96a3adbb30cd5c2ce");
  CHECK(instance_hash(build_random_mdp(3, 2, 2, 1000, 0.2)) == instance_hash(in));
  CHECK(instance_hash(build_random_mdp(3, 2, 2, 1001, 0.2)) != instance_hash(in));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance r = build_random_mdp(3, 3, 3, seed, 0.2);
    const DeterministicPolicy opt = optimal_policy_bruteforce(r.mdp, r.reward);
    CHECK(min_value_gap(r.mdp, r.reward, opt) >= 0.2 - 1e-12);
    CHECK(r.mdp.initial_dist().minCoeff() > 0.0);
    for (int h = 0; h < 3; ++h) {
      for (int s = 0; s < 3; ++s) {
        for (int a = 0; a < 3; ++a) {
          const double v = r.reward.step_reward(h, s, a) * 10.0;
          CHECK(std::abs(v - std::round(v)) <= 1e-9);
        }
      }
    }
  }
  CHECK_THROWS_AS(build_random_mdp(2, 2, 2, 1, 2.0), GenerationError);
}

TEST_CASE("discounted chain") {
  const DiscountedMdp d = build_discounted_chain();
  CHECK(d.num_states() == 3);
  CHECK(d.gamma() == 0.9);
  const Eigen::VectorXd v = discounted_optimal_value(d);
  for (int s = 0; s < 3; ++s) {
    CHECK(d.reward()(s, 1) + 0.9 * v((s + 1) % 3) > d.reward()(s, 0) + 0.9 * v(s));
  }
}

TEST_CASE("optimistic Q-learning") {
  const Instance in = default_experiment_instance();
  const QLearningResult r = q_learning_ucb(in.mdp, in.reward, 5000, 1000, {0.1, 1.0, 3});
  REQUIRE(r.trace.size() == 6);
  CHECK(r.trace.front().episode == 0);
  CHECK(r.trace.back().episode == 5000);
  for (const TracePoint& p : r.trace) {
    CHECK(p.queries == 0);
    CHECK(p.policy_value <= 1.81 + 1e-12);
    CHECK(p.policy_value >= 1.0 - 1e-12);
  }
  CHECK(r.trace.back().policy_value == doctest::Approx(initial_value(in.mdp, in.reward, r.policy)));
  const QLearningResult again = q_learning_ucb(in.mdp, in.reward, 5000, 1000, {0.1, 1.0, 3});
  CHECK(again.policy == r.policy);

  // With a small bonus scale and a 0.3 gap the greedy policy settles on the optimum.
  const Instance easy = build_random_mdp(2, 2, 2, 3, 0.3);
  const QLearningResult e = q_learning_ucb(easy.mdp, easy.reward, 20'000, 20'000, {0.1, 0.05, 1});
  CHECK(e.policy == optimal_policy_bruteforce(easy.mdp, easy.reward));

  const TrajectoryReward general = testing::tabulate(easy.mdp, easy.reward);
  CHECK_THROWS_AS(q_learning_ucb(easy.mdp, general, 10, 5, {}), UnsupportedInstance);
}

TEST_CASE("bootstrap interval") {
  Rng rng(1);
  const MeanInterval single = bootstrap_mean_ci({2.5}, 100, 0.95, rng);
  CHECK(single.mean == 2.5);
  CHECK(single.low == 2.5);
  CHECK(single.high == 2.5);

  std::vector<double> sample;
  Rng draw(2);
  for (int i = 0; i < 200; ++i) sample.push_back(uniform01(draw));
  const MeanInterval ci = bootstrap_mean_ci(sample, 4000, 0.95, rng);
  double mean = 0.0;
  for (double x : sample) mean += x;
  mean /= 200.0;
  CHECK(ci.mean == doctest::Approx(mean));
  CHECK(ci.low <= ci.mean);
  CHECK(ci.high >= ci.mean);
  // Normal-theory half width for a uniform sample: 1.96 sqrt(1/12 / 200) ~ 0.04.
  CHECK(ci.high - ci.low == doctest::Approx(2 * 1.96 * std::sqrt(1.0 / 12.0 / 200.0)).epsilon(0.15));
  CHECK_THROWS_AS(bootstrap_mean_ci({}, 10, 0.95, rng), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_mean_ci({1.0}, 10, 1.0, rng), std::invalid_argument);
}

TEST_CASE("spec round trip and validation") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 2, {0.5, 0.5});
  const json j = instance_to_json(in);
  const Instance back = instance_from_json(j);
  CHECK(instance_to_json(back) == j);
  CHECK(instance_hash(back) == instance_hash(in));

  const Instance small = testing::random_cumulative(2, 2, 2, 3);
  const Instance general{small.mdp, testing::tabulate(small.mdp, small.reward)};
  const auto dir = scratch("spec");
  save_instance(dir / "general.json", general);
  const Instance loaded = load_instance(dir / "general.json");
  CHECK(loaded.reward.kind() == TrajectoryReward::Kind::tabular_general);
  CHECK(loaded.reward.table() == general.reward.table());

  auto message = [](const json& spec) {
    try {
      instance_from_json(spec);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  json bad = j;
  bad["transitions"][0][1] = json::array({json::array({0.2, 0.8, 0, 0, 0})});
  CHECK(message(bad) == "MDP spec: transitions[0][1] has 1 entries, expected 2");
  bad = j;
  bad["transitions"][0][3][0][3] = 0.5;
  CHECK(message(bad).find("transitions[0][3][0]") != std::string::npos);
  bad = j;
  bad["initial_dist"] = json::array({0.5, 0.5});
  CHECK(message(bad).find("initial_dist") != std::string::npos);
  bad = j;
  bad["reward"]["kind"] = "mystery";
  CHECK(message(bad).find("mystery") != std::string::npos);
  bad = j;
  bad.erase("H");
  CHECK_FALSE(message(bad).empty());
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_instance(dir / "broken.json"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("experiment config") {
  const json base = small_experiment("out");
  const ExperimentConfig c = ExperimentConfig::from_json(base, "/tmp/base");
  CHECK(c.output_dir == std::filesystem::path("/tmp/base/out"));
  CHECK(c.algorithms.size() == 3);
  CHECK(c.algorithms[1].bsad.stopping == StoppingMode::fixed_budget);
  CHECK(c.algorithms[2].kind == AlgorithmKind::q_learning);
  json dup = base;
  dup["algorithms"][1]["name"] = "bsad";
  CHECK_THROWS_AS(ExperimentConfig::from_json(dup), std::invalid_argument);
  json unknown = base;
  unknown["algorithms"][0]["kind"] = "oracle";
  CHECK_THROWS_AS(ExperimentConfig::from_json(unknown), std::invalid_argument);
  json counted = base;
  counted.erase("seeds");
  counted["num_seeds"] = 4;
  CHECK(ExperimentConfig::from_json(counted).seeds == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(cell_file_name("bsad", 12) == "bsad__seed12.csv");
  CHECK(effective_parallelism(5) >= 1);
  CHECK(make_environment(json{{"builder", "counterexample"}, {"copies", 2}, {"weights", "skewed"}}).mdp.initial_dist()(0) == 0.8);
  CHECK_THROWS_AS(make_environment(json{{"builder", "maze"}}), std::invalid_argument);
}

TEST_CASE("experiment outputs") {
  const auto dir = scratch("experiment");
  const ExperimentConfig config = ExperimentConfig::from_json(small_experiment(dir / "a"));
  const std::vector<CellResult> cells = run_experiment(config);
  REQUIRE(cells.size() == 9);
  for (const CellResult& c : cells) {
    CHECK(c.ok);
    REQUIRE(c.trace.points.size() == 5);
    CHECK(c.trace.points.front().episode == 0);
    CHECK(c.trace.points.back().episode == 2000);
    CHECK(std::filesystem::exists(dir / "a" / cell_file_name(c.algorithm, c.seed)));
  }
  for (const char* name : {"cells.csv", "aggregate.csv", "metadata.json", "timing.json"}) {
    CHECK(std::filesystem::exists(dir / "a" / name));
  }
  const std::string aggregate = slurp(dir / "a" / "aggregate.csv");
  CHECK(aggregate.rfind("algorithm,episode,mean,ci_low,ci_high,n\n", 0) == 0);
  CHECK(aggregate.find("ql,2000,") != std::string::npos);
  const json meta = json::parse(slurp(dir / "a" / "metadata.json"));
  CHECK(meta.at("mdp_hash") == instance_hash(default_experiment_instance()));
  CHECK(meta.contains("completion_rule"));

  // The aggregate is a pure function of the cell files.
  std::filesystem::remove(dir / "a" / "aggregate.csv");
  aggregate_directory(dir / "a", config.bootstrap_resamples, config.confidence, config.bootstrap_seed);
  CHECK(slurp(dir / "a" / "aggregate.csv") == aggregate);

  // Mean and n recomputed from the cell files.
  std::map<std::string, std::map<std::int64_t, std::vector<double>>> values;
  for (const CellResult& c : cells) {
    for (const TracePoint& p : c.trace.points) values[c.algorithm][p.episode].push_back(p.policy_value);
  }
  std::istringstream rows(aggregate);
  std::string line;
  std::getline(rows, line);
  int count = 0;
  while (std::getline(rows, line)) {
    std::stringstream ss(line);
    std::string alg, episode, mean, lo, hi, n;
    std::getline(ss, alg, ',');
    std::getline(ss, episode, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, lo, ',');
    std::getline(ss, hi, ',');
    std::getline(ss, n, ',');
    const auto& sample = values[alg][std::stoll(episode)];
    double m = 0.0;
    for (double x : sample) m += x;
    m /= double(sample.size());
    CHECK(std::stod(mean) == doctest::Approx(m).epsilon(1e-15));
    CHECK(std::stoul(n) == sample.size());
    CHECK(std::stod(lo) <= std::stod(mean));
    CHECK(std::stod(hi) >= std::stod(mean));
    ++count;
  }
  CHECK(count == 15);

  // A second run with another thread count reproduces every CSV byte for byte.
  json second = small_experiment(dir / "b");
  second["parallelism"] = 1;
  run_experiment(ExperimentConfig::from_json(second));
  for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
    if (entry.path().extension() != ".csv") continue;
    CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("failed cells are reported") {
  const auto dir = scratch("failed");
  const Instance small = build_random_mdp(2, 2, 2, 3, 0.2);
  save_instance(dir / "general.json", Instance{small.mdp, testing::tabulate(small.mdp, small.reward)});
  json j = small_experiment("out");
  j["environment"] = {{"spec", "general.json"}};
  j["episode_budget"] = 200;
  j["cadence"] = 100;
  const ExperimentConfig config = ExperimentConfig::from_json(j, dir);
  const std::vector<CellResult> cells = run_experiment(config);
  for (const CellResult& c : cells) {
    if (c.algorithm == "ql") {
      CHECK_FALSE(c.ok);
      CHECK_FALSE(c.error.empty());
    } else {
      CHECK(c.ok);
    }
  }
  const std::string table = slurp(dir / "out" / "cells.csv");
  CHECK(table.find("ql,0,failed,") != std::string::npos);
  const std::string aggregate = slurp(dir / "out" / "aggregate.csv");
  CHECK(aggregate.find("ql,") == std::string::npos);
  CHECK(aggregate.find("bsad,200,") != std::string::npos);
  std::filesystem::remove_all(dir);
}
