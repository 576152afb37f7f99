#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsad/algorithm.hpp"
#include "bsad/record_io.hpp"
#include "support.hpp"

using namespace bsad;

namespace {

BsadConfig quick(int M, std::uint64_t seed, double c = 1.0) {
  BsadConfig cfg;
  cfg.batch_size = M;
  cfg.seed = seed;
  cfg.c = c;
  cfg.record_timing = false;
  return cfg;
}

// Every kernel row equals mu0, so a continued trajectory restarts from the same
// distribution as a fresh episode.
DiscountedMdp memoryless_chain() {
  Eigen::MatrixXd kernel(6, 3);
  for (int r = 0; r < 6; ++r) kernel.row(r) << 0.5, 0.3, 0.2;
  Eigen::MatrixXd reward(3, 2);
  reward << 0.1, 0.7, 0.8, 0.2, 0.3, 0.9;
  return DiscountedMdp(3, 2, 0.9, kernel, reward, Eigen::Vector3d(0.5, 0.3, 0.2));
}

}  // namespace

TEST_CASE("config validation") {
  BsadConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.stopping = StoppingMode::fixed_budget;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.visit_budget = 10;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("a one-step instance is a dueling bandit") {
  std::vector<Eigen::MatrixXd> rewards{Eigen::MatrixXd(1, 3)};
  rewards[0] << 0.2, 0.8, 0.5;
  const EpisodicMdp mdp(1, 3, 1, {}, Eigen::VectorXd::Ones(1));
  const TrajectoryReward f = TrajectoryReward::cumulative(rewards);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RunRecord r = run_bsad_episodic(mdp, f, quick(1, seed));
    CHECK(r.termination == Termination::identified);
    CHECK(r.policy(0, 0) == 1);
    CHECK(r.final_value == doctest::Approx(0.8));
    CHECK(r.step_episodes[0] == r.episodes);
  }
}

TEST_CASE("large batches recover the risky optimum") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 1, {1.0});
  int small_right = 0, large_right = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    small_right += run_bsad_episodic(in.mdp, in.reward, quick(1, seed)).policy(0, 0) == kRiskyArm;
    large_right += run_bsad_episodic(in.mdp, in.reward, quick(64, seed)).policy(0, 0) == kRiskyArm;
  }
  CHECK(small_right == 0);
  CHECK(large_right == 5);
}

TEST_CASE("run record invariants") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Instance in = build_random_mdp(3, 2, 3, 40 + seed, 0.2);
    BsadConfig cfg = quick(1, seed);
    cfg.keep_transcript = true;
    cfg.record_every = 7;
    const RunRecord r = run_bsad_episodic(in.mdp, in.reward, cfg);
    REQUIRE(r.termination == Termination::identified);
    CHECK(r.policy.complete());
    CHECK(r.policy == optimal_policy_bruteforce(in.mdp, in.reward));
    std::int64_t total = 0;
    for (auto k : r.step_episodes) total += k;
    CHECK(total == r.episodes);
    CHECK(r.rows.back().episode == r.episodes);
    CHECK(r.rows.back().queries == r.queries);
    CHECK(r.rows.back().policy_value == doctest::Approx(r.final_value));
    CHECK(r.final_value == doctest::Approx(initial_value(in.mdp, in.reward, r.policy)));
    CHECK(static_cast<std::int64_t>(r.transcript.rows().size()) == r.queries);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      CHECK(r.rows[i].episode > r.rows[i - 1].episode);
      CHECK(r.rows[i].l <= r.rows[i - 1].l);
      CHECK(r.rows[i].queries >= r.rows[i - 1].queries);
      if (i + 1 < r.rows.size()) CHECK(r.rows[i].episode % 7 == 0);
    }
    for (std::size_t i = 1; i < r.transcript.rows().size(); ++i) {
      CHECK(r.transcript.rows()[i].step <= r.transcript.rows()[i - 1].step);
    }
  }
}

TEST_CASE("seeded runs repeat exactly") {
  const Instance in = build_random_mdp(3, 3, 2, 5, 0.2);
  const RunRecord a = run_bsad_episodic(in.mdp, in.reward, quick(2, 11));
  const RunRecord b = run_bsad_episodic(in.mdp, in.reward, quick(2, 11));
  CHECK(a.episodes == b.episodes);
  CHECK(a.queries == b.queries);
  CHECK(a.policy == b.policy);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].policy_value == b.rows[i].policy_value);
}

TEST_CASE("moving to an earlier step resets exploration and keeps later choices") {
  const Instance in = build_random_mdp(2, 2, 3, 9, 0.2);
  BsadRunner runner(in.mdp, in.reward, quick(1, 3));
  const ExplorationState fresh(2, 2, 3, 1.0, 0.1);
  int closes = 0;
  while (!runner.done()) {
    const int l = runner.active_step();
    const EpisodeOutcome out = runner.run_episode();
    CHECK(out.l == l);
    if (out.step_closed) {
      ++closes;
      for (int s = 0; s < 2; ++s) CHECK(runner.policy().is_set(l, s));
      if (!runner.done()) {
        CHECK(runner.active_step() == l - 1);
        CHECK(runner.exploration() == fresh);
        for (int s = 0; s < 2; ++s) CHECK_FALSE(runner.policy().is_set(l - 1, s));
      }
    }
  }
  CHECK(closes == 3);
  CHECK_THROWS_AS(runner.run_episode(), std::logic_error);
}

TEST_CASE("caps end the run with unset entries") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 1, {1.0});
  BsadConfig cfg = quick(64, 1);
  cfg.episode_cap = 50;
  const RunRecord r = run_bsad_episodic(in.mdp, in.reward, cfg);
  CHECK(r.termination == Termination::cap);
  // The cap counts episodes of the open phase; step 1 closed after its first episode.
  CHECK(r.step_episodes[0] == 50);
  CHECK(r.episodes == r.step_episodes[0] + r.step_episodes[1]);
  CHECK_FALSE(r.policy.complete());
  CHECK(r.final_value == doctest::Approx(initial_value(in.mdp, in.reward, r.policy.completed(in.mdp, kCompletionAction))));

  cfg.episode_cap = 1'000'000;
  cfg.total_episode_cap = 20;
  const RunRecord t = run_bsad_episodic(in.mdp, in.reward, cfg);
  CHECK(t.termination == Termination::cap);
  CHECK(t.episodes == 20);
}

TEST_CASE("fixed-budget stopping") {
  const Instance in = default_experiment_instance();
  SUBCASE("visit budget") {
    const RunRecord r = run_peps_fixed_horizon(in.mdp, in.reward, quick(64, 2), 128 * 40, 0);
    CHECK(r.termination == Termination::identified);
    CHECK(r.policy.complete());
    CHECK(r.policy(0, 0) == kRiskyArm);
    CHECK(r.policy(0, 1) == kRiskyArm);
  }
  SUBCASE("episode quota") {
    const RunRecord r = run_peps_fixed_horizon(in.mdp, in.reward, quick(64, 2), 0, 300);
    CHECK(r.termination == Termination::identified);
    CHECK(r.step_episodes[0] == 300);
    CHECK(r.step_episodes[1] == 300);
    CHECK(r.episodes == 600);
  }
}

TEST_CASE("explore then commit") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 1, {1.0});
  CHECK_THROWS_AS(explore_then_commit(in.mdp, in.reward, 1, quick(64, 0)), std::invalid_argument);
  const RegretTrace t = explore_then_commit(in.mdp, in.reward, 20'000, quick(64, 1));
  REQUIRE(t.regret.size() == 20'000);
  REQUIRE(t.commit_episode > 0);
  CHECK(t.identified);
  CHECK(t.optimal);
  for (double r : t.regret) CHECK(r >= -1e-12);
  for (std::size_t i = static_cast<std::size_t>(t.commit_episode); i < t.regret.size(); ++i) {
    CHECK(t.regret[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
  double total = 0.0;
  for (double r : t.regret) total += r;
  CHECK(t.cumulative() == doctest::Approx(total));
}

TEST_CASE("instantaneous regret matches sampled episodes") {
  const Instance in = build_random_mdp(2, 2, 3, 14, 0.2);
  BsadRunner runner(in.mdp, in.reward, quick(1, 4));
  for (int e = 0; e < 40; ++e) runner.run_episode();
  const double exact = expected_reward(in.mdp, in.reward, runner.next_episode_rule());
  // Sample the same rule forward with an independent generator.
  const ActionRule rule = runner.next_episode_rule();
  Rng rng(77);
  const int n = 40'000;
  double acc = 0.0, acc_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Trajectory tau = sample_episode(
        in.mdp,
        [&](int h, int s) {
          const auto choices = rule(h, s);
          double u = uniform01(rng);
          for (const ActionChoice& c : choices) {
            if (u < c.probability) return c.action;
            u -= c.probability;
          }
          return choices.back().action;
        },
        rng);
    const double v = in.reward(tau);
    acc += v;
    acc_sq += v * v;
  }
  const double mean = acc / n;
  const double sd = std::sqrt(std::max(0.0, acc_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 4 * sd + 1e-9);
}

TEST_CASE("discounted horizon") {
  CHECK(horizon_for_discounted(0.9, 0.1) == 73);
  CHECK(horizon_for_discounted(0.9, 0.5) == 57);
  for (double gamma : {0.5, 0.9, 0.99}) {
    for (double eps : {0.01, 0.1, 1.0, 10.0}) {
      const int h = horizon_for_discounted(gamma, eps);
      const double scale = 2.0 / ((1 - gamma) * (1 - gamma));
      CHECK(scale * std::pow(gamma, h) <= eps);
      if (h > 1) CHECK(scale * std::pow(gamma, h - 1) > eps);
    }
  }
  CHECK_THROWS_AS(horizon_for_discounted(1.0, 0.1), std::invalid_argument);
}

TEST_CASE("frame instance") {
  const DiscountedMdp d = build_discounted_chain();
  const FrameInstance f = frame_instance(d, 4);
  CHECK(f.mdp.horizon() == 4);
  CHECK(f.mdp.kernel(2) == d.kernel());
  CHECK(f.oracle_reward.step_reward(3, 1, 1) == d.reward()(1, 1));
  CHECK(f.value_reward.step_reward(3, 1, 1) == doctest::Approx(std::pow(0.9, 3) * d.reward()(1, 1)));
}

TEST_CASE("discounted run identifies the cycling policy") {
  const DiscountedMdp d = build_discounted_chain();
  const DiscountedResult r = run_bsad_discounted(d, 5.0, quick(1, 3, 0.25));
  CHECK(r.horizon == horizon_for_discounted(0.9, 5.0));
  CHECK(r.record.termination == Termination::identified);
  CHECK(r.policy == Eigen::Vector3i(1, 1, 1));
  const Eigen::VectorXd vstar = discounted_optimal_value(d);
  const Eigen::VectorXd v = discounted_policy_value(d, r.policy);
  CHECK(d.initial_dist().dot(vstar - v) <= 5.0);
}

TEST_CASE("continued frames equal fresh episodes when every row is the initial distribution") {
  const DiscountedMdp d = memoryless_chain();
  const double eps = 100.0;
  const BsadConfig cfg = quick(2, 6, 0.5);
  std::vector<int> frame_starts;
  const DiscountedResult disc = run_bsad_discounted(d, eps, cfg, [&](const EpisodeOutcome& o) {
    frame_starts.push_back(o.visit.suffix.start_step);
  });
  const FrameInstance frame = frame_instance(d, disc.horizon);
  BsadRunner runner(frame.mdp, frame.oracle_reward, cfg, &frame.value_reward);
  const RunRecord epi = runner.run();
  CHECK(epi.episodes == disc.record.episodes);
  CHECK(epi.queries == disc.record.queries);
  CHECK(epi.policy == disc.record.policy);
  REQUIRE(epi.rows.size() == disc.record.rows.size());
  for (std::size_t i = 0; i < epi.rows.size(); ++i) CHECK(epi.rows[i].policy_value == disc.record.rows[i].policy_value);
  CHECK(static_cast<std::int64_t>(frame_starts.size()) == disc.record.episodes);
  CHECK(disc.policy == Eigen::Vector3i(1, 0, 1));
}

TEST_CASE("run outputs") {
  const Instance in = build_counterexample_mdp(10.0, 0.1, 1, {1.0});
  BsadConfig cfg = quick(4, 1);
  cfg.keep_transcript = true;
  cfg.record_every = 100;
  const RunRecord r = run_bsad_episodic(in.mdp, in.reward, cfg);

  std::ostringstream csv;
  write_run_record_csv(csv, r);
  CHECK(csv.str().rfind("episode,l,policy_value,queries,elapsed_ns\n", 0) == 0);

  DeterministicPolicy partial(2, 2);
  partial.set(1, 0, 1);
  CHECK(policy_to_json(partial).dump() == R"({"0":{"0":null,"1":null},"1":{"0":1,"1":null}})");

  const BsadConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tie_rule", "coin"}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"batch_size", 0}}), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path() / "bsad_test_run_outputs";
  std::filesystem::remove_all(dir);
  write_run_outputs(dir, r, cfg, in);
  for (const char* name : {"run_record.csv", "policy.json", "metadata.json", "queries.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  std::ifstream meta_in(dir / "metadata.json");
  const nlohmann::json meta = nlohmann::json::parse(meta_in);
  CHECK(meta.at("episodes") == r.episodes);
  CHECK(meta.at("mdp_hash").get<std::string>().size() == 40);
  CHECK(meta.at("config").at("batch_size") == 4);
  std::filesystem::remove_all(dir);
}
