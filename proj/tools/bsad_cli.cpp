#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bsad/algorithm.hpp"
#include "bsad/harness/environments.hpp"
#include "bsad/harness/experiment.hpp"
#include "bsad/record_io.hpp"
#include "bsad/spec_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bsad;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + " is not valid JSON: " + e.what());
  }
}

// --env accepts a builder name ("counterexample", "fig1", "random"), an instance spec
// file, or a file holding an environment object as used in experiment configs.
json environment_json(const std::string& env, int copies) {
  if (env == "counterexample") return {{"builder", "counterexample"}, {"copies", copies}, {"weights", "equal"}};
  if (env == "fig1") return {{"builder", "counterexample"}, {"copies", 1}, {"weights", json::array({1.0})}};
  if (env == "random") return {{"builder", "random"}};
  const fs::path path(env);
  if (!fs::exists(path)) throw std::invalid_argument("unknown environment '" + env + "'");
  const json j = read_json(path);
  if (j.contains("S")) return {{"spec", fs::absolute(path).string()}};
  json out = j;
  if (out.contains("spec")) out["spec"] = (fs::absolute(path).parent_path() / out.at("spec").get<std::string>()).string();
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size() || v < 1) throw std::invalid_argument("batch sizes must be positive integers: '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty batch size list");
  return out;
}

json summarize(const std::vector<CellResult>& cells, const fs::path& dir) {
  int ok = 0;
  json failed = json::array();
  for (const auto& c : cells) {
    if (c.ok) {
      ++ok;
    } else {
      failed.push_back({{"algorithm", c.algorithm}, {"seed", c.seed}, {"error", c.error}});
    }
  }
  return {{"output_dir", dir.string()}, {"cells", cells.size()}, {"ok", ok}, {"failed", failed}};
}

int cmd_run(const std::string& config_file) {
  const fs::path path = fs::absolute(config_file);
  const ExperimentConfig config = ExperimentConfig::from_json(read_json(path), path.parent_path());
  std::cout << summarize(run_experiment(config), config.output_dir).dump() << '\n';
  return 0;
}

struct SweepOptions {
  std::string env = "counterexample";
  std::string batches = "2,4,8,16,32,64,128";
  int copies = 2;
  int seeds = 10;
  std::int64_t budget = 100'000;
  std::int64_t cadence = 1'000;
  double delta = 0.1;
  std::string out = "results/sweep-batch";
  int resamples = 10'000;
};

int cmd_sweep(const SweepOptions& o) {
  json algorithms = json::array();
  for (int M : parse_int_list(o.batches)) {
    algorithms.push_back({{"kind", "bsad"}, {"name", "M" + std::to_string(M)}, {"batch_size", M}, {"delta", o.delta}});
  }
  const json j = {{"environment", environment_json(o.env, o.copies)},
                  {"algorithms", algorithms},
                  {"num_seeds", o.seeds},
                  {"episode_budget", o.budget},
                  {"cadence", o.cadence},
                  {"bootstrap_resamples", o.resamples},
                  {"output_dir", fs::absolute(o.out).string()}};
  const ExperimentConfig config = ExperimentConfig::from_json(j);
  std::cout << summarize(run_experiment(config), config.output_dir).dump() << '\n';
  return 0;
}

int cmd_condorcet(const std::string& env, int copies, int M) {
  if (M < 1) throw std::invalid_argument("--M must be at least 1");
  const Instance in = make_environment(environment_json(env, copies));
  const DeterministicPolicy opt = optimal_policy_bruteforce(in.mdp, in.reward);
  std::cout << "h,s,a,b,p,condorcet_winner,optimal\n" << std::setprecision(17);
  for (int h = 0; h < in.mdp.horizon(); ++h) {
    for (int s = 0; s < in.mdp.num_states(); ++s) {
      const int n = in.mdp.actions_at(h, s);
      if (n < 2) continue;
      const auto w = condorcet_winner(in.mdp, in.reward, opt, h, s, M);
      const std::string winner = w ? std::to_string(*w) : "";
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          std::cout << h << ',' << s << ',' << a << ',' << b << ','
                    << exact_preference_probability(in.mdp, in.reward, h, s, a, b, opt, M) << ',' << winner << ','
                    << opt(h, s) << '\n';
        }
      }
    }
  }
  return 0;
}

int cmd_oracle_check(const std::string& env, int copies, int M, int samples, double max_std, std::uint64_t seed) {
  if (M < 1 || samples < 1) throw std::invalid_argument("--M and --samples must be positive");
  const Instance in = make_environment(environment_json(env, copies));
  const DeterministicPolicy opt = optimal_policy_bruteforce(in.mdp, in.reward);
  Rng rng(seed);
  PreferenceOracle oracle(in.reward, TieRule::uniform_random, derive_seed(seed, 1));
  double worst = 0.0;
  int cases = 0;
  for (int h = 0; h < in.mdp.horizon(); ++h) {
    for (int s = 0; s < in.mdp.num_states(); ++s) {
      const int n = in.mdp.actions_at(h, s);
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          const double p = exact_preference_probability(in.mdp, in.reward, h, s, a, b, opt, M);
          std::int64_t wins = 0;
          for (int i = 0; i < samples; ++i) {
            const TrajectoryBatch da = sample_batch(in.mdp, opt, h, s, a, M, rng);
            const TrajectoryBatch db = sample_batch(in.mdp, opt, h, s, b, M, rng);
            wins += oracle.human_feedback(da, db) == 0;
          }
          const double freq = static_cast<double>(wins) / samples;
          const double sd = std::max(std::sqrt(p * (1.0 - p) / samples), 1e-12);
          const double z = std::abs(freq - p) / sd;
          worst = std::max(worst, z);
          ++cases;
          std::cout << json{{"h", h}, {"s", s}, {"a", a}, {"b", b}, {"exact", p}, {"monte_carlo", freq}, {"std_dev", z}}.dump()
                    << '\n';
        }
      }
    }
  }
  const bool ok = worst <= max_std;
  std::cout << json{{"cases", cases}, {"largest_std_dev", worst}, {"threshold", max_std}, {"pass", ok}}.dump() << '\n';
  if (!ok) throw std::runtime_error("Monte Carlo deviates from the exact preference by more than the threshold");
  return 0;
}

int cmd_plot_data(const std::string& dir, int resamples, double confidence, std::uint64_t seed) {
  const fs::path meta_path = fs::path(dir) / "metadata.json";
  if (fs::exists(meta_path)) {
    const json meta = read_json(meta_path);
    if (meta.contains("config")) {
      const json& c = meta.at("config");
      if (resamples < 1) resamples = c.value("bootstrap_resamples", 10'000);
      if (confidence <= 0.0) confidence = c.value("confidence", 0.95);
      if (seed == 0) seed = c.value("bootstrap_seed", std::uint64_t{7});
    }
  }
  if (resamples < 1) resamples = 10'000;
  if (confidence <= 0.0) confidence = 0.95;
  if (seed == 0) seed = 7;
  aggregate_directory(dir, resamples, confidence, seed);
  std::cout << json{{"aggregate", (fs::path(dir) / "aggregate.csv").string()}}.dump() << '\n';
  return 0;
}

int cmd_identify(const std::string& env, int copies, const BsadConfig& config, const std::string& out) {
  const Instance in = make_environment(environment_json(env, copies));
  const RunRecord record = run_bsad_episodic(in.mdp, in.reward, config);
  write_run_outputs(out, record, config, in);
  std::cout << json{{"termination", to_string(record.termination)},
                    {"episodes", record.episodes},
                    {"queries", record.queries},
                    {"final_value", record.final_value},
                    {"policy", policy_to_json(record.policy)},
                    {"output_dir", out}}
                   .dump()
            << '\n';
  return 0;
}

void report_error(const std::string& command, const std::string& message) {
  std::cerr << json{{"error", message}, {"command", command}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched dueling search for optimal policies from trajectory preferences"};
  app.require_subcommand(1);

  std::string config_file;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config file");
  run->add_option("config", config_file, "Experiment config (JSON)")->required();

  SweepOptions sweep;
  auto* sw = app.add_subcommand("sweep-batch", "Run BSAD across batch sizes on one environment");
  sw->add_option("--env", sweep.env, "Builder name or JSON file");
  sw->add_option("--M", sweep.batches, "Comma-separated batch sizes");
  sw->add_option("--copies", sweep.copies, "Copies of the start state for the counterexample builder");
  sw->add_option("--seeds", sweep.seeds, "Number of seeds");
  sw->add_option("--budget", sweep.budget, "Episode budget per cell");
  sw->add_option("--cadence", sweep.cadence, "Evaluation cadence in episodes");
  sw->add_option("--delta", sweep.delta, "Confidence parameter");
  sw->add_option("--resamples", sweep.resamples, "Bootstrap resamples");
  sw->add_option("--out", sweep.out, "Output directory");

  std::string env = "counterexample";
  int copies = 2;
  int M = 1;
  auto* cond = app.add_subcommand("condorcet", "Print the exact batch preference table");
  cond->add_option("--env", env, "Builder name or JSON file");
  cond->add_option("--copies", copies, "Copies of the start state for the counterexample builder");
  cond->add_option("--M", M, "Batch size")->required();

  int samples = 100'000;
  double max_std = 3.0;
  std::uint64_t seed = 1;
  auto* check = app.add_subcommand("oracle-check", "Compare Monte Carlo preferences with the exact ones");
  check->add_option("--env", env, "Builder name or JSON file");
  check->add_option("--copies", copies, "Copies of the start state for the counterexample builder");
  check->add_option("--M", M, "Batch size");
  check->add_option("--samples", samples, "Monte Carlo batch pairs per case");
  check->add_option("--max-std", max_std, "Largest accepted deviation in binomial standard deviations");
  check->add_option("--seed", seed, "Sampling seed");

  std::string dir;
  int resamples = 0;
  double confidence = 0.0;
  std::uint64_t boot_seed = 0;
  auto* plot = app.add_subcommand("plot-data", "Rebuild aggregate.csv from a results directory");
  plot->add_option("dir", dir, "Results directory")->required();
  plot->add_option("--resamples", resamples, "Bootstrap resamples (default: from metadata.json)");
  plot->add_option("--confidence", confidence, "Interval level (default: from metadata.json)");
  plot->add_option("--seed", boot_seed, "Bootstrap seed (default: from metadata.json)");

  BsadConfig id_config;
  std::string id_out = "results/identify";
  std::string tie_rule = "uniform-random";
  auto* ident = app.add_subcommand("identify", "Run BSAD once and write its run record");
  ident->add_option("--env", env, "Builder name or JSON file");
  ident->add_option("--copies", copies, "Copies of the start state for the counterexample builder");
  ident->add_option("--M", id_config.batch_size, "Batch size");
  ident->add_option("--delta", id_config.delta, "Confidence parameter");
  ident->add_option("--c", id_config.c, "Bonus scale");
  ident->add_option("--seed", id_config.seed, "Run seed");
  ident->add_option("--episode-cap", id_config.episode_cap, "Episode cap per step phase");
  ident->add_option("--tie-rule", tie_rule, "uniform-random or favor-first");
  ident->add_option("--record-every", id_config.record_every, "Row cadence of run_record.csv");
  ident->add_option("--out", id_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("parse", e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*run) return cmd_run(config_file);
    if (*sw) return cmd_sweep(sweep);
    if (*cond) return cmd_condorcet(env, copies, M);
    if (*check) return cmd_oracle_check(env, copies, M, samples, max_std, seed);
    if (*plot) return cmd_plot_data(dir, resamples, confidence, boot_seed);
    if (*ident) {
      if (tie_rule != "uniform-random" && tie_rule != "favor-first") {
        throw std::invalid_argument("unknown tie rule '" + tie_rule + "'");
      }
      id_config.tie_rule = tie_rule == "favor-first" ? TieRule::favor_first : TieRule::uniform_random;
      id_config.keep_transcript = true;
      id_config.validate();
      return cmd_identify(env, copies, id_config, id_out);
    }
  } catch (const std::exception& e) {
    report_error(command, e.what());
    return 1;
  }
  return 1;
}
