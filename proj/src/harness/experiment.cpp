#include "bsad/harness/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bsad/exact.hpp"
#include "bsad/harness/bootstrap.hpp"
#include "bsad/harness/environments.hpp"
#include "bsad/record_io.hpp"
#include "bsad/spec_io.hpp"

namespace bsad {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

AlgorithmSpec algorithm_from_json(const json& j) {
  AlgorithmSpec spec;
  spec.raw = j;
  const std::string kind = j.at("kind").get<std::string>();
  spec.name = j.value("name", kind);
  if (spec.name.empty() || spec.name.find_first_of(",/\\\n\" ") != std::string::npos) {
    throw std::invalid_argument("algorithm name '" + spec.name + "' must be non-empty without separators");
  }
  if (kind == "bsad") {
    spec.kind = AlgorithmKind::bsad;
    spec.bsad = config_from_json(j);
  } else if (kind == "peps") {
    spec.kind = AlgorithmKind::peps;
    json fixed = j;
    fixed["stopping"] = "fixed-budget";
    spec.bsad = config_from_json(fixed);
  } else if (kind == "q_learning") {
    spec.kind = AlgorithmKind::q_learning;
    spec.q.delta = j.value("delta", spec.q.delta);
    spec.q.c = j.value("c", spec.q.c);
  } else {
    throw std::invalid_argument("unknown algorithm kind '" + kind + "'");
  }
  return spec;
}

std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.environment = j.at("environment");
  if (c.environment.contains("spec")) {
    c.environment["spec"] = resolve(base_dir, c.environment.at("spec").get<std::string>()).string();
  }
  for (const auto& a : j.at("algorithms")) c.algorithms.push_back(algorithm_from_json(a));
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else {
    const int n = j.value("num_seeds", 1);
    for (int i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  c.episode_budget = j.value("episode_budget", c.episode_budget);
  c.cadence = j.value("cadence", c.cadence);
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  c.parallelism = j.value("parallelism", c.parallelism);
  c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
  c.confidence = j.value("confidence", c.confidence);
  c.bootstrap_seed = j.value("bootstrap_seed", c.bootstrap_seed);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json algos = json::array();
  for (const auto& a : algorithms) algos.push_back(a.raw);
  return {{"environment", environment},
          {"algorithms", algos},
          {"seeds", seeds},
          {"episode_budget", episode_budget},
          {"cadence", cadence},
          {"bootstrap_resamples", bootstrap_resamples},
          {"confidence", confidence},
          {"bootstrap_seed", bootstrap_seed}};
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (algorithms.empty()) throw std::invalid_argument("experiment needs at least one algorithm");
  if (cadence < 1 || episode_budget < cadence) throw std::invalid_argument("need episode_budget >= cadence >= 1");
  if (bootstrap_resamples < 1) throw std::invalid_argument("bootstrap_resamples must be positive");
  std::map<std::string, int> names;
  for (const auto& a : algorithms) {
    if (++names[a.name] > 1) throw std::invalid_argument("duplicate algorithm name '" + a.name + "'");
  }
}

Instance make_environment(const json& env, const std::filesystem::path& base_dir) {
  if (env.contains("spec")) return load_instance(resolve(base_dir, env.at("spec").get<std::string>()));
  const std::string builder = env.value("builder", std::string("counterexample"));
  if (builder == "counterexample") {
    const int copies = env.value("copies", 2);
    std::vector<double> weights;
    if (env.contains("weights")) {
      const json& w = env.at("weights");
      if (w.is_string()) {
        const std::string preset = w.get<std::string>();
        if (preset == "equal") {
          weights.assign(static_cast<std::size_t>(copies), 1.0 / copies);
        } else if (preset == "skewed" && copies == 2) {
          weights = {0.8, 0.2};
        } else {
          throw std::invalid_argument("unknown weights preset '" + preset + "'");
        }
      } else {
        weights = w.get<std::vector<double>>();
      }
    } else {
      weights.assign(static_cast<std::size_t>(copies), 1.0 / copies);
    }
    return build_counterexample_mdp(env.value("D", 10.0), env.value("epsilon", 0.1), copies, weights);
  }
  if (builder == "random") {
    return build_random_mdp(env.value("S", 2), env.value("A", 2), env.value("H", 2), env.value("seed", std::uint64_t{0}),
                            env.value("min_gap", 0.2));
  }
  throw std::invalid_argument("unknown environment builder '" + builder + "'");
}

CellTrace run_cell(const Instance& instance, const AlgorithmSpec& spec, std::uint64_t seed, std::int64_t budget,
                   std::int64_t cadence) {
  CellTrace out;
  if (spec.kind == AlgorithmKind::q_learning) {
    QLearningConfig q = spec.q;
    q.seed = seed;
    QLearningResult r = q_learning_ucb(instance.mdp, instance.reward, budget, cadence, q);
    out.points = std::move(r.trace);
    out.termination = "budget";
    out.final_value = out.points.back().policy_value;
    return out;
  }
  BsadConfig config = spec.bsad;
  config.seed = seed;
  config.record_every = 0;
  config.record_timing = false;
  BsadRunner runner(instance.mdp, instance.reward, config);
  out.points.push_back({0, runner.candidate_value(), 0});
  for (std::int64_t e = 1; e <= budget; ++e) {
    if (!runner.done()) runner.run_episode();
    if (e % cadence == 0 || e == budget) {
      out.points.push_back({e, runner.candidate_value(), static_cast<std::int64_t>(runner.oracle().query_count())});
    }
  }
  out.termination = to_string(runner.record().termination);
  if (out.termination == "running") out.termination = "budget";
  out.final_value = out.points.back().policy_value;
  return out;
}

std::string cell_file_name(const std::string& algorithm, std::uint64_t seed) {
  return algorithm + "__seed" + std::to_string(seed) + ".csv";
}

int effective_parallelism(int configured) {
  if (const char* env = std::getenv("BSAD_PARALLELISM")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CellResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Instance instance = make_environment(config.environment);
  std::filesystem::create_directories(config.output_dir);

  std::vector<CellResult> cells;
  for (const auto& a : config.algorithms) {
    for (auto seed : config.seeds) cells.push_back({a.name, seed, false, {}, {}, 0.0});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      CellResult& cell = cells[i];
      const AlgorithmSpec& spec = config.algorithms[i / config.seeds.size()];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        cell.trace = run_cell(instance, spec, cell.seed, config.episode_budget, config.cadence);
        auto out = open_out(config.output_dir / cell_file_name(cell.algorithm, cell.seed));
        out << "episode,policy_value,queries\n" << std::setprecision(17);
        for (const auto& p : cell.trace.points) out << p.episode << ',' << p.policy_value << ',' << p.queries << '\n';
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int threads = std::min<int>(effective_parallelism(config.parallelism), static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  {
    auto out = open_out(config.output_dir / "cells.csv");
    out << "algorithm,seed,status,termination,final_value,file,error\n" << std::setprecision(17);
    for (const auto& c : cells) {
      out << c.algorithm << ',' << c.seed << ',' << (c.ok ? "ok" : "failed") << ',' << c.trace.termination << ','
          << (c.ok ? c.trace.final_value : 0.0) << ',' << (c.ok ? cell_file_name(c.algorithm, c.seed) : "") << ','
          << sanitize(c.error) << '\n';
    }
  }
  {
    json timing = json::array();
    for (const auto& c : cells) timing.push_back({{"algorithm", c.algorithm}, {"seed", c.seed}, {"wall_seconds", c.wall_seconds}});
    auto out = open_out(config.output_dir / "timing.json");
    out << timing.dump(2) << '\n';
  }
  {
    json meta = {{"config", config.to_json()},
                 {"completion_rule", completion_rule()},
                 {"mdp_hash", instance_hash(instance)},
                 {"aggregate", "mean with percentile bootstrap interval over seeds"}};
    auto out = open_out(config.output_dir / "metadata.json");
    out << meta.dump(2) << '\n';
  }
  aggregate_directory(config.output_dir, config.bootstrap_resamples, config.confidence, config.bootstrap_seed);
  return cells;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void aggregate_directory(const std::filesystem::path& dir, int resamples, double confidence, std::uint64_t seed) {
  std::ifstream cells_in(dir / "cells.csv");
  if (!cells_in) throw std::runtime_error("missing " + (dir / "cells.csv").string());
  std::string line;
  std::getline(cells_in, line);
  if (line.rfind("algorithm,seed,status", 0) != 0) throw std::runtime_error("cells.csv has an unexpected header");

  std::vector<std::string> order;
  // algorithm -> episode -> values across seeds
  std::map<std::string, std::map<std::int64_t, std::vector<double>>> values;
  while (std::getline(cells_in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 6) throw std::runtime_error("malformed cells.csv row: " + line);
    if (f[2] != "ok") continue;
    if (!values.count(f[0])) order.push_back(f[0]);
    auto& series = values[f[0]];
    std::ifstream cell(dir / f[5]);
    if (!cell) throw std::runtime_error("missing cell file " + f[5]);
    std::string row;
    std::getline(cell, row);
    if (row != "episode,policy_value,queries") throw std::runtime_error(f[5] + " has an unexpected header");
    while (std::getline(cell, row)) {
      if (row.empty()) continue;
      const auto cols = split_csv_line(row);
      series[std::stoll(cols.at(0))].push_back(std::stod(cols.at(1)));
    }
  }

  auto out = open_out(dir / "aggregate.csv");
  out << "algorithm,episode,mean,ci_low,ci_high,n\n" << std::setprecision(17);
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (const auto& [episode, sample] : values[order[a]]) {
      Rng rng(derive_seed(derive_seed(seed, a), static_cast<std::uint64_t>(episode)));
      const MeanInterval ci = bootstrap_mean_ci(sample, resamples, confidence, rng);
      out << order[a] << ',' << episode << ',' << ci.mean << ',' << ci.low << ',' << ci.high << ',' << sample.size()
          << '\n';
    }
  }
}

}  // namespace bsad
