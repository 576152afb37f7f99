#include "bsad/record_io.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>

#include "bsad/spec_io.hpp"

namespace bsad {

using nlohmann::json;

void write_run_record_csv(std::ostream& out, const RunRecord& record) {
  out << "episode,l,policy_value,queries,elapsed_ns\n";
  out << std::setprecision(17);
  for (const auto& r : record.rows) {
    out << r.episode << ',' << r.l << ',' << r.policy_value << ',' << r.queries << ',' << r.elapsed_ns << '\n';
  }
}

json policy_to_json(const DeterministicPolicy& pi) {
  json out = json::object();
  for (int h = 0; h < pi.horizon(); ++h) {
    json row = json::object();
    for (int s = 0; s < pi.num_states(); ++s) {
      row[std::to_string(s)] = pi.is_set(h, s) ? json(pi(h, s)) : json(nullptr);
    }
    out[std::to_string(h)] = std::move(row);
  }
  return out;
}

json config_to_json(const BsadConfig& c) {
  return {{"batch_size", c.batch_size},
          {"delta", c.delta},
          {"c", c.c},
          {"episode_cap", c.episode_cap},
          {"total_episode_cap", c.total_episode_cap},
          {"seed", c.seed},
          {"tie_rule", c.tie_rule == TieRule::uniform_random ? "uniform-random" : "favor-first"},
          {"stopping", c.stopping == StoppingMode::adaptive ? "adaptive" : "fixed-budget"},
          {"visit_budget", c.visit_budget},
          {"step_episode_quota", c.step_episode_quota},
          {"record_every", c.record_every},
          {"record_timing", c.record_timing}};
}

BsadConfig config_from_json(const json& j, BsadConfig c) {
  if (!j.is_object()) throw std::invalid_argument("algorithm config must be an object");
  c.batch_size = j.value("batch_size", c.batch_size);
  c.delta = j.value("delta", c.delta);
  c.c = j.value("c", c.c);
  c.episode_cap = j.value("episode_cap", c.episode_cap);
  c.total_episode_cap = j.value("total_episode_cap", c.total_episode_cap);
  c.seed = j.value("seed", c.seed);
  if (j.contains("tie_rule")) {
    const auto rule = j.at("tie_rule").get<std::string>();
    if (rule == "uniform-random") {
      c.tie_rule = TieRule::uniform_random;
    } else if (rule == "favor-first") {
      c.tie_rule = TieRule::favor_first;
    } else {
      throw std::invalid_argument("unknown tie_rule '" + rule + "'");
    }
  }
  if (j.contains("stopping")) {
    const auto mode = j.at("stopping").get<std::string>();
    if (mode == "adaptive") {
      c.stopping = StoppingMode::adaptive;
    } else if (mode == "fixed-budget") {
      c.stopping = StoppingMode::fixed_budget;
    } else {
      throw std::invalid_argument("unknown stopping mode '" + mode + "'");
    }
  }
  c.visit_budget = j.value("visit_budget", c.visit_budget);
  c.step_episode_quota = j.value("step_episode_quota", c.step_episode_quota);
  c.record_every = j.value("record_every", c.record_every);
  c.record_timing = j.value("record_timing", c.record_timing);
  c.validate();
  return c;
}

const char* completion_rule() {
  return "unset policy entries are filled with action 0 (or the last available action if fewer exist) "
         "when computing policy_value";
}

void write_run_outputs(const std::filesystem::path& dir, const RunRecord& record, const BsadConfig& config,
                       const Instance& instance) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("run_record.csv");
    write_run_record_csv(out, record);
  }
  {
    auto out = open("policy.json");
    out << policy_to_json(record.policy).dump(2) << '\n';
  }
  if (config.keep_transcript) {
    auto out = open("queries.csv");
    record.transcript.write_csv(out);
  }
  json meta = {{"config", config_to_json(config)},
               {"completion_rule", completion_rule()},
               {"mdp_hash", instance_hash(instance)},
               {"termination", to_string(record.termination)},
               {"episodes", record.episodes},
               {"step_episodes", record.step_episodes},
               {"queries", record.queries},
               {"fallbacks", record.fallbacks},
               {"final_value", record.final_value}};
  auto out = open("metadata.json");
  out << meta.dump(2) << '\n';
}

}  // namespace bsad
