#include "bsad/spec_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace bsad {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("MDP spec: " + what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(std::string("missing field '") + name + "'");
  return j.at(name);
}

int positive_int(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer() || v.get<long long>() < 1) fail(std::string("'") + name + "' must be a positive integer");
  return v.get<int>();
}

const json& array_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array");
  if (v.size() != n) fail(where + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
  return v;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where + " must be a number");
  return v.get<double>();
}

std::string index_path(const char* root, std::initializer_list<int> idx) {
  std::string out = root;
  for (int i : idx) out += "[" + std::to_string(i) + "]";
  return out;
}

}  // namespace

nlohmann::json instance_to_json(const Instance& instance) {
  const EpisodicMdp& mdp = instance.mdp;
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  json out;
  out["S"] = S;
  out["A"] = A;
  out["H"] = H;
  json transitions = json::array();
  for (int h = 0; h + 1 < H; ++h) {
    json step = json::array();
    for (int s = 0; s < S; ++s) {
      json state = json::array();
      for (int a = 0; a < A; ++a) {
        const auto row = mdp.transition(h, s, a);
        json r = json::array();
        for (int n = 0; n < S; ++n) r.push_back(row(n));
        state.push_back(std::move(r));
      }
      step.push_back(std::move(state));
    }
    transitions.push_back(std::move(step));
  }
  out["transitions"] = std::move(transitions);
  out["initial_dist"] = std::vector<double>(mdp.initial_dist().data(), mdp.initial_dist().data() + S);
  json actions = json::array();
  for (int h = 0; h < H; ++h) {
    json row = json::array();
    for (int s = 0; s < S; ++s) row.push_back(mdp.actions_at(h, s));
    actions.push_back(std::move(row));
  }
  out["actions"] = std::move(actions);

  const TrajectoryReward& f = instance.reward;
  json reward;
  if (f.is_cumulative()) {
    reward["kind"] = "cumulative";
    json table = json::array();
    for (const auto& r : f.per_step()) {
      json step = json::array();
      for (int s = 0; s < S; ++s) {
        json row = json::array();
        for (int a = 0; a < A; ++a) row.push_back(r(s, a));
        step.push_back(std::move(row));
      }
      table.push_back(std::move(step));
    }
    reward["table"] = std::move(table);
  } else {
    reward["kind"] = "tabular-general";
    json table = json::array();
    for (const auto& [tau, value] : f.table()) {
      json steps = json::array();
      for (const auto& sa : tau.steps) steps.push_back({sa.state, sa.action});
      table.push_back({{"start", tau.start_step}, {"steps", std::move(steps)}, {"value", value}});
    }
    reward["table"] = std::move(table);
  }
  out["reward"] = std::move(reward);
  return out;
}

Instance instance_from_json(const nlohmann::json& spec) {
  const int S = positive_int(spec, "S");
  const int A = positive_int(spec, "A");
  const int H = positive_int(spec, "H");

  const json& transitions = array_of(field(spec, "transitions"), static_cast<std::size_t>(H - 1), "transitions");
  std::vector<Eigen::MatrixXd> kernels;
  for (int h = 0; h + 1 < H; ++h) {
    Eigen::MatrixXd k(S * A, S);
    const json& step = array_of(transitions[h], S, index_path("transitions", {h}));
    for (int s = 0; s < S; ++s) {
      const json& state = array_of(step[s], A, index_path("transitions", {h, s}));
      for (int a = 0; a < A; ++a) {
        const json& row = array_of(state[a], S, index_path("transitions", {h, s, a}));
        for (int n = 0; n < S; ++n) k(s * A + a, n) = number(row[n], index_path("transitions", {h, s, a, n}));
      }
    }
    kernels.push_back(std::move(k));
  }

  const json& mu_json = array_of(field(spec, "initial_dist"), S, "initial_dist");
  Eigen::VectorXd mu(S);
  for (int s = 0; s < S; ++s) mu(s) = number(mu_json[s], index_path("initial_dist", {s}));

  Eigen::MatrixXi available;
  if (spec.contains("actions")) {
    available.resize(H, S);
    const json& actions = array_of(spec.at("actions"), H, "actions");
    for (int h = 0; h < H; ++h) {
      const json& row = array_of(actions[h], S, index_path("actions", {h}));
      for (int s = 0; s < S; ++s) {
        if (!row[s].is_number_integer()) fail(index_path("actions", {h, s}) + " must be an integer");
        available(h, s) = row[s].get<int>();
      }
    }
  }

  const json& reward = field(spec, "reward");
  const json& kind = field(reward, "kind");
  if (!kind.is_string()) fail("reward.kind must be a string");
  const json& table = field(reward, "table");
  std::optional<TrajectoryReward> f;
  if (kind == "cumulative") {
    array_of(table, H, "reward.table");
    std::vector<Eigen::MatrixXd> per_step;
    for (int h = 0; h < H; ++h) {
      Eigen::MatrixXd r(S, A);
      const json& step = array_of(table[h], S, index_path("reward.table", {h}));
      for (int s = 0; s < S; ++s) {
        const json& row = array_of(step[s], A, index_path("reward.table", {h, s}));
        for (int a = 0; a < A; ++a) {
          r(s, a) = number(row[a], index_path("reward.table", {h, s, a}));
          if (r(s, a) < 0.0) fail(index_path("reward.table", {h, s, a}) + " is negative");
        }
      }
      per_step.push_back(std::move(r));
    }
    f = TrajectoryReward::cumulative(std::move(per_step));
  } else if (kind == "tabular-general") {
    if (!table.is_array()) fail("reward.table must be an array");
    std::map<Trajectory, double> entries;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const std::string where = "reward.table[" + std::to_string(i) + "]";
      const json& entry = table[i];
      Trajectory tau;
      const json& start = field(entry, "start");
      if (!start.is_number_integer()) fail(where + ".start must be an integer");
      tau.start_step = start.get<int>();
      const json& steps = field(entry, "steps");
      if (!steps.is_array() || steps.empty()) fail(where + ".steps must be a non-empty array");
      for (const auto& pair : steps) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
          fail(where + ".steps entries must be [state, action] pairs");
        }
        tau.steps.push_back({pair[0].get<int>(), pair[1].get<int>()});
      }
      if (!entries.emplace(std::move(tau), number(field(entry, "value"), where + ".value")).second) {
        fail(where + " duplicates an earlier trajectory");
      }
    }
    f = TrajectoryReward::tabular(H, std::move(entries));
  } else {
    fail("unknown reward.kind '" + kind.get<std::string>() + "'");
  }

  Instance instance{EpisodicMdp(S, A, H, std::move(kernels), std::move(mu), std::move(available)), std::move(*f)};
  instance.reward.check_compatible(instance.mdp);
  return instance;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json spec;
  try {
    spec = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("MDP spec: " + path.string() + " is not valid JSON: " + e.what());
  }
  return instance_from_json(spec);
}

void save_instance(const std::filesystem::path& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(instance).dump(2) << '\n';
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest.data(), &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string instance_hash(const Instance& instance) { return git_blob_hash(instance_to_json(instance).dump()); }

}  // namespace bsad
