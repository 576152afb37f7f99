#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "bsad/instance.hpp"

namespace bsad {

/// JSON form of an instance:
///   S, A, H, transitions [H-1][S][A][S], initial_dist [S], actions [H][S] (optional),
///   reward: {kind: "cumulative", table: [H][S][A]}
///        or {kind: "tabular-general", table: [{start, steps: [[s, a], ...], value}, ...]}
nlohmann::json instance_to_json(const Instance& instance);

/// Validates shapes and invariants; errors name the first offending entry.
Instance instance_from_json(const nlohmann::json& spec);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const Instance& instance);

/// Git blob hash (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

/// git_blob_hash of the canonical JSON dump.
std::string instance_hash(const Instance& instance);

}  // namespace bsad
