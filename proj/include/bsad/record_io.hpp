#pragma once

#include <filesystem>
#include <ostream>

#include "json.hpp"

#include "bsad/algorithm.hpp"
#include "bsad/instance.hpp"

namespace bsad {

/// Header: episode,l,policy_value,queries,elapsed_ns.
void write_run_record_csv(std::ostream& out, const RunRecord& record);

/// {"h": {"s": a}}, with null for unset entries.
nlohmann::json policy_to_json(const DeterministicPolicy& pi);

nlohmann::json config_to_json(const BsadConfig& config);
BsadConfig config_from_json(const nlohmann::json& j, BsadConfig defaults = {});

/// Text describing how unset entries are filled for the policy-value column.
const char* completion_rule();

/// Writes run_record.csv, policy.json, metadata.json (and queries.csv when a transcript
/// was kept) into `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunRecord& record, const BsadConfig& config,
                       const Instance& instance);

}  // namespace bsad
