#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pgkd/analysis.hpp"
#include "pgkd/training.hpp"

namespace pgkd {

// Shortest round-trip decimal form of v.
std::string fmt_double(double v);

// Deterministic serialization: nlohmann::json keeps object keys sorted and
// prints doubles in shortest round-trip form.
std::string canonical_json(const nlohmann::json& j);

// FNV-1a 64-bit hex digest of the canonical form, with volatile keys
// (out_dir, jobs) dropped first.
std::string config_hash(const nlohmann::json& config);

// Writes metrics.jsonl + result.json (deterministic) and timing.json
// (wall-clock, excluded from reproducibility comparisons) into dir.
void write_run_outputs(const std::string& dir, const RunRecord& rec,
                       const nlohmann::json& config_echo,
                       const std::string& hash);

nlohmann::json run_result_json(const RunRecord& rec,
                               const nlohmann::json& config_echo,
                               const std::string& hash);

void write_grid_csv(const std::string& path, const GridResult& res,
                    const std::string& hash,
                    const std::vector<std::uint64_t>& seeds);

void write_noise_csv(const std::string& path, const std::vector<NoiseCell>& cells,
                     const std::string& hash,
                     const std::vector<std::uint64_t>& seeds);

void write_ratio_csv(const std::string& path, const std::vector<RatioCell>& cells,
                     const std::string& hash,
                     const std::vector<std::uint64_t>& seeds);

void write_capacity_csv(const std::string& path,
                        const std::vector<CapacityCell>& cells,
                        const std::string& hash,
                        const std::vector<std::uint64_t>& seeds);

void write_structure_csv(const std::string& path, const StructureMetrics& m,
                         const std::string& hash);

}  // namespace pgkd
