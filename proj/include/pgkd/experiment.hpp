#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgkd/config.hpp"

namespace pgkd {

// High-level operations behind the CLI and the C API. Every op resolves its
// split deterministically from (config, seed) unless one is supplied, writes
// its artifacts under <out_dir>/<config_hash>/..., and returns a JSON
// summary naming what it wrote.

Graph load_graph_for(const ExperimentConfig& cfg);

SplitSpec resolve_split(const Graph& g, const ExperimentConfig& cfg,
                        std::uint64_t seed,
                        const SplitSpec* override_split = nullptr);

nlohmann::json split_op(const Graph& g, const ExperimentConfig& cfg,
                        std::uint64_t seed, const std::string& out_path);

nlohmann::json train_teacher_op(const Graph& g, const ExperimentConfig& cfg,
                                std::uint64_t seed,
                                const SplitSpec* split = nullptr);

nlohmann::json distill_op(const Graph& g, const ExperimentConfig& cfg,
                          std::uint64_t seed, const std::string& teacher_ckpt,
                          const SplitSpec* split = nullptr);

double evaluate_op(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed,
                   const std::string& ckpt, const std::string& which,
                   const SplitSpec* split = nullptr);

nlohmann::json grid_op(const Graph& g, const ExperimentConfig& cfg,
                       const std::vector<double>& lambda1_grid,
                       const std::vector<double>& lambda2_grid,
                       const std::vector<std::uint64_t>& seeds,
                       const SplitSpec* split = nullptr);

nlohmann::json sweep_noise_op(const Graph& g, const ExperimentConfig& cfg,
                              const std::vector<double>& alphas,
                              const std::vector<std::uint64_t>& seeds,
                              const SplitSpec* split = nullptr);

nlohmann::json sweep_ratio_op(const Graph& g, const ExperimentConfig& cfg,
                              const std::vector<double>& ratios,
                              const std::vector<std::uint64_t>& seeds);

nlohmann::json sweep_capacity_op(
    const Graph& g, const ExperimentConfig& cfg,
    const std::vector<std::pair<int, int>>& layer_width_list,
    const std::vector<std::uint64_t>& seeds, const SplitSpec* split = nullptr);

// source: "input" | "hidden" | "logits"; ckpt may be empty for "input".
Matrix representation_from_checkpoint(const Graph& g, const std::string& ckpt,
                                      const std::string& source);

nlohmann::json analyze_dist_op(const Graph& g, const std::string& ckpt,
                               const std::string& source);

nlohmann::json analyze_spearman_op(const Graph& g, const std::string& ckpt,
                                   const std::string& source,
                                   const std::string& out_csv);

nlohmann::json export_embeddings_op(const Graph& g, const std::string& ckpt,
                                    const std::string& source,
                                    const std::string& out_path);

}  // namespace pgkd
