#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgkd/dataset.hpp"
#include "pgkd/training.hpp"

namespace pgkd {

// Mean L2 distance between the representation rows of connected nodes.
double connected_node_distance(const Matrix& h,
                               const std::vector<std::pair<int, int>>& edges);

// Average ranks (ties share the mean rank), 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

// Spearman rank correlation with average-rank ties. Degenerate rank vectors
// (zero variance) report rho = 0 with the flag set.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b,
                    bool* degenerate = nullptr);

struct StructureMetrics {
  double avg_connected_l2 = 0.0;
  double spearman_rho = 0.0;
  bool spearman_degenerate = false;
  struct PairRow {
    int class_a = 0;
    int class_b = 0;
    double prototype_distance = 0.0;
    long inter_edge_count = 0;
  };
  std::vector<PairRow> pairs;  // unordered pairs of non-empty classes, a < b
};

// Class-pair prototype distances vs inter-class edge counts, under
// ground-truth labels over all nodes (diagnostic measurement).
StructureMetrics inter_class_spearman(const Matrix& h, const std::vector<int>& labels,
                                      int k,
                                      const std::vector<std::pair<int, int>>& edges);

struct PipelineConfig {
  TeacherConfig teacher;
  StudentConfig student;
  DistillConfig distill;
};

// Feature noise sweep: X' = (1-alpha) X + alpha * eps, eps ~ N(0, colstd^2)
// per entry, drawn once per (alpha, seed) from the noise stream. alpha = 0
// leaves the features bit-identical.
Matrix perturb_features(const Matrix& x, double alpha, std::uint64_t seed);

struct NoiseCell {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double teacher_acc = 0.0;
  double glnn_acc = 0.0;
  double pgkd_acc = 0.0;
};

std::vector<NoiseCell> noise_sweep(const Graph& g, const SplitSpec& split,
                                   const PipelineConfig& cfg,
                                   const std::vector<double>& alphas,
                                   const std::vector<std::uint64_t>& seeds,
                                   int jobs);

struct RatioCell {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  int test_ind_size = 0;
  double teacher_acc = 0.0;
  double glnn_acc = 0.0;
  double pgkd_acc = 0.0;
};

// Rebuilds the inductive split at every ratio. At ratio 0 the evaluation
// falls back to the observed test set.
std::vector<RatioCell> split_ratio_sweep(const Graph& g, const SplitOptions& base,
                                         const PipelineConfig& cfg,
                                         const std::vector<double>& ratios,
                                         const std::vector<std::uint64_t>& seeds,
                                         int jobs);

struct CapacityCell {
  int layers = 0;
  int width = 0;
  long param_count = 0;
  std::uint64_t seed = 0;
  double vanilla_acc = 0.0;
  double glnn_acc = 0.0;
  double pgkd_acc = 0.0;
};

std::vector<CapacityCell> capacity_sweep(
    const Graph& g, const SplitSpec& split, const PipelineConfig& cfg,
    const std::vector<std::pair<int, int>>& layer_width_list,
    const std::vector<std::uint64_t>& seeds, int jobs);

enum class EmbeddingSource { input, hidden, logits };

Matrix representation_of(const ModelParams& params, const Graph& g,
                         EmbeddingSource source);

// CSV of (node_id, label, h_1..h_H) with 17 significant digits.
void export_embeddings(const Matrix& h, const std::vector<int>& labels,
                       const std::string& path);

}  // namespace pgkd
