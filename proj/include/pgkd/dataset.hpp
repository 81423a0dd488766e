#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgkd/graph.hpp"

namespace pgkd {

// On-disk dataset: a JSON manifest referencing features.csv (one row per
// node), labels.csv (node_id,class_id) and edges.csv (src,dst), plus
// optional one-id-per-line split files.
struct DatasetManifest {
  std::string name;
  int n = 0, d = 0, k = 0;
  std::string features_path;
  std::string labels_path;
  std::string edges_path;
  std::string train_ids_path;  // optional, empty when absent
  std::string val_ids_path;
  std::string test_ids_path;
  std::string feature_norm = "none";  // "none" | "row_l1"

  static DatasetManifest load(const std::string& manifest_path);
  bool has_split_files() const { return !train_ids_path.empty(); }
};

Graph load_dataset(const DatasetManifest& m);
Graph load_dataset(const std::string& manifest_path);

// train/val/test id lists from the manifest's split files.
std::array<std::vector<int>, 3> load_split_ids(const DatasetManifest& m);

// Writes manifest.json + features.csv + labels.csv + edges.csv into dir.
void save_dataset(const Graph& g, const std::string& name, const std::string& dir);

enum class Affinity { uniform, chain };
enum class FeatureGeometry { random, chain };

// Stochastic block model with class-centered Gaussian features. Block labels
// are the ground-truth classes. Fully determined by the seed.
struct SbmConfig {
  int k = 2;
  int nodes_per_block = 50;
  std::vector<int> block_sizes;  // optional; overrides nodes_per_block
  double p_intra = 0.1;
  double p_inter = 0.01;
  // chain affinity: p(i,j) = p_inter * exp(-affinity_decay * (|i-j|-1))
  Affinity affinity = Affinity::uniform;
  double affinity_decay = 0.7;
  int feature_dim = 16;
  double center_separation = 1.0;
  double noise_std = 1.0;
  FeatureGeometry geometry = FeatureGeometry::random;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<int> sizes() const;
  double edge_probability(int block_a, int block_b) const;
};

Graph generate_sbm(const SbmConfig& cfg);

}  // namespace pgkd
