#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pgkd/matrix.hpp"

namespace pgkd {

// Undirected graph with node features and class labels. Edge storage is a
// deduplicated (u<v) pair list plus a symmetric CSR adjacency without
// self-loops. Immutable after build().
struct Graph {
  int n = 0;
  int d = 0;
  int k = 0;
  Matrix features;                          // n x d
  std::vector<int> labels;                  // n, values in [0,k)
  std::vector<std::pair<int, int>> edges;   // u < v, sorted, unique
  SparseMatrix adjacency;                   // symmetric, unit weights

  // Symmetrizes, deduplicates and drops self-loops from raw_edges, then
  // validates every invariant.
  static Graph build(int k, Matrix features, std::vector<int> labels,
                     std::vector<std::pair<int, int>> raw_edges);

  std::vector<int> degrees() const;  // without self-loops
};

enum class Setting { transductive, inductive };

// Node partition for one experiment. train/val/test_obs/test_ind are
// pairwise disjoint and cover [0,n). The unlabeled pool is
// test_obs ∪ test_ind; transductive splits keep test_ind empty.
struct SplitSpec {
  Setting setting = Setting::transductive;
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test_obs;
  std::vector<int> test_ind;
  double ind_ratio = 0.0;

  int coverage() const {
    return static_cast<int>(train.size() + val.size() + test_obs.size() +
                            test_ind.size());
  }
  void validate(int n) const;
  // Node ids visible during training: everything except test_ind.
  std::vector<int> observed() const;
};

struct SplitOptions {
  Setting setting = Setting::transductive;
  int train_per_class = 20;   // used when label_rate <= 0
  double label_rate = -1.0;   // fraction of nodes labeled, overrides per-class
  int val_count = 500;
  double ind_ratio = 0.0;     // |test_ind| / |unlabeled|, inductive only
};

SplitSpec make_split(const Graph& g, const SplitOptions& opt, std::uint64_t seed);

SplitSpec split_from_ids(Setting setting, int n, std::vector<int> train,
                         std::vector<int> val, std::vector<int> test,
                         double ind_ratio = 0.0, std::uint64_t seed = 0);

// GCN-style symmetric normalization with self-loops:
// A_hat = D~^{-1/2} (A + I) D~^{-1/2}.
SparseMatrix normalize_adjacency(const Graph& g);

// Row-stochastic neighbor mean D^{-1} A without self-loops; rows of isolated
// nodes are empty (zero aggregation).
SparseMatrix mean_aggregator(const Graph& g);

// Training-visible graph for the inductive setting: the induced subgraph on
// everything but test_ind, re-indexed densely.
struct Subgraph {
  Graph graph;
  std::vector<int> to_original;    // subgraph id -> original id
  std::vector<int> from_original;  // original id -> subgraph id, -1 if dropped
  SplitSpec split;                 // re-indexed; test_obs holds the old test_obs
};

Subgraph observed_subgraph(const Graph& g, const SplitSpec& s);

// Per-class / per-class-pair edge counts under ground-truth labels.
struct EdgeClassTally {
  std::vector<long> intra;               // length k
  std::vector<std::vector<long>> inter;  // k x k, symmetric, zero diagonal
  long total = 0;

  long intra_total() const;
  long inter_total() const;
};

EdgeClassTally classify_edges(const Graph& g);

}  // namespace pgkd
