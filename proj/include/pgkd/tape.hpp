#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "pgkd/matrix.hpp"

namespace pgkd {

enum class OpKind {
  leaf,
  matmul,
  add,
  scale,
  relu,
  log_softmax_rows,
  gather_rows,
  mean_rows_by_group,
  elementwise_mul,
  sum,
  transpose,
  sparse_matmul,
  pairwise_distance,
};

enum class Distance { euclidean, cosine };

struct NodeId {
  int v = -1;
  bool valid() const { return v >= 0; }
  bool operator==(const NodeId&) const = default;
};

// Result of a backward pass: one gradient matrix per trainable leaf,
// keyed by the leaf's node id. Leaves unreachable from the loss get zeros.
class Gradients {
 public:
  const Matrix& at(NodeId leaf) const;
  bool contains(NodeId leaf) const { return grads_.count(leaf.v) > 0; }
  void set(NodeId leaf, Matrix g) { grads_[leaf.v] = std::move(g); }
  size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<int, Matrix> grads_;
};

// Append-only record of one forward pass over dense matrices, with reverse-mode
// differentiation over a fixed set of operations. A tape is confined to one
// thread; node values are immutable once recorded.
class Tape {
 public:
  NodeId leaf(Matrix value, bool trainable = false);
  NodeId constant(Matrix value) { return leaf(std::move(value), false); }

  NodeId matmul(NodeId a, NodeId b);
  // s is captured by pointer and treated as a constant; only x receives
  // gradients. The caller keeps s alive for the tape's lifetime.
  NodeId sparse_matmul(std::shared_ptr<const SparseMatrix> s, NodeId x);
  // Same shape, or b a 1 x cols row vector broadcast over the rows of a.
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId relu(NodeId a);
  // Row-wise log-softmax of value/temperature; rows of the output
  // exponentiate to a distribution. Max-subtraction keeps it stable.
  NodeId log_softmax_rows(NodeId a, double temperature);
  NodeId gather_rows(NodeId a, std::vector<int> rows);
  // Output is k x cols; row c is the mean of input rows with group==c.
  // Rows of empty groups are zero; the mask reports them.
  NodeId mean_rows_by_group(NodeId a, std::vector<int> group, int k,
                            std::vector<std::uint8_t>* empty_mask = nullptr,
                            std::vector<int>* counts = nullptr);
  NodeId elementwise_mul(NodeId a, NodeId b);
  NodeId sum(NodeId a);  // 1x1 total of all entries
  NodeId transpose(NodeId a);
  // out(i,j) = distance between row i of a and row j of b.
  NodeId pairwise_distance(NodeId a, NodeId b, Distance metric = Distance::euclidean);

  // Invalidated by the next recorded op; copy before recording more.
  const Matrix& value(NodeId id) const;
  double scalar_value(NodeId id) const;

  // Gradients of a scalar loss with respect to every trainable leaf.
  Gradients backward(NodeId loss) const;

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op = OpKind::leaf;
    Matrix value;
    int a = -1;
    int b = -1;
    double param = 0.0;  // scale factor or softmax temperature
    std::vector<int> index;  // gather rows / group assignment
    int group_k = 0;
    std::vector<int> group_count;
    Distance metric = Distance::euclidean;
    std::shared_ptr<const SparseMatrix> sparse;
    std::shared_ptr<const SparseMatrix> sparse_t;
    bool trainable = false;
  };

  NodeId push(Node n);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

}  // namespace pgkd
