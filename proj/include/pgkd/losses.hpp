#pragma once

#include <optional>
#include <vector>

#include "pgkd/graph.hpp"
#include "pgkd/matrix.hpp"
#include "pgkd/tape.hpp"

namespace pgkd {

enum class Provenance { ground_truth_train, teacher_predicted };

// Which nodes contribute prototypes in the transductive setting.
enum class ProtoScope { visible, train_val };

// Per-node class assignment used for prototype construction. Ground-truth
// labels of val/test nodes never enter here; outside the training set the
// transductive assignment comes from teacher predictions.
struct LabelAssignment {
  std::vector<int> labels;  // full-length; -1 outside the scope
  Provenance provenance = Provenance::ground_truth_train;
  std::vector<int> scope;   // node ids whose representations form prototypes
};

LabelAssignment assign_labels(Setting setting, const SplitSpec& split,
                              const Matrix* teacher_logits,
                              const std::vector<int>& ground_truth,
                              ProtoScope proto_scope = ProtoScope::visible);

// Student prototypes live on the tape so gradients flow into both the node
// representations and the prototypes themselves.
struct PrototypeSet {
  NodeId prototypes;             // k x h
  NodeId scoped_h;               // |scope| x h, rows in scope order
  std::vector<int> group;        // class id per scoped row
  std::vector<int> counts;       // length k
  std::vector<std::uint8_t> empty_mask;
};

PrototypeSet compute_prototypes(Tape& tape, NodeId h, const LabelAssignment& assign,
                                int k);

// Teacher prototypes: computed once from frozen hidden states.
struct FrozenPrototypes {
  Matrix prototypes;
  std::vector<int> counts;
  std::vector<std::uint8_t> empty_mask;
};

FrozenPrototypes compute_frozen_prototypes(const Matrix& h,
                                           const LabelAssignment& assign, int k);

// Cross-entropy of softmax(-distances/tau1) against each scoped node's own
// class; mean over scoped nodes. Empty classes are dropped from the softmax.
NodeId intra_loss(Tape& tape, const PrototypeSet& protos, double tau1,
                  Distance metric = Distance::euclidean);

struct InterLossResult {
  NodeId node;
  bool degenerate = false;  // fewer than 2 mutually non-empty classes
};

// KL(teacher row || student row) between softened prototype-distance rows,
// mean over mutually non-empty classes. sign=+1 softens +d/tau2, sign=-1
// flips the argument. Gradients reach only the student prototypes.
InterLossResult inter_loss(Tape& tape, const PrototypeSet& student,
                           const FrozenPrototypes& teacher, double tau2,
                           Distance metric = Distance::euclidean, int sign = +1,
                           bool mask_self_distance = false);

// tau^2 * mean_i KL(softmax(z_t/tau) || softmax(z_s/tau)) over scope rows.
NodeId kd_loss(Tape& tape, NodeId student_logits, const Matrix& teacher_logits,
               const std::vector<int>& scope, double tau_kd);

// Mean cross-entropy over the training nodes.
NodeId label_loss(Tape& tape, NodeId student_logits,
                  const std::vector<int>& ground_truth,
                  const std::vector<int>& train_ids);

struct LossBreakdown {
  double label = 0.0;
  double kd = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double tau1 = 1.0, tau2 = 10.0, tau_kd = 1.0;
  bool inter_degenerate = false;
};

struct TotalLoss {
  NodeId node;
  LossBreakdown breakdown;
};

// label + kd + lambda1*intra + lambda2*inter. Zero lambdas contribute no
// tape nodes at all, so the objective collapses to label + kd exactly.
TotalLoss total_loss(Tape& tape, NodeId label, NodeId kd,
                     std::optional<NodeId> intra,
                     std::optional<InterLossResult> inter, double lambda1,
                     double lambda2, double tau1, double tau2, double tau_kd);

std::vector<int> argmax_rows(const Matrix& m);

}  // namespace pgkd
