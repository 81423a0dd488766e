#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pgkd/checkpoint.hpp"
#include "pgkd/matrix.hpp"
#include "pgkd/tape.hpp"

namespace pgkd {

enum class ModelKind { gcn, sage, appnp, mlp };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Ordered named weight tensors plus the layer dimension chain.
struct ModelParams {
  ModelKind kind = ModelKind::mlp;
  std::vector<int> dims;  // [in, hidden..., out]; at least two layers
  double appnp_alpha = 0.1;
  int appnp_power = 10;
  std::vector<std::pair<std::string, Matrix>> tensors;

  int layers() const { return static_cast<int>(dims.size()) - 1; }
  long param_count() const;
  const Matrix& tensor(const std::string& name) const;

  Checkpoint to_checkpoint(nlohmann::json meta = {}) const;
  static ModelParams from_checkpoint(const Checkpoint& c);
};

// Fan-in-scaled uniform init, fully determined by (seed, salt_base, tensor
// order). Distinct salt bases decorrelate models trained under one seed.
ModelParams init_params(ModelKind kind, const std::vector<int>& dims,
                        std::uint64_t seed, double appnp_alpha = 0.1,
                        int appnp_power = 10, std::uint64_t salt_base = 0);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.5;
  std::uint64_t seed = 0;   // dropout stream key
  std::uint64_t epoch = 0;  // dropout stream salt per epoch
};

struct ForwardResult {
  NodeId logits;
  NodeId hidden;                    // penultimate activation (pre-dropout)
  std::vector<NodeId> param_nodes;  // trainable leaves, same order as tensors
};

// Records the model's forward pass on the tape. norm_adj feeds gcn/appnp,
// mean_adj feeds sage, the mlp touches neither.
ForwardResult model_forward(Tape& tape, const ModelParams& p, NodeId x,
                            std::shared_ptr<const SparseMatrix> norm_adj,
                            std::shared_ptr<const SparseMatrix> mean_adj,
                            const ForwardOptions& opt);

// Convenience eval-mode forward returning plain matrices.
struct EvalOutput {
  Matrix logits;
  Matrix hidden;
};
EvalOutput eval_forward(const ModelParams& p, const Matrix& features,
                        std::shared_ptr<const SparseMatrix> norm_adj,
                        std::shared_ptr<const SparseMatrix> mean_adj);

}  // namespace pgkd
