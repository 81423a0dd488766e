#include "pgkd/models.hpp"

#include <cmath>

#include "pgkd/error.hpp"
#include "pgkd/rng.hpp"

namespace pgkd {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gcn: return "gcn";
    case ModelKind::sage: return "sage";
    case ModelKind::appnp: return "appnp";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gcn") return ModelKind::gcn;
  if (s == "sage") return ModelKind::sage;
  if (s == "appnp") return ModelKind::appnp;
  if (s == "mlp") return ModelKind::mlp;
  fail(ErrorKind::invalid_argument, "unknown model kind '", s,
       "' (expected gcn|sage|appnp|mlp)");
}

long ModelParams::param_count() const {
  long total = 0;
  for (const auto& [name, m] : tensors) total += static_cast<long>(m.size());
  return total;
}

const Matrix& ModelParams::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return m;
  fail(ErrorKind::contract, "model has no tensor '", name, "'");
}

Checkpoint ModelParams::to_checkpoint(nlohmann::json meta) const {
  Checkpoint c;
  c.model_kind = to_string(kind);
  meta["dims"] = dims;
  if (kind == ModelKind::appnp) {
    meta["appnp_alpha"] = appnp_alpha;
    meta["appnp_power"] = appnp_power;
  }
  c.meta = std::move(meta);
  c.tensors = tensors;
  return c;
}

ModelParams ModelParams::from_checkpoint(const Checkpoint& c) {
  ModelParams p;
  p.kind = model_kind_from_string(c.model_kind);
  check(c.meta.contains("dims"), ErrorKind::data, "checkpoint lacks dims");
  p.dims = c.meta.at("dims").get<std::vector<int>>();
  if (p.kind == ModelKind::appnp) {
    p.appnp_alpha = c.meta.value("appnp_alpha", 0.1);
    p.appnp_power = c.meta.value("appnp_power", 10);
  }
  p.tensors = c.tensors;
  ModelParams fresh = init_params(p.kind, p.dims, 0, p.appnp_alpha, p.appnp_power);
  check(fresh.tensors.size() == p.tensors.size(), ErrorKind::data,
        "checkpoint tensor count mismatch for model ", c.model_kind);
  for (size_t i = 0; i < p.tensors.size(); ++i) {
    check(p.tensors[i].first == fresh.tensors[i].first &&
              p.tensors[i].second.same_shape(fresh.tensors[i].second),
          ErrorKind::data, "checkpoint tensor '", p.tensors[i].first,
          "' has unexpected name or shape");
  }
  return p;
}

ModelParams init_params(ModelKind kind, const std::vector<int>& dims,
                        std::uint64_t seed, double appnp_alpha, int appnp_power,
                        std::uint64_t salt_base) {
  check(dims.size() >= 3, ErrorKind::invalid_argument,
        "models need at least 2 layers, got dims of length ", dims.size());
  for (int d : dims)
    check(d >= 1, ErrorKind::invalid_argument, "layer dims must be positive");
  if (kind != ModelKind::mlp)
    check(dims.size() == 3, ErrorKind::invalid_argument, to_string(kind),
          " teacher is a 2-layer model, got ", dims.size() - 1, " layers");
  if (kind == ModelKind::appnp) {
    check(appnp_alpha >= 0.0 && appnp_alpha <= 1.0, ErrorKind::invalid_argument,
          "appnp teleport must lie in [0,1]");
    check(appnp_power >= 0, ErrorKind::invalid_argument,
          "appnp power must be >= 0");
  }

  ModelParams p;
  p.kind = kind;
  p.dims = dims;
  p.appnp_alpha = appnp_alpha;
  p.appnp_power = appnp_power;

  const int layers = p.layers();
  for (int l = 0; l < layers; ++l) {
    const std::string suffix = std::to_string(l + 1);
    const int in = dims[l];
    const int out = dims[l + 1];
    switch (kind) {
      case ModelKind::gcn:
        p.tensors.emplace_back("w" + suffix, Matrix(in, out));
        break;
      case ModelKind::sage:
        p.tensors.emplace_back("w_self" + suffix, Matrix(in, out));
        p.tensors.emplace_back("w_neigh" + suffix, Matrix(in, out));
        p.tensors.emplace_back("b" + suffix, Matrix(1, out));
        break;
      case ModelKind::appnp:
      case ModelKind::mlp:
        p.tensors.emplace_back("w" + suffix, Matrix(in, out));
        p.tensors.emplace_back("b" + suffix, Matrix(1, out));
        break;
    }
  }

  std::uint64_t salt = salt_base;
  for (auto& [name, m] : p.tensors) {
    rng::Counter c(seed, rng::Stream::init, salt++);
    if (name[0] == 'b') continue;  // biases start at zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.rows));
    for (size_t i = 0; i < m.data.size(); ++i)
      m.data[i] = bound * (2.0 * c.uniform(i) - 1.0);
  }
  return p;
}

namespace {

NodeId maybe_dropout(Tape& tape, NodeId h, const ForwardOptions& opt, int layer) {
  if (!opt.training || opt.dropout <= 0.0) return h;
  check(opt.dropout < 1.0, ErrorKind::invalid_argument,
        "dropout probability must be < 1, got ", opt.dropout);
  const Matrix& v = tape.value(h);
  rng::Counter c(opt.seed, rng::Stream::dropout,
                 opt.epoch * 64 + static_cast<std::uint64_t>(layer));
  Matrix mask(v.rows, v.cols);
  const double keep_scale = 1.0 / (1.0 - opt.dropout);
  for (size_t i = 0; i < mask.data.size(); ++i)
    mask.data[i] = c.uniform(i) >= opt.dropout ? keep_scale : 0.0;
  return tape.elementwise_mul(h, tape.constant(std::move(mask)));
}

struct ParamNodes {
  std::vector<NodeId> nodes;
  NodeId at(size_t i) const { return nodes[i]; }
};

ParamNodes place_params(Tape& tape, const ModelParams& p) {
  ParamNodes out;
  out.nodes.reserve(p.tensors.size());
  for (const auto& [name, m] : p.tensors) out.nodes.push_back(tape.leaf(m, true));
  return out;
}

}  // namespace

ForwardResult model_forward(Tape& tape, const ModelParams& p, NodeId x,
                            std::shared_ptr<const SparseMatrix> norm_adj,
                            std::shared_ptr<const SparseMatrix> mean_adj,
                            const ForwardOptions& opt) {
  check(tape.value(x).cols == p.dims.front(), ErrorKind::contract,
        "model_forward: input dim ", tape.value(x).cols, " != expected ",
        p.dims.front());
  ParamNodes params = place_params(tape, p);
  const int layers = p.layers();
  ForwardResult r;
  r.param_nodes = params.nodes;

  switch (p.kind) {
    case ModelKind::gcn: {
      check(norm_adj != nullptr, ErrorKind::contract, "gcn needs a normalized adjacency");
      NodeId h = x;
      for (int l = 0; l < layers; ++l) {
        h = tape.sparse_matmul(norm_adj, tape.matmul(h, params.at(l)));
        if (l < layers - 1) {
          h = tape.relu(h);
          r.hidden = h;
          h = maybe_dropout(tape, h, opt, l);
        }
      }
      r.logits = h;
      break;
    }
    case ModelKind::sage: {
      check(mean_adj != nullptr, ErrorKind::contract, "sage needs a mean aggregator");
      NodeId h = x;
      for (int l = 0; l < layers; ++l) {
        NodeId self = tape.matmul(h, params.at(3 * l));
        NodeId neigh = tape.sparse_matmul(mean_adj, tape.matmul(h, params.at(3 * l + 1)));
        h = tape.add(tape.add(self, neigh), params.at(3 * l + 2));
        if (l < layers - 1) {
          h = tape.relu(h);
          r.hidden = h;
          h = maybe_dropout(tape, h, opt, l);
        }
      }
      r.logits = h;
      break;
    }
    case ModelKind::appnp: {
      check(norm_adj != nullptr, ErrorKind::contract, "appnp needs a normalized adjacency");
      NodeId h = x;
      for (int l = 0; l < layers; ++l) {
        h = tape.add(tape.matmul(h, params.at(2 * l)), params.at(2 * l + 1));
        if (l < layers - 1) {
          h = tape.relu(h);
          r.hidden = h;
          h = maybe_dropout(tape, h, opt, l);
        }
      }
      // personalized-PageRank propagation of the MLP output
      NodeId z = h;
      for (int t = 0; t < p.appnp_power; ++t) {
        z = tape.add(tape.scale(tape.sparse_matmul(norm_adj, z), 1.0 - p.appnp_alpha),
                     tape.scale(h, p.appnp_alpha));
      }
      r.logits = z;
      break;
    }
    case ModelKind::mlp: {
      NodeId h = x;
      for (int l = 0; l < layers; ++l) {
        h = tape.add(tape.matmul(h, params.at(2 * l)), params.at(2 * l + 1));
        if (l < layers - 1) {
          h = tape.relu(h);
          r.hidden = h;
          h = maybe_dropout(tape, h, opt, l);
        }
      }
      r.logits = h;
      break;
    }
  }
  return r;
}

EvalOutput eval_forward(const ModelParams& p, const Matrix& features,
                        std::shared_ptr<const SparseMatrix> norm_adj,
                        std::shared_ptr<const SparseMatrix> mean_adj) {
  Tape tape;
  NodeId x = tape.constant(features);
  ForwardOptions opt;
  opt.training = false;
  ForwardResult r = model_forward(tape, p, x, std::move(norm_adj), std::move(mean_adj), opt);
  return EvalOutput{tape.value(r.logits), tape.value(r.hidden)};
}

}  // namespace pgkd
