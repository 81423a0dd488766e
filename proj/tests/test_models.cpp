#include <doctest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "pgkd/error.hpp"
#include "pgkd/graph.hpp"
#include "pgkd/models.hpp"

using namespace pgkd;

namespace {

Graph random_graph(std::mt19937& rng, int n, int d, int k, double p) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> cls(0, k - 1);
  std::vector<int> labels(n);
  for (int& c : labels) c = cls(rng);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.emplace_back(i, j);
  return Graph::build(k, oracle::random_matrix(rng, n, d), std::move(labels),
                      std::move(edges));
}

EvalOutput forward_on(const ModelParams& p, const Graph& g) {
  auto na = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
  auto ma = std::make_shared<const SparseMatrix>(mean_aggregator(g));
  return eval_forward(p, g.features, na, ma);
}

Matrix relu_copy(Matrix m) {
  for (double& v : m.data)
    if (v < 0) v = 0;
  return m;
}

}  // namespace

TEST_CASE("init_params shapes, bounds, determinism") {
  ModelParams p = init_params(ModelKind::mlp, {10, 8, 3}, 42);
  CHECK(p.tensors.size() == 4);  // w1 b1 w2 b2
  CHECK(p.param_count() == 10 * 8 + 8 + 8 * 3 + 3);
  const Matrix& w1 = p.tensor("w1");
  const double bound = 1.0 / std::sqrt(10.0);
  for (double v : w1.data) {
    CHECK(v <= bound);
    CHECK(v >= -bound);
  }
  for (double v : p.tensor("b1").data) CHECK(v == 0.0);

  ModelParams q = init_params(ModelKind::mlp, {10, 8, 3}, 42);
  CHECK(q.tensor("w1") == w1);
  ModelParams r = init_params(ModelKind::mlp, {10, 8, 3}, 43);
  CHECK(!(r.tensor("w1") == w1));
  // distinct salt bases give distinct draws under the same seed
  ModelParams s = init_params(ModelKind::mlp, {10, 8, 3}, 42, 0.1, 10, 1000);
  CHECK(!(s.tensor("w1") == w1));

  CHECK_THROWS_AS(init_params(ModelKind::mlp, {10, 3}, 0), Error);  // 1 layer
  CHECK_THROWS_AS(init_params(ModelKind::gcn, {10, 8, 8, 3}, 0), Error);
}

TEST_CASE("gcn on a zero-edge graph equals a bias-free mlp") {
  std::mt19937 rng(3);
  Matrix x = oracle::random_matrix(rng, 6, 5);
  Graph g = Graph::build(2, x, {0, 1, 0, 1, 0, 1}, {});
  ModelParams gcn = init_params(ModelKind::gcn, {5, 4, 2}, 7);
  EvalOutput out = forward_on(gcn, g);

  // A_hat = I, so logits = relu(X W1) W2
  Matrix h = relu_copy(oracle::matmul(x, gcn.tensor("w1")));
  Matrix logits = oracle::matmul(h, gcn.tensor("w2"));
  CHECK(max_abs_diff(out.logits, logits) < 1e-12);
  CHECK(max_abs_diff(out.hidden, h) < 1e-12);

  // and equals mlp_forward with the same weights and zero biases
  ModelParams mlp = init_params(ModelKind::mlp, {5, 4, 2}, 0);
  mlp.tensors[0].second = gcn.tensor("w1");
  mlp.tensors[2].second = gcn.tensor("w2");
  for (double& v : mlp.tensors[1].second.data) v = 0.0;
  for (double& v : mlp.tensors[3].second.data) v = 0.0;
  EvalOutput mout = eval_forward(mlp, x, nullptr, nullptr);
  CHECK(max_abs_diff(mout.logits, out.logits) == 0.0);
}

TEST_CASE("gcn symmetry: identical twins get identical logits") {
  Matrix x = Matrix::from_rows({{1.0, -2.0}, {1.0, -2.0}});
  Graph g = Graph::build(2, x, {0, 1}, {{0, 1}});
  ModelParams gcn = init_params(ModelKind::gcn, {2, 3, 2}, 5);
  EvalOutput out = forward_on(gcn, g);
  for (int c = 0; c < 2; ++c)
    CHECK(out.logits.at(0, c) == doctest::Approx(out.logits.at(1, c)).epsilon(1e-14));
}

TEST_CASE("gcn matches the per-node aggregation oracle") {
  std::mt19937 rng(11);
  Graph g = random_graph(rng, 8, 5, 2, 0.4);
  ModelParams p = init_params(ModelKind::gcn, {5, 4, 2}, 9);
  EvalOutput out = forward_on(p, g);

  Matrix ahat = oracle::normalize_dense(g.n, g.edges);
  Matrix h1 = relu_copy(oracle::matmul(ahat, oracle::matmul(g.features, p.tensor("w1"))));
  Matrix logits = oracle::matmul(ahat, oracle::matmul(h1, p.tensor("w2")));
  CHECK(max_abs_diff(out.logits, logits) < 1e-12);
}

TEST_CASE("sage neighbor mean cases") {
  SUBCASE("one neighbor with identical features reproduces own features") {
    Matrix x = Matrix::from_rows({{2.0, 3.0}, {2.0, 3.0}});
    Graph g = Graph::build(1, x, {0, 0}, {{0, 1}});
    Matrix m = mean_aggregator(g).dense();
    Matrix agg = oracle::matmul(m, x);
    CHECK(max_abs_diff(agg, x) == 0.0);
  }

  SUBCASE("isolated node aggregates zero") {
    std::mt19937 rng(13);
    Matrix x = oracle::random_matrix(rng, 3, 4);
    Graph g = Graph::build(1, x, {0, 0, 0}, {{0, 1}});
    ModelParams p = init_params(ModelKind::sage, {4, 3, 2}, 1);
    EvalOutput out = forward_on(p, g);
    // node 2: only the self path and bias contribute
    Matrix self = oracle::matmul(x, p.tensor("w_self1"));
    for (int c = 0; c < 3; ++c) {
      double expect = self.at(2, c) + p.tensor("b1").at(0, c);
      CHECK(out.hidden.at(2, c) == doctest::Approx(std::max(0.0, expect)).epsilon(1e-13));
    }
  }

  SUBCASE("random instance matches the neighbor-loop oracle") {
    std::mt19937 rng(17);
    Graph g = random_graph(rng, 9, 4, 2, 0.35);
    ModelParams p = init_params(ModelKind::sage, {4, 5, 2}, 3);
    EvalOutput out = forward_on(p, g);

    Matrix m = mean_aggregator(g).dense();
    auto layer = [&](const Matrix& h, int l, bool last) {
      Matrix self = oracle::matmul(h, p.tensor("w_self" + std::to_string(l)));
      Matrix neigh = oracle::matmul(oracle::matmul(m, h),
                                    p.tensor("w_neigh" + std::to_string(l)));
      const Matrix& b = p.tensor("b" + std::to_string(l));
      Matrix out2(self.rows, self.cols);
      for (int i = 0; i < self.rows; ++i)
        for (int c = 0; c < self.cols; ++c) {
          double v = self.at(i, c) + neigh.at(i, c) + b.at(0, c);
          out2.at(i, c) = last ? v : std::max(0.0, v);
        }
      return out2;
    };
    Matrix h1 = layer(g.features, 1, false);
    Matrix logits = layer(h1, 2, true);
    CHECK(max_abs_diff(out.logits, logits) < 1e-12);
    CHECK(max_abs_diff(out.hidden, h1) < 1e-12);
  }
}

TEST_CASE("appnp propagation") {
  std::mt19937 rng(19);
  Graph g = random_graph(rng, 7, 4, 2, 0.4);

  SUBCASE("teleport 1 ignores the graph") {
    ModelParams p = init_params(ModelKind::appnp, {4, 3, 2}, 2, 1.0, 10);
    EvalOutput out = forward_on(p, g);
    Matrix pre = oracle::matmul(g.features, p.tensor("w1"));
    for (int i = 0; i < pre.rows; ++i)
      for (int c = 0; c < 3; ++c) pre.at(i, c) += p.tensor("b1").at(0, c);
    Matrix hid = relu_copy(pre);
    Matrix h0 = oracle::matmul(hid, p.tensor("w2"));
    for (int i = 0; i < h0.rows; ++i)
      for (int c = 0; c < 2; ++c) h0.at(i, c) += p.tensor("b2").at(0, c);
    CHECK(max_abs_diff(out.logits, h0) < 1e-12);
  }

  SUBCASE("zero power steps ignore the graph") {
    ModelParams p = init_params(ModelKind::appnp, {4, 3, 2}, 2, 0.1, 0);
    ModelParams q = init_params(ModelKind::appnp, {4, 3, 2}, 2, 1.0, 10);
    CHECK(max_abs_diff(forward_on(p, g).logits, forward_on(q, g).logits) == 0.0);
  }

  SUBCASE("random instance matches the explicit iteration oracle") {
    ModelParams p = init_params(ModelKind::appnp, {4, 3, 2}, 6, 0.1, 10);
    EvalOutput out = forward_on(p, g);

    Matrix pre = oracle::matmul(g.features, p.tensor("w1"));
    for (int i = 0; i < pre.rows; ++i)
      for (int c = 0; c < 3; ++c) pre.at(i, c) += p.tensor("b1").at(0, c);
    Matrix hid = relu_copy(pre);
    Matrix h0 = oracle::matmul(hid, p.tensor("w2"));
    for (int i = 0; i < h0.rows; ++i)
      for (int c = 0; c < 2; ++c) h0.at(i, c) += p.tensor("b2").at(0, c);
    Matrix ahat = oracle::normalize_dense(g.n, g.edges);
    Matrix z = h0;
    for (int t = 0; t < 10; ++t) {
      Matrix az = oracle::matmul(ahat, z);
      for (size_t i = 0; i < z.data.size(); ++i)
        z.data[i] = 0.9 * az.data[i] + 0.1 * h0.data[i];
    }
    CHECK(max_abs_diff(out.logits, z) < 1e-10);
  }
}

TEST_CASE("mlp basics") {
  std::mt19937 rng(23);
  Matrix x = oracle::random_matrix(rng, 5, 4);

  SUBCASE("zero weights give zero logits") {
    ModelParams p = init_params(ModelKind::mlp, {4, 3, 2}, 0);
    for (auto& [name, m] : p.tensors)
      for (double& v : m.data) v = 0.0;
    EvalOutput out = eval_forward(p, x, nullptr, nullptr);
    for (double v : out.logits.data) CHECK(v == 0.0);
  }

  SUBCASE("three-layer forward matches a hand computation") {
    ModelParams p = init_params(ModelKind::mlp, {4, 3, 3, 2}, 8);
    EvalOutput out = eval_forward(p, x, nullptr, nullptr);
    Matrix h = x;
    for (int l = 1; l <= 2; ++l) {
      Matrix pre = oracle::matmul(h, p.tensor("w" + std::to_string(l)));
      const Matrix& b = p.tensor("b" + std::to_string(l));
      for (int i = 0; i < pre.rows; ++i)
        for (int c = 0; c < pre.cols; ++c) pre.at(i, c) += b.at(0, c);
      h = relu_copy(pre);
    }
    CHECK(max_abs_diff(out.hidden, h) < 1e-13);
  }
}

TEST_CASE("student forward never reads edges") {
  std::mt19937 rng(29);
  Graph g = random_graph(rng, 10, 4, 2, 0.4);
  ModelParams p = init_params(ModelKind::mlp, {4, 6, 2}, 4);
  EvalOutput with_edges = eval_forward(p, g.features, nullptr, nullptr);

  Graph mutated = Graph::build(2, g.features, g.labels, {});  // all edges gone
  EvalOutput without_edges = eval_forward(p, mutated.features, nullptr, nullptr);
  CHECK(with_edges.logits == without_edges.logits);
}

TEST_CASE("teacher forwards are permutation equivariant") {
  std::mt19937 rng(31);
  Graph g = random_graph(rng, 9, 4, 2, 0.4);
  std::vector<int> perm(g.n);
  for (int i = 0; i < g.n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);

  Matrix px(g.n, g.d);
  std::vector<int> plabels(g.n);
  for (int i = 0; i < g.n; ++i) {
    for (int c = 0; c < g.d; ++c) px.at(perm[i], c) = g.features.at(i, c);
    plabels[perm[i]] = g.labels[i];
  }
  std::vector<std::pair<int, int>> pedges;
  for (auto [u, v] : g.edges) pedges.emplace_back(perm[u], perm[v]);
  Graph pg = Graph::build(2, px, plabels, pedges);

  for (ModelKind kind : {ModelKind::gcn, ModelKind::sage, ModelKind::appnp}) {
    ModelParams p = init_params(kind, {4, 3, 2}, 12);
    EvalOutput a = forward_on(p, g);
    EvalOutput b = forward_on(p, pg);
    for (int i = 0; i < g.n; ++i)
      for (int c = 0; c < 2; ++c)
        CHECK(b.logits.at(perm[i], c) ==
              doctest::Approx(a.logits.at(i, c)).epsilon(1e-11));
  }
}

TEST_CASE("dropout: p=0 in train mode is bit-identical to eval mode") {
  std::mt19937 rng(37);
  Matrix x = oracle::random_matrix(rng, 6, 4);
  ModelParams p = init_params(ModelKind::mlp, {4, 5, 2}, 3);

  Tape t1;
  ForwardOptions train0;
  train0.training = true;
  train0.dropout = 0.0;
  train0.seed = 1;
  ForwardResult r1 = model_forward(t1, p, t1.constant(x), nullptr, nullptr, train0);

  Tape t2;
  ForwardOptions ev;
  ev.training = false;
  ForwardResult r2 = model_forward(t2, p, t2.constant(x), nullptr, nullptr, ev);
  CHECK(t1.value(r1.logits) == t2.value(r2.logits));
}

TEST_CASE("dropout in train mode scales and masks deterministically") {
  std::mt19937 rng(41);
  Matrix x = oracle::random_matrix(rng, 40, 4);
  ModelParams p = init_params(ModelKind::mlp, {4, 50, 2}, 3);

  auto run = [&](std::uint64_t epoch) {
    Tape t;
    ForwardOptions opt;
    opt.training = true;
    opt.dropout = 0.5;
    opt.seed = 9;
    opt.epoch = epoch;
    ForwardResult r = model_forward(t, p, t.constant(x), nullptr, nullptr, opt);
    return t.value(r.logits);
  };
  CHECK(run(0) == run(0));        // same epoch, same mask
  CHECK(!(run(0) == run(1)));     // different epochs draw different masks
}
