#include "pgkd/graph.hpp"

#include <algorithm>
#include <cmath>

#include "pgkd/error.hpp"
#include "pgkd/rng.hpp"

namespace pgkd {

namespace {

SparseMatrix csr_from_pairs(int n, const std::vector<std::pair<int, int>>& edges) {
  // Unit-weight symmetric CSR from a u<v pair list.
  SparseMatrix m(n, n);
  std::vector<int> deg(n, 0);
  for (auto [u, v] : edges) {
    deg[u]++;
    deg[v]++;
  }
  for (int i = 0; i < n; ++i) m.row_ptr[i + 1] = m.row_ptr[i] + deg[i];
  m.col_idx.resize(edges.size() * 2);
  m.vals.assign(edges.size() * 2, 1.0);
  std::vector<int> next(m.row_ptr.begin(), m.row_ptr.end() - 1);
  for (auto [u, v] : edges) {
    m.col_idx[next[u]++] = v;
    m.col_idx[next[v]++] = u;
  }
  for (int i = 0; i < n; ++i)
    std::sort(m.col_idx.begin() + m.row_ptr[i], m.col_idx.begin() + m.row_ptr[i + 1]);
  return m;
}

}  // namespace

Graph Graph::build(int k, Matrix features, std::vector<int> labels,
                   std::vector<std::pair<int, int>> raw_edges) {
  Graph g;
  g.n = features.rows;
  g.d = features.cols;
  g.k = k;
  check(k > 0, ErrorKind::data, "graph: class count must be positive, got ", k);
  check(static_cast<int>(labels.size()) == g.n, ErrorKind::data,
        "graph: labels length ", labels.size(), " != node count ", g.n);
  for (int i = 0; i < g.n; ++i)
    check(labels[i] >= 0 && labels[i] < k, ErrorKind::data, "graph: label ",
          labels[i], " of node ", i, " out of range [0,", k, ")");
  check(all_finite(features), ErrorKind::data, "graph: non-finite feature value");

  for (auto& [u, v] : raw_edges) {
    check(u >= 0 && u < g.n && v >= 0 && v < g.n, ErrorKind::data,
          "graph: edge endpoint out of range: (", u, ",", v, ") with n=", g.n);
    if (u > v) std::swap(u, v);
  }
  std::sort(raw_edges.begin(), raw_edges.end());
  raw_edges.erase(std::unique(raw_edges.begin(), raw_edges.end()), raw_edges.end());
  // self-loops are not stored
  raw_edges.erase(std::remove_if(raw_edges.begin(), raw_edges.end(),
                                 [](const auto& e) { return e.first == e.second; }),
                  raw_edges.end());

  g.features = std::move(features);
  g.labels = std::move(labels);
  g.edges = std::move(raw_edges);
  g.adjacency = csr_from_pairs(g.n, g.edges);
  return g;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n, 0);
  for (auto [u, v] : edges) {
    deg[u]++;
    deg[v]++;
  }
  return deg;
}

void SplitSpec::validate(int n) const {
  std::vector<int> seen(n, 0);
  auto mark = [&](const std::vector<int>& ids, const char* name) {
    for (int v : ids) {
      check(v >= 0 && v < n, ErrorKind::data, "split: ", name, " id ", v,
            " out of range [0,", n, ")");
      check(seen[v] == 0, ErrorKind::data, "split: node ", v,
            " assigned to more than one set");
      seen[v] = 1;
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test_obs, "test_obs");
  mark(test_ind, "test_ind");
  check(coverage() == n, ErrorKind::data, "split: sets cover ", coverage(),
        " of ", n, " nodes");
  if (setting == Setting::transductive)
    check(test_ind.empty(), ErrorKind::data,
          "split: transductive split must have empty test_ind");
}

std::vector<int> SplitSpec::observed() const {
  std::vector<int> ids;
  ids.reserve(train.size() + val.size() + test_obs.size());
  ids.insert(ids.end(), train.begin(), train.end());
  ids.insert(ids.end(), val.begin(), val.end());
  ids.insert(ids.end(), test_obs.begin(), test_obs.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

SplitSpec make_split(const Graph& g, const SplitOptions& opt, std::uint64_t seed) {
  check(opt.ind_ratio >= 0.0 && opt.ind_ratio <= 1.0, ErrorKind::invalid_argument,
        "split: ind_ratio must lie in [0,1], got ", opt.ind_ratio);

  SplitSpec s;
  s.setting = opt.setting;
  s.ind_ratio = opt.setting == Setting::inductive ? opt.ind_ratio : 0.0;

  // Seeded shuffle; every later decision walks this order, so ties resolve
  // by position after the shuffle (ascending node id inside the shuffle).
  rng::Counter c(seed, rng::Stream::split);
  std::vector<int> order = rng::shuffled_ids(g.n, c);

  std::vector<std::uint8_t> taken(g.n, 0);
  if (opt.label_rate > 0.0) {
    check(opt.label_rate <= 1.0, ErrorKind::invalid_argument,
          "split: label_rate must lie in (0,1], got ", opt.label_rate);
    auto want = static_cast<long>(std::lround(opt.label_rate * g.n));
    check(want >= 1, ErrorKind::invalid_argument,
          "split: label_rate ", opt.label_rate, " yields an empty train set");
    for (long i = 0; i < want; ++i) {
      s.train.push_back(order[i]);
      taken[order[i]] = 1;
    }
  } else {
    check(opt.train_per_class >= 1, ErrorKind::invalid_argument,
          "split: train_per_class must be at least 1");
    std::vector<int> got(g.k, 0);
    for (int id : order) {
      if (got[g.labels[id]] < opt.train_per_class) {
        got[g.labels[id]]++;
        s.train.push_back(id);
        taken[id] = 1;
      }
    }
    check(!s.train.empty(), ErrorKind::invalid_argument, "split: empty train set");
  }

  std::vector<int> rest;
  for (int id : order)
    if (!taken[id]) rest.push_back(id);

  check(opt.val_count >= 0 && opt.val_count < static_cast<int>(rest.size()),
        ErrorKind::invalid_argument, "split: val_count ", opt.val_count,
        " leaves no test nodes (", rest.size(), " unlabeled)");
  s.val.assign(rest.begin(), rest.begin() + opt.val_count);

  std::vector<int> unlabeled(rest.begin() + opt.val_count, rest.end());
  check(!unlabeled.empty(), ErrorKind::invalid_argument,
        "split: configuration yields an empty test set");

  if (opt.setting == Setting::inductive) {
    auto want = static_cast<long>(std::lround(opt.ind_ratio * unlabeled.size()));
    s.test_ind.assign(unlabeled.begin(), unlabeled.begin() + want);
    s.test_obs.assign(unlabeled.begin() + want, unlabeled.end());
  } else {
    s.test_obs = std::move(unlabeled);
  }

  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test_obs.begin(), s.test_obs.end());
  std::sort(s.test_ind.begin(), s.test_ind.end());
  s.validate(g.n);
  return s;
}

SplitSpec split_from_ids(Setting setting, int n, std::vector<int> train,
                         std::vector<int> val, std::vector<int> test,
                         double ind_ratio, std::uint64_t seed) {
  SplitSpec s;
  s.setting = setting;
  s.train = std::move(train);
  s.val = std::move(val);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());

  // Nodes in none of the given sets join the observed unlabeled pool.
  std::vector<std::uint8_t> assigned(n, 0);
  for (int v : s.train) assigned.at(v) = 1;
  for (int v : s.val) assigned.at(v) = 1;
  for (int v : test) assigned.at(v) = 1;
  std::vector<int> pool = std::move(test);
  for (int i = 0; i < n; ++i)
    if (!assigned[i]) pool.push_back(i);

  if (setting == Setting::inductive) {
    check(ind_ratio >= 0.0 && ind_ratio <= 1.0, ErrorKind::invalid_argument,
          "split: ind_ratio must lie in [0,1], got ", ind_ratio);
    rng::Counter c(seed, rng::Stream::split, /*salt=*/1);
    std::vector<int> order = rng::shuffled_ids(static_cast<int>(pool.size()), c);
    auto want = static_cast<long>(std::lround(ind_ratio * pool.size()));
    s.ind_ratio = ind_ratio;
    for (long i = 0; i < static_cast<long>(pool.size()); ++i) {
      int id = pool[order[i]];
      (i < want ? s.test_ind : s.test_obs).push_back(id);
    }
  } else {
    s.test_obs = std::move(pool);
  }
  std::sort(s.test_obs.begin(), s.test_obs.end());
  std::sort(s.test_ind.begin(), s.test_ind.end());
  s.validate(n);
  return s;
}

SparseMatrix normalize_adjacency(const Graph& g) {
  // Degrees of A + I.
  std::vector<double> dinv(g.n);
  {
    std::vector<int> deg = g.degrees();
    for (int i = 0; i < g.n; ++i) dinv[i] = 1.0 / std::sqrt(deg[i] + 1.0);
  }
  SparseMatrix m(g.n, g.n);
  const SparseMatrix& a = g.adjacency;
  for (int i = 0; i < g.n; ++i)
    m.row_ptr[i + 1] = m.row_ptr[i] + (a.row_ptr[i + 1] - a.row_ptr[i]) + 1;
  m.col_idx.resize(m.row_ptr[g.n]);
  m.vals.resize(m.row_ptr[g.n]);
  for (int i = 0; i < g.n; ++i) {
    int pos = m.row_ptr[i];
    bool self_done = false;
    for (int kk = a.row_ptr[i]; kk < a.row_ptr[i + 1]; ++kk) {
      int j = a.col_idx[kk];
      if (!self_done && j > i) {
        m.col_idx[pos] = i;
        m.vals[pos] = dinv[i] * dinv[i];
        ++pos;
        self_done = true;
      }
      m.col_idx[pos] = j;
      m.vals[pos] = dinv[i] * dinv[j];
      ++pos;
    }
    if (!self_done) {
      m.col_idx[pos] = i;
      m.vals[pos] = dinv[i] * dinv[i];
      ++pos;
    }
  }
  return m;
}

SparseMatrix mean_aggregator(const Graph& g) {
  SparseMatrix m = g.adjacency;
  for (int i = 0; i < g.n; ++i) {
    int deg = m.row_ptr[i + 1] - m.row_ptr[i];
    if (deg == 0) continue;
    double inv = 1.0 / deg;
    for (int kk = m.row_ptr[i]; kk < m.row_ptr[i + 1]; ++kk) m.vals[kk] = inv;
  }
  return m;
}

Subgraph observed_subgraph(const Graph& g, const SplitSpec& s) {
  check(s.setting == Setting::inductive, ErrorKind::contract,
        "observed_subgraph: split is not inductive");
  s.validate(g.n);

  Subgraph sub;
  sub.from_original.assign(g.n, -1);
  std::vector<int> keep = s.observed();
  sub.to_original = keep;
  for (size_t i = 0; i < keep.size(); ++i)
    sub.from_original[keep[i]] = static_cast<int>(i);

  Matrix features(static_cast<int>(keep.size()), g.d);
  std::vector<int> labels(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) {
    const double* src = g.features.row(keep[i]);
    double* dst = features.row(static_cast<int>(i));
    for (int c = 0; c < g.d; ++c) dst[c] = src[c];
    labels[i] = g.labels[keep[i]];
  }
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges) {
    int su = sub.from_original[u];
    int sv = sub.from_original[v];
    if (su >= 0 && sv >= 0) edges.emplace_back(su, sv);
  }
  sub.graph = Graph::build(g.k, std::move(features), std::move(labels), std::move(edges));

  auto remap = [&](const std::vector<int>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int v : ids) out.push_back(sub.from_original[v]);
    std::sort(out.begin(), out.end());
    return out;
  };
  sub.split.setting = Setting::inductive;
  sub.split.ind_ratio = s.ind_ratio;
  sub.split.train = remap(s.train);
  sub.split.val = remap(s.val);
  sub.split.test_obs = remap(s.test_obs);
  sub.split.validate(sub.graph.n);
  return sub;
}

long EdgeClassTally::intra_total() const {
  long t = 0;
  for (long v : intra) t += v;
  return t;
}

long EdgeClassTally::inter_total() const {
  long t = 0;
  for (size_t i = 0; i < inter.size(); ++i)
    for (size_t j = i + 1; j < inter.size(); ++j) t += inter[i][j];
  return t;
}

EdgeClassTally classify_edges(const Graph& g) {
  EdgeClassTally t;
  t.intra.assign(g.k, 0);
  t.inter.assign(g.k, std::vector<long>(g.k, 0));
  for (auto [u, v] : g.edges) {
    int cu = g.labels[u];
    int cv = g.labels[v];
    if (cu == cv) {
      t.intra[cu]++;
    } else {
      t.inter[cu][cv]++;
      t.inter[cv][cu]++;
    }
  }
  t.total = static_cast<long>(g.edges.size());
  return t;
}

}  // namespace pgkd
