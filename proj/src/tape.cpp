#include "pgkd/tape.hpp"

#include <cmath>

#include "pgkd/error.hpp"

namespace pgkd {

const Matrix& Gradients::at(NodeId leaf) const {
  auto it = grads_.find(leaf.v);
  check(it != grads_.end(), ErrorKind::contract,
        "Gradients: no entry for node ", leaf.v);
  return it->second;
}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(NodeId id) const {
  check(id.valid() && id.v < static_cast<int>(nodes_.size()), ErrorKind::contract,
        "Tape: invalid node id ", id.v);
  return nodes_[id.v];
}

const Matrix& Tape::value(NodeId id) const { return node(id).value; }

double Tape::scalar_value(NodeId id) const {
  const Matrix& v = value(id);
  check(v.rows == 1 && v.cols == 1, ErrorKind::contract,
        "scalar_value: node is ", v.rows, "x", v.cols);
  return v.data[0];
}

NodeId Tape::leaf(Matrix value, bool trainable) {
  Node n;
  n.op = OpKind::leaf;
  n.value = std::move(value);
  n.trainable = trainable;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  check(av.cols == bv.rows, ErrorKind::contract, "matmul: shape mismatch ",
        av.rows, "x", av.cols, " * ", bv.rows, "x", bv.cols);
  Node n;
  n.op = OpKind::matmul;
  n.a = a.v;
  n.b = b.v;
  n.value = pgkd::matmul(av, bv);
  return push(std::move(n));
}

NodeId Tape::sparse_matmul(std::shared_ptr<const SparseMatrix> s, NodeId x) {
  check(s != nullptr, ErrorKind::contract, "sparse_matmul: null matrix");
  const Matrix& xv = value(x);
  check(s->cols == xv.rows, ErrorKind::contract, "sparse_matmul: shape mismatch ",
        s->rows, "x", s->cols, " * ", xv.rows, "x", xv.cols);
  Node n;
  n.op = OpKind::sparse_matmul;
  n.a = x.v;
  n.value = spmm(*s, xv);
  n.sparse = s;
  n.sparse_t = std::make_shared<SparseMatrix>(s->transposed());
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  Node n;
  n.op = OpKind::add;
  n.a = a.v;
  n.b = b.v;
  if (av.same_shape(bv)) {
    n.value = av;
    for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += bv.data[i];
  } else if (bv.rows == 1 && bv.cols == av.cols) {
    n.value = av;
    for (int r = 0; r < av.rows; ++r) {
      double* row = n.value.row(r);
      for (int c = 0; c < av.cols; ++c) row[c] += bv.data[c];
    }
  } else {
    fail(ErrorKind::contract, "add: shape mismatch ", av.rows, "x", av.cols,
         " + ", bv.rows, "x", bv.cols);
  }
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.op = OpKind::scale;
  n.a = a.v;
  n.param = factor;
  n.value = value(a);
  for (double& v : n.value.data) v *= factor;
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = OpKind::relu;
  n.a = a.v;
  n.value = value(a);
  for (double& v : n.value.data)
    if (v < 0.0) v = 0.0;
  return push(std::move(n));
}

NodeId Tape::log_softmax_rows(NodeId a, double temperature) {
  check(temperature > 0.0, ErrorKind::invalid_argument,
        "log_softmax_rows: temperature must be positive, got ", temperature);
  const Matrix& av = value(a);
  check(av.cols > 0, ErrorKind::contract, "log_softmax_rows: empty rows");
  Node n;
  n.op = OpKind::log_softmax_rows;
  n.a = a.v;
  n.param = temperature;
  n.value = Matrix(av.rows, av.cols);
  for (int r = 0; r < av.rows; ++r) {
    const double* in = av.row(r);
    double* out = n.value.row(r);
    double mx = in[0] / temperature;
    for (int c = 1; c < av.cols; ++c) mx = std::max(mx, in[c] / temperature);
    double se = 0.0;
    for (int c = 0; c < av.cols; ++c) {
      out[c] = in[c] / temperature - mx;
      se += std::exp(out[c]);
    }
    const double lse = std::log(se);
    for (int c = 0; c < av.cols; ++c) out[c] -= lse;
  }
  return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> rows) {
  const Matrix& av = value(a);
  Node n;
  n.op = OpKind::gather_rows;
  n.a = a.v;
  n.value = Matrix(static_cast<int>(rows.size()), av.cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    check(rows[i] >= 0 && rows[i] < av.rows, ErrorKind::contract,
          "gather_rows: row ", rows[i], " out of range [0,", av.rows, ")");
    const double* src = av.row(rows[i]);
    double* dst = n.value.row(static_cast<int>(i));
    for (int c = 0; c < av.cols; ++c) dst[c] = src[c];
  }
  n.index = std::move(rows);
  return push(std::move(n));
}

NodeId Tape::mean_rows_by_group(NodeId a, std::vector<int> group, int k,
                                std::vector<std::uint8_t>* empty_mask,
                                std::vector<int>* counts) {
  const Matrix& av = value(a);
  check(k > 0, ErrorKind::invalid_argument, "mean_rows_by_group: k must be positive");
  check(static_cast<int>(group.size()) == av.rows, ErrorKind::contract,
        "mean_rows_by_group: group length ", group.size(), " != rows ", av.rows);
  Node n;
  n.op = OpKind::mean_rows_by_group;
  n.a = a.v;
  n.group_k = k;
  n.group_count.assign(k, 0);
  n.value = Matrix(k, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    int g = group[i];
    check(g >= 0 && g < k, ErrorKind::data, "mean_rows_by_group: class id ", g,
          " out of range [0,", k, ") at row ", i);
    n.group_count[g]++;
    const double* src = av.row(i);
    double* dst = n.value.row(g);
    for (int c = 0; c < av.cols; ++c) dst[c] += src[c];
  }
  for (int g = 0; g < k; ++g) {
    if (n.group_count[g] > 0) {
      double inv = 1.0 / n.group_count[g];
      double* dst = n.value.row(g);
      for (int c = 0; c < av.cols; ++c) dst[c] *= inv;
    }
  }
  if (empty_mask) {
    empty_mask->assign(k, 0);
    for (int g = 0; g < k; ++g) (*empty_mask)[g] = n.group_count[g] == 0 ? 1 : 0;
  }
  if (counts) *counts = n.group_count;
  n.index = std::move(group);
  return push(std::move(n));
}

NodeId Tape::elementwise_mul(NodeId a, NodeId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  check(av.same_shape(bv), ErrorKind::contract, "elementwise_mul: shape mismatch ",
        av.rows, "x", av.cols, " vs ", bv.rows, "x", bv.cols);
  Node n;
  n.op = OpKind::elementwise_mul;
  n.a = a.v;
  n.b = b.v;
  n.value = av;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= bv.data[i];
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  const Matrix& av = value(a);
  Node n;
  n.op = OpKind::sum;
  n.a = a.v;
  n.value = Matrix(1, 1);
  double s = 0.0;
  for (double v : av.data) s += v;
  n.value.data[0] = s;
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
  Node n;
  n.op = OpKind::transpose;
  n.a = a.v;
  n.value = pgkd::transpose(value(a));
  return push(std::move(n));
}

NodeId Tape::pairwise_distance(NodeId a, NodeId b, Distance metric) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  check(av.cols == bv.cols, ErrorKind::contract,
        "pairwise_distance: dim mismatch ", av.cols, " vs ", bv.cols);
  Node n;
  n.op = OpKind::pairwise_distance;
  n.a = a.v;
  n.b = b.v;
  n.metric = metric;
  n.value = Matrix(av.rows, bv.rows);
  if (metric == Distance::euclidean) {
    for (int i = 0; i < av.rows; ++i) {
      const double* x = av.row(i);
      for (int j = 0; j < bv.rows; ++j) {
        const double* y = bv.row(j);
        double s = 0.0;
        for (int c = 0; c < av.cols; ++c) {
          double d = x[c] - y[c];
          s += d * d;
        }
        n.value.at(i, j) = std::sqrt(s);
      }
    }
  } else {
    for (int i = 0; i < av.rows; ++i) {
      const double* x = av.row(i);
      double nx = 0.0;
      for (int c = 0; c < av.cols; ++c) nx += x[c] * x[c];
      nx = std::sqrt(nx);
      for (int j = 0; j < bv.rows; ++j) {
        const double* y = bv.row(j);
        double ny = 0.0, dot = 0.0;
        for (int c = 0; c < av.cols; ++c) {
          ny += y[c] * y[c];
          dot += x[c] * y[c];
        }
        ny = std::sqrt(ny);
        n.value.at(i, j) = (nx == 0.0 || ny == 0.0) ? 1.0 : 1.0 - dot / (nx * ny);
      }
    }
  }
  return push(std::move(n));
}

Gradients Tape::backward(NodeId loss) const {
  const Node& top = node(loss);
  check(top.value.rows == 1 && top.value.cols == 1, ErrorKind::contract,
        "backward: loss must be 1x1, got ", top.value.rows, "x", top.value.cols);

  std::vector<Matrix> adj(loss.v + 1);  // rows==0 means untouched
  adj[loss.v] = Matrix(1, 1);
  adj[loss.v].data[0] = 1.0;

  auto touch = [&](int id, int rows, int cols) -> Matrix& {
    if (adj[id].rows == 0) adj[id] = Matrix(rows, cols);
    return adj[id];
  };

  for (int i = loss.v; i >= 0; --i) {
    if (adj[i].rows == 0) continue;  // does not contribute to the loss
    const Node& n = nodes_[i];
    const Matrix& g = adj[i];
    switch (n.op) {
      case OpKind::leaf:
        break;
      case OpKind::matmul: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        Matrix da = matmul_nt(g, bv);
        Matrix db = matmul_tn(av, g);
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t t = 0; t < da.data.size(); ++t) aa.data[t] += da.data[t];
        Matrix& ab = touch(n.b, bv.rows, bv.cols);
        for (size_t t = 0; t < db.data.size(); ++t) ab.data[t] += db.data[t];
        break;
      }
      case OpKind::sparse_matmul: {
        const Matrix& xv = nodes_[n.a].value;
        Matrix dx = spmm(*n.sparse_t, g);
        Matrix& ax = touch(n.a, xv.rows, xv.cols);
        for (size_t t = 0; t < dx.data.size(); ++t) ax.data[t] += dx.data[t];
        break;
      }
      case OpKind::add: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t t = 0; t < g.data.size(); ++t) aa.data[t] += g.data[t];
        Matrix& ab = touch(n.b, bv.rows, bv.cols);
        if (bv.same_shape(n.value)) {
          for (size_t t = 0; t < g.data.size(); ++t) ab.data[t] += g.data[t];
        } else {  // 1 x cols broadcast: column sums
          for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row(r);
            for (int c = 0; c < g.cols; ++c) ab.data[c] += grow[c];
          }
        }
        break;
      }
      case OpKind::scale: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t t = 0; t < g.data.size(); ++t) aa.data[t] += n.param * g.data[t];
        break;
      }
      case OpKind::relu: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t t = 0; t < g.data.size(); ++t)
          if (av.data[t] > 0.0) aa.data[t] += g.data[t];
        break;
      }
      case OpKind::log_softmax_rows: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (int r = 0; r < g.rows; ++r) {
          const double* grow = g.row(r);
          const double* orow = n.value.row(r);
          double gsum = 0.0;
          for (int c = 0; c < g.cols; ++c) gsum += grow[c];
          double* arow = aa.row(r);
          for (int c = 0; c < g.cols; ++c)
            arow[c] += (grow[c] - std::exp(orow[c]) * gsum) / n.param;
        }
        break;
      }
      case OpKind::gather_rows: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t r = 0; r < n.index.size(); ++r) {
          const double* grow = g.row(static_cast<int>(r));
          double* arow = aa.row(n.index[r]);
          for (int c = 0; c < g.cols; ++c) arow[c] += grow[c];
        }
        break;
      }
      case OpKind::mean_rows_by_group: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (int r = 0; r < av.rows; ++r) {
          int grp = n.index[r];
          const double inv = 1.0 / n.group_count[grp];
          const double* grow = g.row(grp);
          double* arow = aa.row(r);
          for (int c = 0; c < g.cols; ++c) arow[c] += inv * grow[c];
        }
        break;
      }
      case OpKind::elementwise_mul: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (size_t t = 0; t < g.data.size(); ++t) aa.data[t] += g.data[t] * bv.data[t];
        Matrix& ab = touch(n.b, bv.rows, bv.cols);
        for (size_t t = 0; t < g.data.size(); ++t) ab.data[t] += g.data[t] * av.data[t];
        break;
      }
      case OpKind::sum: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        const double gv = g.data[0];
        for (double& t : aa.data) t += gv;
        break;
      }
      case OpKind::transpose: {
        const Matrix& av = nodes_[n.a].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) aa.at(c, r) += g.at(r, c);
        break;
      }
      case OpKind::pairwise_distance: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        Matrix& aa = touch(n.a, av.rows, av.cols);
        Matrix& ab = touch(n.b, bv.rows, bv.cols);
        const int h = av.cols;
        if (n.metric == Distance::euclidean) {
          for (int r = 0; r < av.rows; ++r) {
            const double* x = av.row(r);
            double* dxr = aa.row(r);
            for (int j = 0; j < bv.rows; ++j) {
              const double gd = g.at(r, j);
              if (gd == 0.0) continue;
              const double dist = n.value.at(r, j);
              if (dist == 0.0) continue;  // subgradient 0 at the cone tip
              const double* y = bv.row(j);
              double* dyr = ab.row(j);
              const double f = gd / dist;
              for (int c = 0; c < h; ++c) {
                const double diff = x[c] - y[c];
                dxr[c] += f * diff;
                dyr[c] -= f * diff;
              }
            }
          }
        } else {
          for (int r = 0; r < av.rows; ++r) {
            const double* x = av.row(r);
            double nx2 = 0.0;
            for (int c = 0; c < h; ++c) nx2 += x[c] * x[c];
            const double nx = std::sqrt(nx2);
            double* dxr = aa.row(r);
            for (int j = 0; j < bv.rows; ++j) {
              const double gd = g.at(r, j);
              if (gd == 0.0) continue;
              const double* y = bv.row(j);
              double ny2 = 0.0, dot = 0.0;
              for (int c = 0; c < h; ++c) {
                ny2 += y[c] * y[c];
                dot += x[c] * y[c];
              }
              const double ny = std::sqrt(ny2);
              if (nx == 0.0 || ny == 0.0) continue;
              const double cosv = dot / (nx * ny);
              double* dyr = ab.row(j);
              for (int c = 0; c < h; ++c) {
                // d(1-cos)/dx = -(y/(|x||y|) - cos * x/|x|^2)
                dxr[c] -= gd * (y[c] / (nx * ny) - cosv * x[c] / nx2);
                dyr[c] -= gd * (x[c] / (nx * ny) - cosv * y[c] / ny2);
              }
            }
          }
        }
        break;
      }
    }
  }

  Gradients out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].trainable) continue;
    const Matrix& v = nodes_[i].value;
    if (static_cast<int>(i) <= loss.v && adj[i].rows != 0) {
      out.set(NodeId{static_cast<int>(i)}, std::move(adj[i]));
    } else {
      out.set(NodeId{static_cast<int>(i)}, Matrix(v.rows, v.cols));
    }
  }
  return out;
}

}  // namespace pgkd
