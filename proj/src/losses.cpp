#include "pgkd/losses.hpp"

#include <cmath>

#include "pgkd/error.hpp"

namespace pgkd {

namespace {

constexpr double kMaskedOut = -1e30;

Matrix softmax_rows_plain(const Matrix& in, double tau, int sign, bool mask_diag) {
  Matrix out(in.rows, in.cols);
  for (int r = 0; r < in.rows; ++r) {
    const double* x = in.row(r);
    double* y = out.row(r);
    double mx = -HUGE_VAL;
    for (int c = 0; c < in.cols; ++c) {
      y[c] = (mask_diag && c == r) ? kMaskedOut : sign * x[c] / tau;
      mx = std::max(mx, y[c]);
    }
    double se = 0.0;
    for (int c = 0; c < in.cols; ++c) {
      y[c] = std::exp(y[c] - mx);
      se += y[c];
    }
    for (int c = 0; c < in.cols; ++c) y[c] /= se;
  }
  return out;
}

double sum_p_log_p(const Matrix& p) {
  double s = 0.0;
  for (double v : p.data)
    if (v > 0.0) s += v * std::log(v);
  return s;
}

Matrix pairwise_plain(const Matrix& a, const Matrix& b, Distance metric) {
  Matrix out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* x = a.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* y = b.row(j);
      if (metric == Distance::euclidean) {
        double s = 0.0;
        for (int c = 0; c < a.cols; ++c) {
          double d = x[c] - y[c];
          s += d * d;
        }
        out.at(i, j) = std::sqrt(s);
      } else {
        double nx = 0.0, ny = 0.0, dot = 0.0;
        for (int c = 0; c < a.cols; ++c) {
          nx += x[c] * x[c];
          ny += y[c] * y[c];
          dot += x[c] * y[c];
        }
        out.at(i, j) = (nx == 0.0 || ny == 0.0)
                           ? 1.0
                           : 1.0 - dot / (std::sqrt(nx) * std::sqrt(ny));
      }
    }
  }
  return out;
}

NodeId scalar_constant(Tape& tape, double v) {
  Matrix m(1, 1);
  m.data[0] = v;
  return tape.constant(std::move(m));
}

}  // namespace

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows);
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    int best = 0;
    for (int c = 1; c < m.cols; ++c)
      if (row[c] > row[best]) best = c;  // ties keep the lowest class id
    out[r] = best;
  }
  return out;
}

LabelAssignment assign_labels(Setting setting, const SplitSpec& split,
                              const Matrix* teacher_logits,
                              const std::vector<int>& ground_truth,
                              ProtoScope proto_scope) {
  const int n = static_cast<int>(ground_truth.size());
  LabelAssignment a;
  a.labels.assign(n, -1);

  if (setting == Setting::inductive) {
    a.provenance = Provenance::ground_truth_train;
    a.scope = split.train;
    for (int v : split.train) a.labels[v] = ground_truth[v];
    return a;
  }

  check(teacher_logits != nullptr, ErrorKind::contract,
        "assign_labels: transductive mode needs teacher logits");
  check(teacher_logits->rows == n, ErrorKind::contract,
        "assign_labels: teacher logits rows ", teacher_logits->rows,
        " != node count ", n);
  a.provenance = Provenance::teacher_predicted;
  std::vector<int> predicted = argmax_rows(*teacher_logits);
  std::vector<std::uint8_t> in_train(n, 0);
  for (int v : split.train) in_train[v] = 1;
  for (int v = 0; v < n; ++v)
    a.labels[v] = in_train[v] ? ground_truth[v] : predicted[v];

  a.scope = split.train;
  a.scope.insert(a.scope.end(), split.val.begin(), split.val.end());
  if (proto_scope == ProtoScope::visible)
    a.scope.insert(a.scope.end(), split.test_obs.begin(), split.test_obs.end());
  std::sort(a.scope.begin(), a.scope.end());
  return a;
}

PrototypeSet compute_prototypes(Tape& tape, NodeId h, const LabelAssignment& assign,
                                int k) {
  check(!assign.scope.empty(), ErrorKind::invalid_argument,
        "compute_prototypes: empty scope");
  PrototypeSet p;
  p.scoped_h = tape.gather_rows(h, assign.scope);
  p.group.reserve(assign.scope.size());
  for (int v : assign.scope) {
    check(assign.labels[v] >= 0, ErrorKind::contract,
          "compute_prototypes: node ", v, " in scope has no assigned label");
    p.group.push_back(assign.labels[v]);
  }
  p.prototypes =
      tape.mean_rows_by_group(p.scoped_h, p.group, k, &p.empty_mask, &p.counts);
  int nonempty = 0;
  for (int c : p.counts)
    if (c > 0) nonempty++;
  check(nonempty > 0, ErrorKind::invalid_argument,
        "compute_prototypes: all classes empty");
  return p;
}

FrozenPrototypes compute_frozen_prototypes(const Matrix& h,
                                           const LabelAssignment& assign, int k) {
  check(!assign.scope.empty(), ErrorKind::invalid_argument,
        "compute_frozen_prototypes: empty scope");
  FrozenPrototypes f;
  f.prototypes = Matrix(k, h.cols);
  f.counts.assign(k, 0);
  for (int v : assign.scope) {
    int c = assign.labels[v];
    check(c >= 0 && c < k, ErrorKind::data,
          "compute_frozen_prototypes: bad class id ", c, " for node ", v);
    f.counts[c]++;
    const double* src = h.row(v);
    double* dst = f.prototypes.row(c);
    for (int j = 0; j < h.cols; ++j) dst[j] += src[j];
  }
  f.empty_mask.assign(k, 0);
  for (int c = 0; c < k; ++c) {
    if (f.counts[c] == 0) {
      f.empty_mask[c] = 1;
      continue;
    }
    double inv = 1.0 / f.counts[c];
    double* dst = f.prototypes.row(c);
    for (int j = 0; j < h.cols; ++j) dst[j] *= inv;
  }
  return f;
}

NodeId intra_loss(Tape& tape, const PrototypeSet& protos, double tau1,
                  Distance metric) {
  check(tau1 > 0.0, ErrorKind::invalid_argument,
        "intra_loss: tau1 must be positive, got ", tau1);
  const int k = static_cast<int>(protos.counts.size());
  const int n = static_cast<int>(protos.group.size());

  NodeId dist = tape.pairwise_distance(protos.scoped_h, protos.prototypes, metric);
  NodeId logits = tape.scale(dist, -1.0);

  bool any_empty = false;
  for (std::uint8_t e : protos.empty_mask) any_empty |= e != 0;
  if (any_empty) {
    Matrix mask(1, k);
    for (int c = 0; c < k; ++c) mask.data[c] = protos.empty_mask[c] ? kMaskedOut : 0.0;
    logits = tape.add(logits, tape.constant(std::move(mask)));
  }
  NodeId log_probs = tape.log_softmax_rows(logits, tau1);

  // Nodes whose class has no prototype are skipped.
  Matrix pick(n, k);
  int used = 0;
  for (int i = 0; i < n; ++i) {
    if (protos.empty_mask[protos.group[i]]) continue;
    pick.at(i, protos.group[i]) = 1.0;
    ++used;
  }
  check(used > 0, ErrorKind::invalid_argument,
        "intra_loss: no scoped node has a non-empty class");
  NodeId picked = tape.elementwise_mul(log_probs, tape.constant(std::move(pick)));
  return tape.scale(tape.sum(picked), -1.0 / used);
}

InterLossResult inter_loss(Tape& tape, const PrototypeSet& student,
                           const FrozenPrototypes& teacher, double tau2,
                           Distance metric, int sign, bool mask_self_distance) {
  check(tau2 > 0.0, ErrorKind::invalid_argument,
        "inter_loss: tau2 must be positive, got ", tau2);
  check(sign == 1 || sign == -1, ErrorKind::invalid_argument,
        "inter_loss: sign must be +1 or -1");
  const int k = static_cast<int>(student.counts.size());
  check(static_cast<int>(teacher.counts.size()) == k, ErrorKind::contract,
        "inter_loss: prototype class counts differ");

  std::vector<int> usable;
  for (int c = 0; c < k; ++c)
    if (!student.empty_mask[c] && !teacher.empty_mask[c]) usable.push_back(c);

  InterLossResult r;
  if (usable.size() < 2) {
    r.node = scalar_constant(tape, 0.0);
    r.degenerate = true;
    return r;
  }
  const int ku = static_cast<int>(usable.size());

  // Teacher side: frozen distance rows softened the same way.
  Matrix pt_rows(ku, teacher.prototypes.cols);
  for (int i = 0; i < ku; ++i) {
    const double* src = teacher.prototypes.row(usable[i]);
    double* dst = pt_rows.row(i);
    for (int j = 0; j < teacher.prototypes.cols; ++j) dst[j] = src[j];
  }
  Matrix dt = pairwise_plain(pt_rows, pt_rows, metric);
  Matrix pt = softmax_rows_plain(dt, tau2, sign, mask_self_distance);
  const double teacher_entropy = sum_p_log_p(pt);

  NodeId ps_rows = tape.gather_rows(student.prototypes, usable);
  NodeId ds = tape.pairwise_distance(ps_rows, ps_rows, metric);
  NodeId arg = tape.scale(ds, static_cast<double>(sign));
  if (mask_self_distance) {
    Matrix diag(ku, ku);
    for (int i = 0; i < ku; ++i) diag.at(i, i) = kMaskedOut;
    arg = tape.add(arg, tape.constant(std::move(diag)));
  }
  NodeId log_ps = tape.log_softmax_rows(arg, tau2);

  NodeId cross = tape.sum(tape.elementwise_mul(log_ps, tape.constant(std::move(pt))));
  NodeId kl = tape.add(tape.scale(cross, -1.0), scalar_constant(tape, teacher_entropy));
  r.node = tape.scale(kl, 1.0 / ku);
  return r;
}

NodeId kd_loss(Tape& tape, NodeId student_logits, const Matrix& teacher_logits,
               const std::vector<int>& scope, double tau_kd) {
  check(tau_kd > 0.0, ErrorKind::invalid_argument,
        "kd_loss: tau_kd must be positive, got ", tau_kd);
  check(!scope.empty(), ErrorKind::invalid_argument, "kd_loss: empty scope");
  const int n = static_cast<int>(scope.size());
  const int k = teacher_logits.cols;

  Matrix zt(n, k);
  for (int i = 0; i < n; ++i) {
    const double* src = teacher_logits.row(scope[i]);
    double* dst = zt.row(i);
    for (int c = 0; c < k; ++c) dst[c] = src[c];
  }
  Matrix pt = softmax_rows_plain(zt, tau_kd, +1, false);
  const double teacher_entropy = sum_p_log_p(pt);

  NodeId zs = tape.gather_rows(student_logits, scope);
  NodeId log_ps = tape.log_softmax_rows(zs, tau_kd);
  NodeId cross = tape.sum(tape.elementwise_mul(log_ps, tape.constant(std::move(pt))));
  NodeId kl_total = tape.add(tape.scale(cross, -1.0),
                             scalar_constant(tape, teacher_entropy));
  return tape.scale(kl_total, tau_kd * tau_kd / n);
}

NodeId label_loss(Tape& tape, NodeId student_logits,
                  const std::vector<int>& ground_truth,
                  const std::vector<int>& train_ids) {
  check(!train_ids.empty(), ErrorKind::invalid_argument,
        "label_loss: empty training set");
  const int n = static_cast<int>(train_ids.size());
  const int k = tape.value(student_logits).cols;

  NodeId zs = tape.gather_rows(student_logits, train_ids);
  NodeId log_ps = tape.log_softmax_rows(zs, 1.0);
  Matrix onehot(n, k);
  for (int i = 0; i < n; ++i) {
    int c = ground_truth[train_ids[i]];
    check(c >= 0 && c < k, ErrorKind::data, "label_loss: bad label ", c,
          " for node ", train_ids[i]);
    onehot.at(i, c) = 1.0;
  }
  NodeId picked = tape.elementwise_mul(log_ps, tape.constant(std::move(onehot)));
  return tape.scale(tape.sum(picked), -1.0 / n);
}

TotalLoss total_loss(Tape& tape, NodeId label, NodeId kd,
                     std::optional<NodeId> intra,
                     std::optional<InterLossResult> inter, double lambda1,
                     double lambda2, double tau1, double tau2, double tau_kd) {
  check(lambda1 >= 0.0 && lambda2 >= 0.0, ErrorKind::invalid_argument,
        "total_loss: lambda weights must be >= 0");
  TotalLoss t;
  t.breakdown.lambda1 = lambda1;
  t.breakdown.lambda2 = lambda2;
  t.breakdown.tau1 = tau1;
  t.breakdown.tau2 = tau2;
  t.breakdown.tau_kd = tau_kd;
  t.breakdown.label = tape.scalar_value(label);
  t.breakdown.kd = tape.scalar_value(kd);

  NodeId node = tape.add(label, kd);
  if (lambda1 > 0.0) {
    check(intra.has_value(), ErrorKind::contract,
          "total_loss: lambda1 > 0 but no intra term");
    t.breakdown.intra = tape.scalar_value(*intra);
    node = tape.add(node, tape.scale(*intra, lambda1));
  }
  if (lambda2 > 0.0) {
    check(inter.has_value(), ErrorKind::contract,
          "total_loss: lambda2 > 0 but no inter term");
    t.breakdown.inter = tape.scalar_value(inter->node);
    t.breakdown.inter_degenerate = inter->degenerate;
    node = tape.add(node, tape.scale(inter->node, lambda2));
  }
  t.node = node;
  t.breakdown.total = tape.scalar_value(node);
  return t;
}

}  // namespace pgkd
