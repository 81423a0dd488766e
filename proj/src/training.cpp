#include "pgkd/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pgkd/error.hpp"

namespace pgkd {

void DistillConfig::validate() const {
  check(lambda1 >= 0.0 && lambda2 >= 0.0, ErrorKind::invalid_argument,
        "distill: lambda weights must be >= 0");
  check(tau1 > 0.0 && tau2 > 0.0 && tau_kd > 0.0, ErrorKind::invalid_argument,
        "distill: temperatures must be positive");
  check(inter_sign == 1 || inter_sign == -1, ErrorKind::invalid_argument,
        "distill: inter_sign must be +1 or -1");
}

void Adam::step(std::vector<std::pair<std::string, Matrix>>& tensors,
                const std::vector<const Matrix*>& grads) {
  check(tensors.size() == grads.size(), ErrorKind::contract,
        "adam: gradient count mismatch");
  if (m_.empty()) {
    for (const auto& [name, p] : tensors) {
      m_.emplace_back(p.rows, p.cols);
      v_.emplace_back(p.rows, p.cols);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (size_t i = 0; i < tensors.size(); ++i) {
    Matrix& p = tensors[i].second;
    const Matrix& g = *grads[i];
    check(p.same_shape(g), ErrorKind::contract, "adam: gradient shape mismatch for ",
          tensors[i].first);
    for (size_t j = 0; j < p.data.size(); ++j) {
      const double grad = g.data[j] + weight_decay * p.data[j];
      m_[i].data[j] = beta1 * m_[i].data[j] + (1.0 - beta1) * grad;
      v_[i].data[j] = beta2 * v_[i].data[j] + (1.0 - beta2) * grad * grad;
      const double mhat = m_[i].data[j] / bc1;
      const double vhat = v_[i].data[j] / bc2;
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

constexpr std::uint64_t kStudentInitSalt = 1000;

double accuracy_on(const Matrix& logits, const std::vector<int>& labels,
                   const std::vector<int>& ids) {
  check(!ids.empty(), ErrorKind::contract, "accuracy: empty node set");
  std::vector<int> pred = argmax_rows(logits);
  long hit = 0;
  for (int v : ids)
    if (pred[v] == labels[v]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

// Rows of g.features for the given original ids, in their given order.
Matrix gather_features(const Graph& g, const std::vector<int>& ids) {
  Matrix out(static_cast<int>(ids.size()), g.d);
  for (size_t i = 0; i < ids.size(); ++i) {
    const double* src = g.features.row(ids[i]);
    double* dst = out.row(static_cast<int>(i));
    for (int c = 0; c < g.d; ++c) dst[c] = src[c];
  }
  return out;
}

// Patience counts evaluations without strict improvement; on a plateau the
// snapshot still advances to the latest epoch matching the best, so ties in
// a small quantized val set do not freeze an undertrained model.
struct EarlyStopper {
  int patience;
  double best_val = -1.0;
  int best_epoch = -1;
  int since = 0;

  // Returns true when training should stop; check snapshot() first.
  bool observe(int epoch, double val_acc) {
    if (val_acc >= best_val) best_epoch = epoch;
    if (val_acc > best_val) {
      best_val = val_acc;
      since = 0;
      return false;
    }
    ++since;
    return since > patience;
  }

  bool snapshot(double val_acc) const { return val_acc >= best_val; }
};

std::vector<const Matrix*> grads_in_order(const Gradients& grads,
                                          const std::vector<NodeId>& param_nodes) {
  std::vector<const Matrix*> out;
  out.reserve(param_nodes.size());
  for (NodeId id : param_nodes) out.push_back(&grads.at(id));
  return out;
}

}  // namespace

TrainedModel train_teacher(const Graph& g, const SplitSpec& split,
                           const TeacherConfig& cfg, std::uint64_t seed) {
  split.validate(g.n);
  const auto t0 = std::chrono::steady_clock::now();

  // Training world: the full graph transductively, the observed subgraph
  // inductively.
  const bool inductive = split.setting == Setting::inductive;
  Graph train_graph;
  SplitSpec train_split;
  std::vector<int> to_original(g.n);
  if (inductive) {
    Subgraph sub = observed_subgraph(g, split);
    train_graph = std::move(sub.graph);
    train_split = std::move(sub.split);
    to_original = std::move(sub.to_original);
  } else {
    train_graph = g;
    train_split = split;
    for (int i = 0; i < g.n; ++i) to_original[i] = i;
  }

  auto norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(train_graph));
  auto mean_adj = std::make_shared<const SparseMatrix>(mean_aggregator(train_graph));

  ModelParams params =
      init_params(cfg.kind, {train_graph.d, cfg.hidden, train_graph.k}, seed,
                  cfg.appnp_alpha, cfg.appnp_power);
  Adam adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  TrainedModel out;
  out.record.seed = seed;
  EarlyStopper stopper{cfg.patience};
  ModelParams best = params;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Tape tape;
    NodeId x = tape.constant(train_graph.features);
    ForwardOptions opt;
    opt.training = true;
    opt.dropout = cfg.dropout;
    opt.seed = seed;
    opt.epoch = static_cast<std::uint64_t>(epoch);
    ForwardResult fr = model_forward(tape, params, x, norm_adj, mean_adj, opt);
    NodeId loss = label_loss(tape, fr.logits, train_graph.labels, train_split.train);

    const double loss_value = tape.scalar_value(loss);
    check(std::isfinite(loss_value), ErrorKind::runtime,
          "teacher training diverged: non-finite loss at epoch ", epoch,
          " (seed ", seed, ", model ", to_string(cfg.kind), ")");

    Gradients grads = tape.backward(loss);
    adam.step(params.tensors, grads_in_order(grads, fr.param_nodes));

    if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs - 1) {
      EvalOutput eval = eval_forward(params, train_graph.features, norm_adj, mean_adj);
      EpochRecord rec;
      rec.epoch = epoch;
      rec.loss.label = loss_value;
      rec.loss.total = loss_value;
      rec.train_acc = accuracy_on(eval.logits, train_graph.labels, train_split.train);
      rec.val_acc = accuracy_on(eval.logits, train_graph.labels, train_split.val);
      out.record.epochs.push_back(rec);

      const bool improved = stopper.snapshot(rec.val_acc);
      const bool stop = stopper.observe(epoch, rec.val_acc);
      if (improved) best = params;
      out.record.stopped_epoch = epoch;
      if (stop) break;
    }
  }

  out.params = std::move(best);
  out.record.best_epoch = stopper.best_epoch;
  out.record.best_val_acc = stopper.best_val;
  out.record.test_acc = evaluate(out.params, g, split, EvalSet::test);
  out.record.touched_feature_rows = to_original;
  out.record.wall_ms = static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return out;
}

TeacherSignals compute_teacher_signals(const Graph& g, const SplitSpec& split,
                                       const ModelParams& teacher) {
  split.validate(g.n);
  const Graph* world = &g;
  Graph sub_storage;
  if (split.setting == Setting::inductive) {
    Subgraph sub = observed_subgraph(g, split);
    sub_storage = std::move(sub.graph);
    world = &sub_storage;
  }
  auto norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(*world));
  auto mean_adj = std::make_shared<const SparseMatrix>(mean_aggregator(*world));
  EvalOutput eval = eval_forward(teacher, world->features, norm_adj, mean_adj);
  return TeacherSignals{std::move(eval.logits), std::move(eval.hidden)};
}

TrainedModel distill_student(const Graph& g, const SplitSpec& split,
                             const TeacherSignals& signals,
                             const StudentConfig& cfg, const DistillConfig& dcfg,
                             StudentMode mode, std::uint64_t seed) {
  split.validate(g.n);
  dcfg.validate();
  check(cfg.layers >= 2, ErrorKind::invalid_argument,
        "student: at least 2 layers required, got ", cfg.layers);
  const auto t0 = std::chrono::steady_clock::now();

  // Training world: feature rows and labels of the training-visible nodes.
  // No edges are consulted anywhere on this path.
  const bool inductive = split.setting == Setting::inductive;
  std::vector<int> visible = inductive ? split.observed() : std::vector<int>();
  if (!inductive) {
    visible.resize(g.n);
    for (int i = 0; i < g.n; ++i) visible[i] = i;
  }
  Matrix x_train = gather_features(g, visible);
  std::vector<int> labels(visible.size());
  std::vector<int> from_original(g.n, -1);
  for (size_t i = 0; i < visible.size(); ++i) {
    labels[i] = g.labels[visible[i]];
    from_original[visible[i]] = static_cast<int>(i);
  }
  SplitSpec lsplit;  // local index space
  lsplit.setting = split.setting;
  lsplit.ind_ratio = split.ind_ratio;
  auto remap = [&](const std::vector<int>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int v : ids) out.push_back(from_original[v]);
    std::sort(out.begin(), out.end());
    return out;
  };
  lsplit.train = remap(split.train);
  lsplit.val = remap(split.val);
  lsplit.test_obs = remap(split.test_obs);

  const int n_local = static_cast<int>(visible.size());
  check(signals.logits.rows == n_local, ErrorKind::contract,
        "distill: teacher logits rows ", signals.logits.rows,
        " do not match the training-visible node count ", n_local);

  std::vector<int> kd_scope(n_local);
  for (int i = 0; i < n_local; ++i) kd_scope[i] = i;

  // Prototype label assignment and frozen teacher prototypes, fixed for the
  // whole run.
  LabelAssignment assign;
  FrozenPrototypes teacher_protos;
  const bool wants_protos =
      mode == StudentMode::pgkd && (dcfg.lambda1 > 0.0 || dcfg.lambda2 > 0.0);
  if (wants_protos) {
    assign = assign_labels(split.setting, lsplit,
                           inductive ? nullptr : &signals.logits, labels,
                           dcfg.proto_scope);
    if (dcfg.lambda2 > 0.0) {
      const Matrix& trep = dcfg.representation == Representation::hidden
                               ? signals.hidden
                               : signals.logits;
      teacher_protos = compute_frozen_prototypes(trep, assign, g.k);
    }
  }

  std::vector<int> dims{g.d};
  for (int l = 0; l < cfg.layers - 1; ++l) dims.push_back(cfg.hidden);
  dims.push_back(g.k);
  ModelParams params =
      init_params(ModelKind::mlp, dims, seed, 0.1, 10, kStudentInitSalt);

  Adam adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  TrainedModel out;
  out.record.seed = seed;
  EarlyStopper stopper{cfg.patience};
  ModelParams best = params;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Tape tape;
    NodeId x = tape.constant(x_train);
    ForwardOptions opt;
    opt.training = true;
    opt.dropout = cfg.dropout;
    opt.seed = seed;
    opt.epoch = (1ull << 40) + static_cast<std::uint64_t>(epoch);
    ForwardResult fr = model_forward(tape, params, x, nullptr, nullptr, opt);

    NodeId lab = label_loss(tape, fr.logits, labels, lsplit.train);
    LossBreakdown breakdown;
    NodeId total;
    if (mode == StudentMode::vanilla) {
      total = lab;
      breakdown.label = tape.scalar_value(lab);
      breakdown.total = breakdown.label;
    } else if (mode == StudentMode::glnn) {
      // dedicated baseline path: label + kd, nothing else on the tape
      NodeId kd = kd_loss(tape, fr.logits, signals.logits, kd_scope, dcfg.tau_kd);
      total = tape.add(lab, kd);
      breakdown.label = tape.scalar_value(lab);
      breakdown.kd = tape.scalar_value(kd);
      breakdown.total = tape.scalar_value(total);
      breakdown.tau_kd = dcfg.tau_kd;
    } else {
      NodeId kd = kd_loss(tape, fr.logits, signals.logits, kd_scope, dcfg.tau_kd);
      std::optional<NodeId> intra;
      std::optional<InterLossResult> inter;
      if (wants_protos) {
        NodeId rep = dcfg.representation == Representation::hidden ? fr.hidden
                                                                   : fr.logits;
        PrototypeSet protos = compute_prototypes(tape, rep, assign, g.k);
        if (dcfg.lambda1 > 0.0)
          intra = intra_loss(tape, protos, dcfg.tau1, dcfg.distance);
        if (dcfg.lambda2 > 0.0) {
          inter = inter_loss(tape, protos, teacher_protos, dcfg.tau2,
                             dcfg.distance, dcfg.inter_sign,
                             dcfg.mask_self_distance);
          if (inter->degenerate) out.record.inter_degenerate_epochs++;
        }
      }
      TotalLoss t = total_loss(tape, lab, kd, intra, inter, dcfg.lambda1,
                               dcfg.lambda2, dcfg.tau1, dcfg.tau2, dcfg.tau_kd);
      total = t.node;
      breakdown = t.breakdown;
    }

    check(std::isfinite(breakdown.total), ErrorKind::runtime,
          "distillation diverged: non-finite loss at epoch ", epoch, " (seed ",
          seed, ")");

    Gradients grads = tape.backward(total);
    adam.step(params.tensors, grads_in_order(grads, fr.param_nodes));

    if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs - 1) {
      EvalOutput eval = eval_forward(params, x_train, nullptr, nullptr);
      EpochRecord rec;
      rec.epoch = epoch;
      rec.loss = breakdown;
      rec.train_acc = accuracy_on(eval.logits, labels, lsplit.train);
      rec.val_acc = accuracy_on(eval.logits, labels, lsplit.val);
      out.record.epochs.push_back(rec);

      const bool improved = stopper.snapshot(rec.val_acc);
      const bool stop = stopper.observe(epoch, rec.val_acc);
      if (improved) best = params;
      out.record.stopped_epoch = epoch;
      if (stop) break;
    }
  }

  out.params = std::move(best);
  out.record.best_epoch = stopper.best_epoch;
  out.record.best_val_acc = stopper.best_val;
  out.record.test_acc = evaluate(out.params, g, split, EvalSet::test);
  out.record.touched_feature_rows = visible;
  out.record.wall_ms = static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return out;
}

double evaluate(const ModelParams& params, const Graph& g, const SplitSpec& split,
                EvalSet which) {
  split.validate(g.n);
  const std::vector<int>* ids = nullptr;
  switch (which) {
    case EvalSet::train: ids = &split.train; break;
    case EvalSet::val: ids = &split.val; break;
    case EvalSet::test:
      // ratio-0 inductive splits have no held-out nodes; fall back to the
      // observed pool, the transductive-equivalent evaluation set
      ids = split.setting == Setting::inductive && !split.test_ind.empty()
                ? &split.test_ind
                : &split.test_obs;
      break;
    case EvalSet::test_obs: ids = &split.test_obs; break;
    case EvalSet::test_ind: ids = &split.test_ind; break;
  }
  check(!ids->empty(), ErrorKind::contract, "evaluate: requested node set is empty");

  if (params.kind == ModelKind::mlp) {
    // feature rows of the requested nodes only
    Matrix x = gather_features(g, *ids);
    EvalOutput eval = eval_forward(params, x, nullptr, nullptr);
    std::vector<int> pred = argmax_rows(eval.logits);
    long hit = 0;
    for (size_t i = 0; i < ids->size(); ++i)
      if (pred[i] == g.labels[(*ids)[i]]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(ids->size());
  }

  // Teachers always see the full graph, with every preserved edge.
  auto norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
  auto mean_adj = std::make_shared<const SparseMatrix>(mean_aggregator(g));
  EvalOutput eval = eval_forward(params, g.features, norm_adj, mean_adj);
  return accuracy_on(eval.logits, g.labels, *ids);
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

GridResult grid_search(const Graph& g, const SplitSpec& split,
                       const TeacherConfig& tcfg, const StudentConfig& scfg,
                       const DistillConfig& base, const GridSpec& grid,
                       const std::vector<std::uint64_t>& seeds, int jobs) {
  check(!seeds.empty(), ErrorKind::invalid_argument, "grid: no seeds given");
  check(!grid.lambda1.empty() && !grid.lambda2.empty(), ErrorKind::invalid_argument,
        "grid: empty lambda grid");

  // One teacher per seed, shared across every grid point.
  std::vector<TeacherSignals> signals(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), jobs, [&](int i) {
    TrainedModel teacher = train_teacher(g, split, tcfg, seeds[i]);
    signals[i] = compute_teacher_signals(g, split, teacher.params);
  });

  struct Point {
    double l1, l2;
  };
  std::vector<Point> points;
  for (double l1 : grid.lambda1)
    for (double l2 : grid.lambda2) points.push_back({l1, l2});

  GridResult res;
  res.cells.resize(points.size() * seeds.size());
  parallel_for(static_cast<int>(res.cells.size()), jobs, [&](int idx) {
    const int pi = idx / static_cast<int>(seeds.size());
    const int si = idx % static_cast<int>(seeds.size());
    DistillConfig d = base;
    d.lambda1 = points[pi].l1;
    d.lambda2 = points[pi].l2;
    StudentMode mode = (d.lambda1 == 0.0 && d.lambda2 == 0.0) ? StudentMode::glnn
                                                              : StudentMode::pgkd;
    TrainedModel student =
        distill_student(g, split, signals[si], scfg, d, mode, seeds[si]);
    GridCell& cell = res.cells[idx];
    cell.lambda1 = d.lambda1;
    cell.lambda2 = d.lambda2;
    cell.seed = seeds[si];
    cell.val_acc = student.record.best_val_acc;
    cell.test_acc = student.record.test_acc;
    cell.epochs = student.record.stopped_epoch + 1;
    cell.wall_ms = student.record.wall_ms;
  });

  double best_val = -1.0;
  for (size_t pi = 0; pi < points.size(); ++pi) {
    std::vector<double> vals, tests;
    for (size_t si = 0; si < seeds.size(); ++si) {
      const GridCell& c = res.cells[pi * seeds.size() + si];
      vals.push_back(c.val_acc);
      tests.push_back(c.test_acc);
    }
    const double vm = mean(vals);
    if (vm > best_val) {
      best_val = vm;
      res.best_lambda1 = points[pi].l1;
      res.best_lambda2 = points[pi].l2;
      res.best_val_mean = vm;
      res.best_test_mean = mean(tests);
      res.best_test_std = sample_std(tests);
    }
  }
  return res;
}

}  // namespace pgkd
