#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "pgkd/analysis.hpp"
#include "pgkd/checkpoint.hpp"
#include "pgkd/dataset.hpp"
#include "pgkd/error.hpp"
#include "pgkd/training.hpp"

using namespace pgkd;

namespace {

// Small, cleanly separable two-block graph: strong structure, informative
// features, enough nodes for a 10/10/rest split.
SbmConfig separable_cfg(std::uint64_t seed = 0) {
  SbmConfig cfg;
  cfg.k = 2;
  cfg.nodes_per_block = 60;
  cfg.p_intra = 0.15;
  cfg.p_inter = 0.01;
  cfg.feature_dim = 8;
  cfg.center_separation = 3.0;
  cfg.noise_std = 1.0;
  cfg.seed = seed;
  return cfg;
}

SplitOptions small_split(Setting setting = Setting::transductive) {
  SplitOptions opt;
  opt.setting = setting;
  opt.train_per_class = 5;
  opt.val_count = 20;
  opt.ind_ratio = setting == Setting::inductive ? 0.3 : 0.0;
  return opt;
}

TeacherConfig fast_teacher(ModelKind kind = ModelKind::gcn) {
  TeacherConfig cfg;
  cfg.kind = kind;
  cfg.hidden = 16;
  cfg.max_epochs = 200;
  cfg.patience = 30;
  return cfg;
}

StudentConfig fast_student() {
  StudentConfig cfg;
  cfg.hidden = 16;
  cfg.max_epochs = 200;
  cfg.patience = 30;
  return cfg;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (size_t i = 0; i < a.tensors.size(); ++i)
    if (!(a.tensors[i].second == b.tensors[i].second)) return false;
  return true;
}

bool records_equal(const RunRecord& a, const RunRecord& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (size_t i = 0; i < a.epochs.size(); ++i) {
    const EpochRecord &x = a.epochs[i], &y = b.epochs[i];
    if (x.epoch != y.epoch || x.loss.total != y.loss.total ||
        x.loss.label != y.loss.label || x.loss.kd != y.loss.kd ||
        x.loss.intra != y.loss.intra || x.loss.inter != y.loss.inter ||
        x.train_acc != y.train_acc || x.val_acc != y.val_acc)
      return false;
  }
  return a.best_epoch == b.best_epoch && a.test_acc == b.test_acc;
}

}  // namespace

TEST_CASE("adam takes the expected first step") {
  std::vector<std::pair<std::string, Matrix>> tensors;
  tensors.emplace_back("w", Matrix::from_rows({{1.0, -2.0}}));
  Matrix grad = Matrix::from_rows({{0.5, 0.5}});
  Adam adam;
  adam.lr = 0.1;
  adam.weight_decay = 0.0;
  adam.step(tensors, {&grad});
  // first step moves by lr * g/(|g|+eps) = lr * sign(g) very nearly
  CHECK(tensors[0].second.at(0, 0) == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(tensors[0].second.at(0, 1) == doctest::Approx(-2.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("teacher reaches 95% on a separable synthetic graph") {
  Graph g = generate_sbm(separable_cfg());
  SplitSpec split = make_split(g, small_split(), 0);
  TrainedModel tm = train_teacher(g, split, fast_teacher(), 0);
  CHECK(tm.record.test_acc >= 0.95);
  CHECK(tm.record.best_epoch >= 0);
  CHECK(tm.record.stopped_epoch < 200);
}

TEST_CASE("early stopping: patience zero stops at the first non-improving eval") {
  Graph g = generate_sbm(separable_cfg(1));
  SplitSpec split = make_split(g, small_split(), 1);
  TeacherConfig cfg = fast_teacher();
  cfg.patience = 0;
  TrainedModel tm = train_teacher(g, split, cfg, 1);
  CHECK(tm.record.best_epoch <= tm.record.stopped_epoch);
  // the run must be shorter than a patient one
  TeacherConfig patient = fast_teacher();
  TrainedModel tp = train_teacher(g, split, patient, 1);
  CHECK(tm.record.stopped_epoch <= tp.record.stopped_epoch);
  // best-val epoch's val accuracy is the maximum over recorded epochs
  double best = 0.0;
  for (const auto& e : tp.record.epochs) best = std::max(best, e.val_acc);
  CHECK(tp.record.best_val_acc == best);
}

TEST_CASE("training is deterministic per (config, seed, dataset)") {
  Graph g = generate_sbm(separable_cfg(2));
  SplitSpec split = make_split(g, small_split(), 2);
  TrainedModel a = train_teacher(g, split, fast_teacher(ModelKind::sage), 5);
  TrainedModel b = train_teacher(g, split, fast_teacher(ModelKind::sage), 5);
  CHECK(params_equal(a.params, b.params));
  CHECK(records_equal(a.record, b.record));
  TrainedModel c = train_teacher(g, split, fast_teacher(ModelKind::sage), 6);
  CHECK(!records_equal(a.record, c.record));
}

TEST_CASE("checkpointed teacher reproduces its test accuracy exactly") {
  Graph g = generate_sbm(separable_cfg(3));
  SplitSpec split = make_split(g, small_split(), 3);
  TrainedModel tm = train_teacher(g, split, fast_teacher(), 3);

  const std::string path = "/tmp/pgkd_test_teacher.ckpt";
  save_checkpoint(tm.params.to_checkpoint(), path);
  ModelParams reloaded = ModelParams::from_checkpoint(load_checkpoint(path));
  CHECK(params_equal(tm.params, reloaded));
  CHECK(evaluate(reloaded, g, split, EvalSet::test) == tm.record.test_acc);
}

TEST_CASE("evaluate matches the argmax-and-count oracle") {
  Graph g = generate_sbm(separable_cfg(4));
  SplitSpec split = make_split(g, small_split(), 4);
  ModelParams random_params = init_params(ModelKind::gcn, {g.d, 16, g.k}, 77);
  double acc = evaluate(random_params, g, split, EvalSet::test);

  auto na = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
  auto ma = std::make_shared<const SparseMatrix>(mean_aggregator(g));
  EvalOutput out = eval_forward(random_params, g.features, na, ma);
  CHECK(acc == oracle::accuracy(out.logits, g.labels, split.test_obs));
}

TEST_CASE("random params score near chance") {
  SbmConfig cfg = separable_cfg(5);
  cfg.k = 4;
  cfg.nodes_per_block = 50;
  Graph g = generate_sbm(cfg);
  SplitSpec split = make_split(g, small_split(), 5);
  double sum = 0.0;
  const int trials = 8;
  for (int i = 0; i < trials; ++i) {
    ModelParams p = init_params(ModelKind::mlp, {g.d, 16, g.k}, 100 + i);
    sum += evaluate(p, g, split, EvalSet::test);
  }
  const double mean_acc = sum / trials;
  const double n_test = static_cast<double>(split.test_obs.size());
  const double sigma = std::sqrt(0.25 * (1 - 0.25) / n_test) / std::sqrt(trials);
  CHECK(std::fabs(mean_acc - 0.25) <= 6.0 * sigma);  // untrained, near chance
}

TEST_CASE("glnn special case: lambda zero pgkd path is bit-identical") {
  Graph g = generate_sbm(separable_cfg(6));
  SplitSpec split = make_split(g, small_split(), 6);
  TrainedModel teacher = train_teacher(g, split, fast_teacher(), 6);
  TeacherSignals signals = compute_teacher_signals(g, split, teacher.params);

  DistillConfig d;
  d.lambda1 = 0.0;
  d.lambda2 = 0.0;
  TrainedModel a =
      distill_student(g, split, signals, fast_student(), d, StudentMode::pgkd, 6);
  TrainedModel b =
      distill_student(g, split, signals, fast_student(), d, StudentMode::glnn, 6);
  CHECK(params_equal(a.params, b.params));
  CHECK(records_equal(a.record, b.record));
}

TEST_CASE("edge-freeness: graph edits after signal caching change nothing") {
  Graph g = generate_sbm(separable_cfg(7));
  SplitSpec split = make_split(g, small_split(), 7);
  TrainedModel teacher = train_teacher(g, split, fast_teacher(), 7);
  TeacherSignals signals = compute_teacher_signals(g, split, teacher.params);

  DistillConfig d;
  d.lambda1 = 0.2;
  d.lambda2 = 0.1;
  TrainedModel a =
      distill_student(g, split, signals, fast_student(), d, StudentMode::pgkd, 7);

  Graph no_edges = Graph::build(g.k, g.features, g.labels, {});
  TrainedModel b = distill_student(no_edges, split, signals, fast_student(), d,
                                   StudentMode::pgkd, 7);
  CHECK(params_equal(a.params, b.params));
  CHECK(records_equal(a.record, b.record));
}

TEST_CASE("teacher one-hot signals let the student reach teacher accuracy") {
  SbmConfig cfg = separable_cfg(8);
  cfg.center_separation = 4.0;  // near-perfect feature separability
  Graph g = generate_sbm(cfg);
  SplitSpec split = make_split(g, small_split(), 8);

  TeacherSignals signals;
  signals.logits = Matrix(g.n, g.k);
  for (int i = 0; i < g.n; ++i) signals.logits.at(i, g.labels[i]) = 10.0;
  signals.hidden = signals.logits;

  DistillConfig d;
  d.lambda1 = 0.1;
  d.lambda2 = 0.0;
  StudentConfig scfg = fast_student();
  scfg.max_epochs = 300;
  scfg.patience = 60;
  TrainedModel student =
      distill_student(g, split, signals, scfg, d, StudentMode::pgkd, 8);
  CHECK(student.record.test_acc >= 0.93);
}

TEST_CASE("inductive distillation isolates the held-out nodes") {
  Graph g = generate_sbm(separable_cfg(9));
  SplitSpec split = make_split(g, small_split(Setting::inductive), 9);
  REQUIRE(!split.test_ind.empty());
  TrainedModel teacher = train_teacher(g, split, fast_teacher(), 9);
  TeacherSignals signals = compute_teacher_signals(g, split, teacher.params);

  DistillConfig d;
  d.lambda1 = 0.2;
  d.lambda2 = 0.1;
  TrainedModel student =
      distill_student(g, split, signals, fast_student(), d, StudentMode::pgkd, 9);

  std::set<int> touched(student.record.touched_feature_rows.begin(),
                        student.record.touched_feature_rows.end());
  for (int v : split.test_ind) CHECK(!touched.count(v));
  std::set<int> teacher_touched(teacher.record.touched_feature_rows.begin(),
                                teacher.record.touched_feature_rows.end());
  for (int v : split.test_ind) CHECK(!teacher_touched.count(v));

  // inductive evaluation reads test_ind only
  CHECK(student.record.test_acc ==
        evaluate(student.params, g, split, EvalSet::test_ind));
  CHECK(student.record.test_acc > 0.5);
}

TEST_CASE("divergent training aborts with a diagnostic") {
  Graph g = generate_sbm(separable_cfg(10));
  SplitSpec split = make_split(g, small_split(), 10);
  // non-finite teacher signals poison the kd term on the first epoch
  TeacherSignals signals;
  signals.logits = Matrix(g.n, g.k);
  for (double& v : signals.logits.data)
    v = std::numeric_limits<double>::infinity();
  signals.hidden = signals.logits;
  DistillConfig d;
  d.lambda1 = 0.0;
  d.lambda2 = 0.0;
  try {
    distill_student(g, split, signals, fast_student(), d, StudentMode::glnn, 1);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::runtime);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("grid of size one equals a single distillation run") {
  Graph g = generate_sbm(separable_cfg(11));
  SplitSpec split = make_split(g, small_split(), 11);

  GridSpec grid;
  grid.lambda1 = {0.2};
  grid.lambda2 = {0.1};
  GridResult res = grid_search(g, split, fast_teacher(), fast_student(),
                               DistillConfig{}, grid, {11}, 1);
  REQUIRE(res.cells.size() == 1);

  TrainedModel teacher = train_teacher(g, split, fast_teacher(), 11);
  TeacherSignals signals = compute_teacher_signals(g, split, teacher.params);
  DistillConfig d;
  d.lambda1 = 0.2;
  d.lambda2 = 0.1;
  TrainedModel student =
      distill_student(g, split, signals, fast_student(), d, StudentMode::pgkd, 11);
  CHECK(res.cells[0].val_acc == student.record.best_val_acc);
  CHECK(res.cells[0].test_acc == student.record.test_acc);
  CHECK(res.best_lambda1 == 0.2);
  CHECK(res.best_lambda2 == 0.1);
}

TEST_CASE("grid results are independent of the worker count") {
  Graph g = generate_sbm(separable_cfg(12));
  SplitSpec split = make_split(g, small_split(), 12);
  GridSpec grid;
  grid.lambda1 = {0.0, 0.2};
  grid.lambda2 = {0.0, 0.1};
  GridResult serial = grid_search(g, split, fast_teacher(), fast_student(),
                                  DistillConfig{}, grid, {1, 2}, 1);
  GridResult parallel = grid_search(g, split, fast_teacher(), fast_student(),
                                    DistillConfig{}, grid, {1, 2}, 4);
  REQUIRE(serial.cells.size() == parallel.cells.size());
  for (size_t i = 0; i < serial.cells.size(); ++i) {
    CHECK(serial.cells[i].val_acc == parallel.cells[i].val_acc);
    CHECK(serial.cells[i].test_acc == parallel.cells[i].test_acc);
  }
}

TEST_CASE("mean and sample std match a scalar oracle") {
  std::vector<double> v{0.5, 0.75, 0.25, 1.0};
  CHECK(mean(v) == doctest::Approx(0.625).epsilon(1e-15));
  double m = 0.625;
  double s2 = ((0.5 - m) * (0.5 - m) + (0.75 - m) * (0.75 - m) +
               (0.25 - m) * (0.25 - m) + (1.0 - m) * (1.0 - m)) / 3.0;
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(s2)).epsilon(1e-15));
}
