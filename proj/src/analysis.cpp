#include "pgkd/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "pgkd/error.hpp"
#include "pgkd/rng.hpp"

namespace pgkd {

double connected_node_distance(const Matrix& h,
                               const std::vector<std::pair<int, int>>& edges) {
  if (edges.empty()) return 0.0;
  double total = 0.0;
  for (auto [u, v] : edges) {
    const double* a = h.row(u);
    const double* b = h.row(v);
    double s = 0.0;
    for (int c = 0; c < h.cols; ++c) {
      double d = a[c] - b[c];
      s += d * d;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(edges.size());
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  return rank;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b,
                    bool* degenerate) {
  check(a.size() == b.size(), ErrorKind::contract,
        "spearman: length mismatch ", a.size(), " vs ", b.size());
  if (degenerate) *degenerate = false;
  if (a.size() < 2) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return cov / std::sqrt(va * vb);
}

StructureMetrics inter_class_spearman(const Matrix& h, const std::vector<int>& labels,
                                      int k,
                                      const std::vector<std::pair<int, int>>& edges) {
  check(h.rows == static_cast<int>(labels.size()), ErrorKind::contract,
        "inter_class_spearman: rows ", h.rows, " != labels ", labels.size());

  // Ground-truth prototypes over all nodes.
  Matrix protos(k, h.cols);
  std::vector<long> counts(k, 0);
  for (int i = 0; i < h.rows; ++i) {
    int c = labels[i];
    check(c >= 0 && c < k, ErrorKind::data, "inter_class_spearman: bad label ", c);
    counts[c]++;
    const double* src = h.row(i);
    double* dst = protos.row(c);
    for (int j = 0; j < h.cols; ++j) dst[j] += src[j];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    double inv = 1.0 / static_cast<double>(counts[c]);
    double* dst = protos.row(c);
    for (int j = 0; j < h.cols; ++j) dst[j] *= inv;
  }

  std::vector<std::vector<long>> inter(k, std::vector<long>(k, 0));
  for (auto [u, v] : edges) {
    int cu = labels[u], cv = labels[v];
    if (cu != cv) {
      inter[cu][cv]++;
      inter[cv][cu]++;
    }
  }

  StructureMetrics m;
  m.avg_connected_l2 = connected_node_distance(h, edges);
  std::vector<double> dist, cnt;
  for (int a = 0; a < k; ++a) {
    if (counts[a] == 0) continue;
    for (int b = a + 1; b < k; ++b) {
      if (counts[b] == 0) continue;
      const double* pa = protos.row(a);
      const double* pb = protos.row(b);
      double s = 0.0;
      for (int j = 0; j < h.cols; ++j) {
        double d = pa[j] - pb[j];
        s += d * d;
      }
      StructureMetrics::PairRow row;
      row.class_a = a;
      row.class_b = b;
      row.prototype_distance = std::sqrt(s);
      row.inter_edge_count = inter[a][b];
      m.pairs.push_back(row);
      dist.push_back(row.prototype_distance);
      cnt.push_back(static_cast<double>(row.inter_edge_count));
    }
  }
  m.spearman_rho = spearman_rho(dist, cnt, &m.spearman_degenerate);
  return m;
}

Matrix perturb_features(const Matrix& x, double alpha, std::uint64_t seed) {
  check(alpha >= 0.0 && alpha <= 1.0, ErrorKind::invalid_argument,
        "noise level must lie in [0,1], got ", alpha);
  if (alpha == 0.0) return x;

  // Column standard deviation of the clean features sets the noise scale.
  std::vector<double> colstd(x.cols, 0.0);
  for (int c = 0; c < x.cols; ++c) {
    double m = 0.0;
    for (int r = 0; r < x.rows; ++r) m += x.at(r, c);
    m /= x.rows;
    double s = 0.0;
    for (int r = 0; r < x.rows; ++r) {
      double d = x.at(r, c) - m;
      s += d * d;
    }
    colstd[c] = std::sqrt(s / x.rows);
  }

  rng::Counter noise(seed, rng::Stream::noise, std::bit_cast<std::uint64_t>(alpha));
  Matrix out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const double* src = x.row(r);
    double* dst = out.row(r);
    for (int c = 0; c < x.cols; ++c) {
      const double eps =
          colstd[c] * noise.normal(static_cast<std::uint64_t>(r) * x.cols + c);
      dst[c] = (1.0 - alpha) * src[c] + alpha * eps;
    }
  }
  return out;
}

namespace {

struct CellAccs {
  double teacher = 0.0, glnn = 0.0, pgkd = 0.0;
};

CellAccs run_pipeline(const Graph& g, const SplitSpec& split,
                      const PipelineConfig& cfg, std::uint64_t seed,
                      EvalSet teacher_set, EvalSet student_set) {
  CellAccs out;
  TrainedModel teacher = train_teacher(g, split, cfg.teacher, seed);
  out.teacher = evaluate(teacher.params, g, split, teacher_set);
  TeacherSignals signals = compute_teacher_signals(g, split, teacher.params);
  TrainedModel glnn = distill_student(g, split, signals, cfg.student, cfg.distill,
                                      StudentMode::glnn, seed);
  TrainedModel pgkd = distill_student(g, split, signals, cfg.student, cfg.distill,
                                      StudentMode::pgkd, seed);
  out.glnn = evaluate(glnn.params, g, split, student_set);
  out.pgkd = evaluate(pgkd.params, g, split, student_set);
  return out;
}

}  // namespace

std::vector<NoiseCell> noise_sweep(const Graph& g, const SplitSpec& split,
                                   const PipelineConfig& cfg,
                                   const std::vector<double>& alphas,
                                   const std::vector<std::uint64_t>& seeds,
                                   int jobs) {
  check(!alphas.empty() && !seeds.empty(), ErrorKind::invalid_argument,
        "noise_sweep: empty alpha or seed list");
  std::vector<NoiseCell> cells(alphas.size() * seeds.size());
  parallel_for(static_cast<int>(cells.size()), jobs, [&](int idx) {
    const size_t ai = idx / seeds.size();
    const size_t si = idx % seeds.size();
    NoiseCell& cell = cells[idx];
    cell.alpha = alphas[ai];
    cell.seed = seeds[si];

    Graph noisy = g;
    noisy.features = perturb_features(g.features, cell.alpha, cell.seed);
    CellAccs accs =
        run_pipeline(noisy, split, cfg, cell.seed, EvalSet::test, EvalSet::test);
    cell.teacher_acc = accs.teacher;
    cell.glnn_acc = accs.glnn;
    cell.pgkd_acc = accs.pgkd;
  });
  return cells;
}

std::vector<RatioCell> split_ratio_sweep(const Graph& g, const SplitOptions& base,
                                         const PipelineConfig& cfg,
                                         const std::vector<double>& ratios,
                                         const std::vector<std::uint64_t>& seeds,
                                         int jobs) {
  check(base.setting == Setting::inductive, ErrorKind::invalid_argument,
        "split_ratio_sweep: base split options must be inductive");
  check(!ratios.empty() && !seeds.empty(), ErrorKind::invalid_argument,
        "split_ratio_sweep: empty ratio or seed list");
  std::vector<RatioCell> cells(ratios.size() * seeds.size());
  parallel_for(static_cast<int>(cells.size()), jobs, [&](int idx) {
    const size_t ri = idx / seeds.size();
    const size_t si = idx % seeds.size();
    RatioCell& cell = cells[idx];
    cell.ratio = ratios[ri];
    cell.seed = seeds[si];

    SplitOptions opt = base;
    opt.ind_ratio = cell.ratio;
    SplitSpec split = make_split(g, opt, cell.seed);
    cell.test_ind_size = static_cast<int>(split.test_ind.size());
    // at ratio 0, EvalSet::test falls back to the observed pool
    CellAccs accs =
        run_pipeline(g, split, cfg, cell.seed, EvalSet::test, EvalSet::test);
    cell.teacher_acc = accs.teacher;
    cell.glnn_acc = accs.glnn;
    cell.pgkd_acc = accs.pgkd;
  });
  return cells;
}

std::vector<CapacityCell> capacity_sweep(
    const Graph& g, const SplitSpec& split, const PipelineConfig& cfg,
    const std::vector<std::pair<int, int>>& layer_width_list,
    const std::vector<std::uint64_t>& seeds, int jobs) {
  check(!layer_width_list.empty() && !seeds.empty(), ErrorKind::invalid_argument,
        "capacity_sweep: empty settings or seed list");

  // One teacher per seed, shared by every capacity setting.
  std::vector<TeacherSignals> signals(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), jobs, [&](int i) {
    TrainedModel teacher = train_teacher(g, split, cfg.teacher, seeds[i]);
    signals[i] = compute_teacher_signals(g, split, teacher.params);
  });

  std::vector<CapacityCell> cells(layer_width_list.size() * seeds.size());
  parallel_for(static_cast<int>(cells.size()), jobs, [&](int idx) {
    const size_t li = idx / seeds.size();
    const size_t si = idx % seeds.size();
    CapacityCell& cell = cells[idx];
    cell.layers = layer_width_list[li].first;
    cell.width = layer_width_list[li].second;
    cell.seed = seeds[si];

    StudentConfig scfg = cfg.student;
    scfg.layers = cell.layers;
    scfg.hidden = cell.width;
    TrainedModel vanilla = distill_student(g, split, signals[si], scfg, cfg.distill,
                                           StudentMode::vanilla, cell.seed);
    TrainedModel glnn = distill_student(g, split, signals[si], scfg, cfg.distill,
                                        StudentMode::glnn, cell.seed);
    TrainedModel pgkd = distill_student(g, split, signals[si], scfg, cfg.distill,
                                        StudentMode::pgkd, cell.seed);
    cell.param_count = vanilla.params.param_count();
    cell.vanilla_acc = vanilla.record.test_acc;
    cell.glnn_acc = glnn.record.test_acc;
    cell.pgkd_acc = pgkd.record.test_acc;
  });
  return cells;
}

Matrix representation_of(const ModelParams& params, const Graph& g,
                         EmbeddingSource source) {
  if (source == EmbeddingSource::input) return g.features;
  std::shared_ptr<const SparseMatrix> norm_adj, mean_adj;
  if (params.kind != ModelKind::mlp) {
    norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
    mean_adj = std::make_shared<const SparseMatrix>(mean_aggregator(g));
  }
  EvalOutput eval = eval_forward(params, g.features, norm_adj, mean_adj);
  return source == EmbeddingSource::hidden ? std::move(eval.hidden)
                                           : std::move(eval.logits);
}

void export_embeddings(const Matrix& h, const std::vector<int>& labels,
                       const std::string& path) {
  check(h.rows == static_cast<int>(labels.size()), ErrorKind::contract,
        "export_embeddings: rows ", h.rows, " != labels ", labels.size());
  std::ofstream out(path);
  check(out.good(), ErrorKind::io, "cannot write ", path);
  out << "node_id,label";
  for (int c = 0; c < h.cols; ++c) out << ",h" << (c + 1);
  out << '\n';
  char buf[40];
  for (int r = 0; r < h.rows; ++r) {
    out << r << ',' << labels[r];
    const double* row = h.row(r);
    for (int c = 0; c < h.cols; ++c) {
      int len = std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
      out << ',';
      out.write(buf, len);
    }
    out << '\n';
  }
  check(out.good(), ErrorKind::io, "write failed for ", path);
}

}  // namespace pgkd
