#include "pgkd/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "pgkd/checkpoint.hpp"
#include "pgkd/error.hpp"
#include "pgkd/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pgkd {

namespace {

std::string run_dir(const ExperimentConfig& cfg, const std::string& hash,
                    std::uint64_t seed, const std::string& op) {
  return (fs::path(cfg.out_dir) / hash / std::to_string(seed) / op).string();
}

// Echo embedded in artifacts: volatile keys dropped so reruns into another
// directory stay byte-identical.
json stable_echo(const ExperimentConfig& cfg) {
  json echo = cfg.echo();
  echo.erase("out_dir");
  echo.erase("jobs");
  return echo;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorKind::io, "cannot open ", path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path, ": invalid JSON: ", e.what());
  }
}

EvalSet eval_set_from_string(const std::string& which) {
  if (which == "train") return EvalSet::train;
  if (which == "val") return EvalSet::val;
  if (which == "test") return EvalSet::test;
  if (which == "test_obs") return EvalSet::test_obs;
  if (which == "test_ind") return EvalSet::test_ind;
  fail(ErrorKind::invalid_argument,
       "evaluate: which must be train|val|test|test_obs|test_ind, got '", which,
       "'");
}

EmbeddingSource source_from_string(const std::string& s) {
  if (s == "input") return EmbeddingSource::input;
  if (s == "hidden") return EmbeddingSource::hidden;
  if (s == "logits") return EmbeddingSource::logits;
  fail(ErrorKind::invalid_argument,
       "source must be input|hidden|logits, got '", s, "'");
}

}  // namespace

Graph load_graph_for(const ExperimentConfig& cfg) {
  if (cfg.sbm.has_value()) return generate_sbm(*cfg.sbm);
  return load_dataset(cfg.dataset_manifest);
}

SplitSpec resolve_split(const Graph& g, const ExperimentConfig& cfg,
                        std::uint64_t seed, const SplitSpec* override_split) {
  if (override_split) {
    override_split->validate(g.n);
    return *override_split;
  }
  if (!cfg.split_file.empty())
    return split_spec_from_json(read_json_file(cfg.split_file), g.n);

  // Manifest-provided split ids win over random splitting.
  if (!cfg.sbm.has_value()) {
    DatasetManifest m = DatasetManifest::load(cfg.dataset_manifest);
    if (m.has_split_files()) {
      auto ids = load_split_ids(m);
      return split_from_ids(cfg.split.setting, g.n, std::move(ids[0]),
                            std::move(ids[1]), std::move(ids[2]),
                            cfg.split.ind_ratio, seed);
    }
  }
  return make_split(g, cfg.split, seed);
}

json split_op(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed,
              const std::string& out_path) {
  SplitSpec s = resolve_split(g, cfg, seed);
  json j = split_to_json(s);
  j["seed"] = seed;
  j["config_hash"] = cfg.hash();
  fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(out_path);
  check(out.good(), ErrorKind::io, "cannot write ", out_path);
  out << j.dump(2) << '\n';
  json res;
  res["op"] = "split";
  res["path"] = out_path;
  res["train"] = s.train.size();
  res["val"] = s.val.size();
  res["test_obs"] = s.test_obs.size();
  res["test_ind"] = s.test_ind.size();
  return res;
}

json train_teacher_op(const Graph& g, const ExperimentConfig& cfg,
                      std::uint64_t seed, const SplitSpec* split) {
  const std::string hash = cfg.hash();
  SplitSpec s = resolve_split(g, cfg, seed, split);
  TrainedModel tm = train_teacher(g, s, cfg.pipeline.teacher, seed);

  const std::string dir = run_dir(cfg, hash, seed, "teacher");
  fs::create_directories(dir);
  json echo = stable_echo(cfg);
  write_run_outputs(dir, tm.record, echo, hash);
  json meta;
  meta["config"] = echo;
  meta["config_hash"] = hash;
  meta["seed"] = seed;
  const std::string ckpt = (fs::path(dir) / "teacher.ckpt").string();
  save_checkpoint(tm.params.to_checkpoint(meta), ckpt);

  json res = run_result_json(tm.record, echo, hash);
  res["op"] = "train-teacher";
  res["run_dir"] = dir;
  res["checkpoint"] = ckpt;
  return res;
}

json distill_op(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed,
                const std::string& teacher_ckpt, const SplitSpec* split) {
  const std::string hash = cfg.hash();
  SplitSpec s = resolve_split(g, cfg, seed, split);

  ModelParams teacher;
  json teacher_result;
  if (teacher_ckpt.empty()) {
    teacher_result = train_teacher_op(g, cfg, seed, &s);
    teacher = ModelParams::from_checkpoint(
        load_checkpoint(teacher_result.at("checkpoint").get<std::string>()));
  } else {
    teacher = ModelParams::from_checkpoint(load_checkpoint(teacher_ckpt));
  }

  TeacherSignals signals = compute_teacher_signals(g, s, teacher);
  const DistillConfig& d = cfg.pipeline.distill;
  const StudentMode mode = (d.lambda1 == 0.0 && d.lambda2 == 0.0)
                               ? StudentMode::glnn
                               : StudentMode::pgkd;
  TrainedModel student =
      distill_student(g, s, signals, cfg.pipeline.student, d, mode, seed);

  const std::string dir = run_dir(cfg, hash, seed, "student");
  fs::create_directories(dir);
  json echo = stable_echo(cfg);
  write_run_outputs(dir, student.record, echo, hash);
  json meta;
  meta["config"] = echo;
  meta["config_hash"] = hash;
  meta["seed"] = seed;
  const std::string ckpt = (fs::path(dir) / "student.ckpt").string();
  save_checkpoint(student.params.to_checkpoint(meta), ckpt);

  json res = run_result_json(student.record, echo, hash);
  res["op"] = "distill";
  res["objective"] = mode == StudentMode::glnn ? "glnn" : "pgkd";
  res["run_dir"] = dir;
  res["checkpoint"] = ckpt;
  if (!teacher_result.is_null()) res["teacher"] = teacher_result;
  return res;
}

double evaluate_op(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed,
                   const std::string& ckpt, const std::string& which,
                   const SplitSpec* split) {
  SplitSpec s = resolve_split(g, cfg, seed, split);
  ModelParams params = ModelParams::from_checkpoint(load_checkpoint(ckpt));
  return evaluate(params, g, s, eval_set_from_string(which));
}

json grid_op(const Graph& g, const ExperimentConfig& cfg,
             const std::vector<double>& lambda1_grid,
             const std::vector<double>& lambda2_grid,
             const std::vector<std::uint64_t>& seeds, const SplitSpec* split) {
  const std::string hash = cfg.hash();
  check(!seeds.empty(), ErrorKind::invalid_argument, "grid: no seeds given");
  SplitSpec s = resolve_split(g, cfg, seeds.front(), split);

  GridSpec grid;
  if (!lambda1_grid.empty()) grid.lambda1 = lambda1_grid;
  if (!lambda2_grid.empty()) grid.lambda2 = lambda2_grid;
  GridResult res = grid_search(g, s, cfg.pipeline.teacher, cfg.pipeline.student,
                               cfg.pipeline.distill, grid, seeds, cfg.jobs);

  const fs::path dir = fs::path(cfg.out_dir) / hash;
  fs::create_directories(dir);
  const std::string csv = (dir / "grid.csv").string();
  write_grid_csv(csv, res, hash, seeds);

  json j;
  j["op"] = "grid";
  j["config_hash"] = hash;
  j["csv"] = csv;
  j["best"]["lambda1"] = res.best_lambda1;
  j["best"]["lambda2"] = res.best_lambda2;
  j["best"]["val_acc_mean"] = res.best_val_mean;
  j["best"]["test_acc_mean"] = res.best_test_mean;
  j["best"]["test_acc_std"] = res.best_test_std;
  j["cells"] = res.cells.size();
  return j;
}

json sweep_noise_op(const Graph& g, const ExperimentConfig& cfg,
                    const std::vector<double>& alphas,
                    const std::vector<std::uint64_t>& seeds,
                    const SplitSpec* split) {
  const std::string hash = cfg.hash();
  check(!seeds.empty(), ErrorKind::invalid_argument, "sweep: no seeds given");
  SplitSpec s = resolve_split(g, cfg, seeds.front(), split);
  std::vector<NoiseCell> cells =
      noise_sweep(g, s, cfg.pipeline, alphas, seeds, cfg.jobs);

  const fs::path dir = fs::path(cfg.out_dir) / hash;
  fs::create_directories(dir);
  const std::string csv = (dir / "noise_sweep.csv").string();
  write_noise_csv(csv, cells, hash, seeds);
  json j;
  j["op"] = "sweep-noise";
  j["config_hash"] = hash;
  j["csv"] = csv;
  j["cells"] = cells.size();
  return j;
}

json sweep_ratio_op(const Graph& g, const ExperimentConfig& cfg,
                    const std::vector<double>& ratios,
                    const std::vector<std::uint64_t>& seeds) {
  const std::string hash = cfg.hash();
  SplitOptions base = cfg.split;
  base.setting = Setting::inductive;
  std::vector<RatioCell> cells =
      split_ratio_sweep(g, base, cfg.pipeline, ratios, seeds, cfg.jobs);

  const fs::path dir = fs::path(cfg.out_dir) / hash;
  fs::create_directories(dir);
  const std::string csv = (dir / "ratio_sweep.csv").string();
  write_ratio_csv(csv, cells, hash, seeds);
  json j;
  j["op"] = "sweep-ratio";
  j["config_hash"] = hash;
  j["csv"] = csv;
  j["cells"] = cells.size();
  return j;
}

json sweep_capacity_op(const Graph& g, const ExperimentConfig& cfg,
                       const std::vector<std::pair<int, int>>& layer_width_list,
                       const std::vector<std::uint64_t>& seeds,
                       const SplitSpec* split) {
  const std::string hash = cfg.hash();
  check(!seeds.empty(), ErrorKind::invalid_argument, "sweep: no seeds given");
  SplitSpec s = resolve_split(g, cfg, seeds.front(), split);
  std::vector<CapacityCell> cells =
      capacity_sweep(g, s, cfg.pipeline, layer_width_list, seeds, cfg.jobs);

  const fs::path dir = fs::path(cfg.out_dir) / hash;
  fs::create_directories(dir);
  const std::string csv = (dir / "capacity_sweep.csv").string();
  write_capacity_csv(csv, cells, hash, seeds);
  json j;
  j["op"] = "sweep-capacity";
  j["config_hash"] = hash;
  j["csv"] = csv;
  j["cells"] = cells.size();
  return j;
}

Matrix representation_from_checkpoint(const Graph& g, const std::string& ckpt,
                                      const std::string& source) {
  EmbeddingSource src = source_from_string(source);
  if (src == EmbeddingSource::input) return g.features;
  check(!ckpt.empty(), ErrorKind::invalid_argument,
        "a checkpoint is required for source '", source, "'");
  ModelParams params = ModelParams::from_checkpoint(load_checkpoint(ckpt));
  return representation_of(params, g, src);
}

json analyze_dist_op(const Graph& g, const std::string& ckpt,
                     const std::string& source) {
  Matrix h = representation_from_checkpoint(g, ckpt, source);
  json j;
  j["op"] = "analyze-dist";
  j["source"] = source;
  j["avg_connected_l2"] = connected_node_distance(h, g.edges);
  j["edges"] = g.edges.size();
  return j;
}

json analyze_spearman_op(const Graph& g, const std::string& ckpt,
                         const std::string& source, const std::string& out_csv) {
  Matrix h = representation_from_checkpoint(g, ckpt, source);
  StructureMetrics m = inter_class_spearman(h, g.labels, g.k, g.edges);
  if (!out_csv.empty()) {
    fs::path p(out_csv);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_structure_csv(out_csv, m, "");
  }
  json j;
  j["op"] = "analyze-spearman";
  j["source"] = source;
  j["spearman_rho"] = m.spearman_rho;
  j["degenerate"] = m.spearman_degenerate;
  j["avg_connected_l2"] = m.avg_connected_l2;
  j["pairs"] = m.pairs.size();
  if (!out_csv.empty()) j["csv"] = out_csv;
  return j;
}

json export_embeddings_op(const Graph& g, const std::string& ckpt,
                          const std::string& source, const std::string& out_path) {
  Matrix h = representation_from_checkpoint(g, ckpt, source);
  fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  export_embeddings(h, g.labels, out_path);
  json j;
  j["op"] = "export-embeddings";
  j["source"] = source;
  j["path"] = out_path;
  j["rows"] = h.rows;
  j["cols"] = h.cols + 2;
  return j;
}

}  // namespace pgkd
