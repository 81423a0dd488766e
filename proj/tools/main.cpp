// Experiment harness CLI. Links the C API only; configuration is assembled
// as JSON (config file first, then flag overrides) and handed to libpgkd.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgkd/pgkd.h"

using nlohmann::json;

namespace {

int exit_code_of(pgkd_status s) {
  switch (s) {
    case PGKD_OK: return 0;
    case PGKD_ERR_INVALID: return 1;
    default: return 2;
  }
}

[[noreturn]] void die(pgkd_status s) {
  std::cerr << "error: " << pgkd_last_error() << "\n";
  std::exit(exit_code_of(s));
}

void expect_ok(pgkd_status s) {
  if (s != PGKD_OK) die(s);
}

void print_result(char* result_json) {
  if (!result_json) return;
  json j = json::parse(result_json);
  pgkd_string_free(result_json);
  std::cout << j.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(1);
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "error: " << path << " is not valid JSON\n";
    std::exit(1);
  }
  return j;
}

struct GraphHandle {
  pgkd_graph* g = nullptr;
  ~GraphHandle() { pgkd_graph_free(g); }
};

struct SplitHandle {
  pgkd_split* s = nullptr;
  ~SplitHandle() { pgkd_split_free(s); }
};

// Options shared by every experiment-running subcommand. Flags override the
// config file; the fully-resolved config is what gets hashed and echoed.
struct CommonOpts {
  std::string config_file;
  std::string dataset;
  std::string sbm_config;
  std::string split_file;
  std::string out_dir;
  std::string setting;
  std::uint64_t seed = 0;
  int jobs = -1;
  int train_per_class = -1;
  double label_rate = -1.0;
  int val_count = -1;
  double ind_ratio = -1.0;
  std::string teacher_kind;
  int teacher_hidden = -1;
  double teacher_lr = -1.0;
  int teacher_epochs = -1;
  int teacher_patience = -1;
  int student_layers = -1;
  int student_hidden = -1;
  double student_lr = -1.0;
  int student_epochs = -1;
  int student_patience = -1;
  double lambda1 = -1.0;
  double lambda2 = -1.0;
  double tau1 = -1.0;
  double tau2 = -1.0;
  double tau_kd = -1.0;
  std::string distance;
  std::string inter_sign;
  std::string proto_scope;
  std::string representation;
  bool glnn = false;

  void attach(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--config", config_file, "experiment config JSON file");
    cmd->add_option("--dataset", dataset, "dataset manifest.json path");
    cmd->add_option("--sbm-config", sbm_config, "generator config JSON file");
    cmd->add_option("--split-file", split_file, "pre-built split JSON file");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--setting", setting, "transductive|inductive");
    if (with_seed) cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--jobs", jobs, "parallel runs (default 1)");
    cmd->add_option("--train-per-class", train_per_class, "labeled nodes per class");
    cmd->add_option("--label-rate", label_rate, "labeled fraction of nodes");
    cmd->add_option("--val-count", val_count, "validation node count");
    cmd->add_option("--ind-ratio", ind_ratio, "|test_ind| / |unlabeled|");
    cmd->add_option("--teacher-kind", teacher_kind, "gcn|sage|appnp");
    cmd->add_option("--teacher-hidden", teacher_hidden, "teacher hidden width");
    cmd->add_option("--teacher-lr", teacher_lr, "teacher learning rate");
    cmd->add_option("--teacher-epochs", teacher_epochs, "teacher max epochs");
    cmd->add_option("--teacher-patience", teacher_patience, "teacher patience");
    cmd->add_option("--student-layers", student_layers, "student layer count");
    cmd->add_option("--student-hidden", student_hidden, "student hidden width");
    cmd->add_option("--student-lr", student_lr, "student learning rate");
    cmd->add_option("--student-epochs", student_epochs, "student max epochs");
    cmd->add_option("--student-patience", student_patience, "student patience");
    cmd->add_option("--lambda1", lambda1, "intra-class loss weight");
    cmd->add_option("--lambda2", lambda2, "inter-class loss weight");
    cmd->add_option("--tau1", tau1, "intra softmax temperature");
    cmd->add_option("--tau2", tau2, "inter softmax temperature");
    cmd->add_option("--tau-kd", tau_kd, "logit distillation temperature");
    cmd->add_option("--distance", distance, "l2|cosine");
    cmd->add_option("--inter-sign", inter_sign, "pos|neg");
    cmd->add_option("--proto-scope", proto_scope, "visible|train_val");
    cmd->add_option("--representation", representation, "hidden|logits");
    cmd->add_flag("--glnn", glnn, "shortcut for --lambda1 0 --lambda2 0");
  }

  json build_config() const {
    json cfg = config_file.empty() ? json::object() : load_json_file(config_file);
    if (!dataset.empty()) {
      if (cfg.contains("dataset")) cfg["dataset"].erase("sbm");
      cfg["dataset"]["manifest"] = dataset;
    }
    if (!sbm_config.empty()) {
      if (cfg.contains("dataset")) cfg["dataset"].erase("manifest");
      cfg["dataset"]["sbm"] = load_json_file(sbm_config);
    }
    if (!split_file.empty()) cfg["split"]["file"] = split_file;
    if (!setting.empty()) cfg["split"]["setting"] = setting;
    if (train_per_class >= 0) cfg["split"]["train_per_class"] = train_per_class;
    if (label_rate >= 0.0) cfg["split"]["label_rate"] = label_rate;
    if (val_count >= 0) cfg["split"]["val_count"] = val_count;
    if (ind_ratio >= 0.0) cfg["split"]["ind_ratio"] = ind_ratio;
    if (!teacher_kind.empty()) cfg["teacher"]["kind"] = teacher_kind;
    if (teacher_hidden > 0) cfg["teacher"]["hidden"] = teacher_hidden;
    if (teacher_lr > 0.0) cfg["teacher"]["lr"] = teacher_lr;
    if (teacher_epochs > 0) cfg["teacher"]["max_epochs"] = teacher_epochs;
    if (teacher_patience >= 0) cfg["teacher"]["patience"] = teacher_patience;
    if (student_layers > 0) cfg["student"]["layers"] = student_layers;
    if (student_hidden > 0) cfg["student"]["hidden"] = student_hidden;
    if (student_lr > 0.0) cfg["student"]["lr"] = student_lr;
    if (student_epochs > 0) cfg["student"]["max_epochs"] = student_epochs;
    if (student_patience >= 0) cfg["student"]["patience"] = student_patience;
    if (lambda1 >= 0.0) cfg["distill"]["lambda1"] = lambda1;
    if (lambda2 >= 0.0) cfg["distill"]["lambda2"] = lambda2;
    if (glnn) {
      cfg["distill"]["lambda1"] = 0.0;
      cfg["distill"]["lambda2"] = 0.0;
    }
    if (tau1 > 0.0) cfg["distill"]["tau1"] = tau1;
    if (tau2 > 0.0) cfg["distill"]["tau2"] = tau2;
    if (tau_kd > 0.0) cfg["distill"]["tau_kd"] = tau_kd;
    if (!distance.empty()) cfg["distill"]["distance"] = distance;
    if (!inter_sign.empty()) cfg["distill"]["inter_sign"] = inter_sign;
    if (!proto_scope.empty()) cfg["distill"]["proto_scope"] = proto_scope;
    if (!representation.empty()) cfg["distill"]["representation"] = representation;
    if (!out_dir.empty()) {
      cfg["out_dir"] = out_dir;
    } else if (!cfg.contains("out_dir")) {
      if (const char* env = std::getenv("PGKD_OUT_DIR")) cfg["out_dir"] = env;
    }
    if (jobs > 0) cfg["jobs"] = jobs;
    return cfg;
  }

  GraphHandle load_graph(const json& cfg) const {
    GraphHandle h;
    if (cfg.contains("dataset") && cfg["dataset"].contains("manifest")) {
      expect_ok(pgkd_graph_load(
          cfg["dataset"]["manifest"].get<std::string>().c_str(), &h.g));
    } else if (cfg.contains("dataset") && cfg["dataset"].contains("sbm")) {
      expect_ok(pgkd_graph_generate_sbm(cfg["dataset"]["sbm"].dump().c_str(), &h.g));
    } else {
      std::cerr << "error: config: missing 'dataset' (give --dataset or "
                   "--sbm-config)\n";
      std::exit(1);
    }
    return h;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prototype-guided distillation of GNN teachers into edge-free "
               "MLP students"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-sbm", "generate a synthetic dataset");
  std::string gen_config, gen_out = "sbm_dataset", gen_name = "sbm";
  gen->add_option("--sbm-config", gen_config, "generator config JSON file")
      ->required();
  gen->add_option("--out", gen_out, "output dataset directory");
  gen->add_option("--name", gen_name, "dataset name");

  auto* split_cmd = app.add_subcommand("split", "derive and save a node split");
  CommonOpts split_opts;
  split_opts.attach(split_cmd);
  std::string split_out = "split.json";
  split_cmd->add_option("--out", split_out, "output split JSON path");

  auto* teach = app.add_subcommand("train-teacher", "train a GNN teacher");
  CommonOpts teach_opts;
  teach_opts.attach(teach);

  auto* dist = app.add_subcommand("distill", "distill a teacher into an MLP");
  CommonOpts dist_opts;
  dist_opts.attach(dist);
  std::string dist_teacher;
  dist->add_option("--teacher", dist_teacher,
                   "teacher checkpoint (trained under this seed when absent)");

  auto* eval = app.add_subcommand("evaluate", "accuracy of a checkpoint");
  CommonOpts eval_opts;
  eval_opts.attach(eval);
  std::string eval_ckpt, eval_on = "test";
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--on", eval_on, "train|val|test|test_obs|test_ind");

  auto* grid = app.add_subcommand("grid", "lambda grid search");
  CommonOpts grid_opts;
  grid_opts.attach(grid, /*with_seed=*/false);
  std::vector<double> grid_l1{0.1, 0.2, 0.4};
  std::vector<double> grid_l2{0.05, 0.1};
  std::vector<std::uint64_t> grid_seeds{0, 1, 2, 3, 4};
  grid->add_option("--lambda1-grid", grid_l1, "lambda1 candidates")->delimiter(',');
  grid->add_option("--lambda2-grid", grid_l2, "lambda2 candidates")->delimiter(',');
  grid->add_option("--seeds", grid_seeds, "run seeds")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "structure metrics");
  analyze->require_subcommand(1);
  auto* adist = analyze->add_subcommand("dist", "mean connected-node L2 distance");
  auto* aspear = analyze->add_subcommand(
      "spearman", "prototype distance vs inter-class edge count correlation");
  CommonOpts adist_opts, aspear_opts;
  adist_opts.attach(adist);
  aspear_opts.attach(aspear);
  std::string adist_ckpt, adist_source = "input";
  std::string aspear_ckpt, aspear_source = "input", aspear_csv;
  adist->add_option("--ckpt", adist_ckpt, "checkpoint path");
  adist->add_option("--source", adist_source, "input|hidden|logits");
  aspear->add_option("--ckpt", aspear_ckpt, "checkpoint path");
  aspear->add_option("--source", aspear_source, "input|hidden|logits");
  aspear->add_option("--csv", aspear_csv, "write the per-pair table here");

  auto* sweep = app.add_subcommand("sweep", "robustness sweeps");
  sweep->require_subcommand(1);
  auto* snoise = sweep->add_subcommand("noise", "feature noise sweep");
  auto* sratio = sweep->add_subcommand("ratio", "inductive split-ratio sweep");
  auto* scap = sweep->add_subcommand("capacity", "student capacity sweep");
  CommonOpts snoise_opts, sratio_opts, scap_opts;
  snoise_opts.attach(snoise, false);
  sratio_opts.attach(sratio, false);
  scap_opts.attach(scap, false);
  std::vector<double> noise_alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<std::uint64_t> noise_seeds{0, 1, 2, 3, 4};
  snoise->add_option("--alphas", noise_alphas, "noise levels")->delimiter(',');
  snoise->add_option("--seeds", noise_seeds, "run seeds")->delimiter(',');
  std::vector<double> ratio_list{0.2, 0.4, 0.6, 0.8};
  std::vector<std::uint64_t> ratio_seeds{0, 1, 2, 3, 4};
  sratio->add_option("--ratios", ratio_list, "inductive ratios")->delimiter(',');
  sratio->add_option("--seeds", ratio_seeds, "run seeds")->delimiter(',');
  std::vector<int> cap_layers{2, 2, 2, 3};
  std::vector<int> cap_widths{64, 128, 256, 128};
  std::vector<std::uint64_t> cap_seeds{0, 1, 2, 3, 4};
  scap->add_option("--layers", cap_layers, "layer counts, one per setting")
      ->delimiter(',');
  scap->add_option("--widths", cap_widths, "hidden widths, one per setting")
      ->delimiter(',');
  scap->add_option("--seeds", cap_seeds, "run seeds")->delimiter(',');

  auto* emb =
      app.add_subcommand("export-embeddings", "write node representations as CSV");
  CommonOpts emb_opts;
  emb_opts.attach(emb);
  std::string emb_ckpt, emb_source = "hidden", emb_out = "embeddings.csv";
  emb->add_option("--ckpt", emb_ckpt, "checkpoint path");
  emb->add_option("--source", emb_source, "input|hidden|logits");
  emb->add_option("--out", emb_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    json sbm = load_json_file(gen_config);
    GraphHandle g;
    expect_ok(pgkd_graph_generate_sbm(sbm.dump().c_str(), &g.g));
    expect_ok(pgkd_graph_save(g.g, gen_name.c_str(), gen_out.c_str()));
    char* info = nullptr;
    expect_ok(pgkd_graph_info(g.g, &info));
    json j = json::parse(info);
    pgkd_string_free(info);
    j["op"] = "gen-sbm";
    j["dir"] = gen_out;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  auto run_simple =
      [&](const CommonOpts& opts,
          const std::function<pgkd_status(pgkd_graph*, const json&, char**)>& fn) {
        json cfg = opts.build_config();
        GraphHandle g = opts.load_graph(cfg);
        char* result = nullptr;
        expect_ok(fn(g.g, cfg, &result));
        print_result(result);
        return 0;
      };

  if (split_cmd->parsed()) {
    json cfg = split_opts.build_config();
    GraphHandle g = split_opts.load_graph(cfg);
    SplitHandle s;
    expect_ok(pgkd_split_make(g.g, cfg.dump().c_str(), split_opts.seed, &s.s));
    expect_ok(pgkd_split_save(s.s, split_out.c_str()));
    char* info = nullptr;
    expect_ok(pgkd_split_info(s.s, &info));
    json j = json::parse(info);
    pgkd_string_free(info);
    j["op"] = "split";
    j["path"] = split_out;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (teach->parsed()) {
    return run_simple(teach_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_train_teacher(g, nullptr, cfg.dump().c_str(), teach_opts.seed,
                                out);
    });
  }

  if (dist->parsed()) {
    return run_simple(dist_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_distill(g, nullptr,
                          dist_teacher.empty() ? nullptr : dist_teacher.c_str(),
                          cfg.dump().c_str(), dist_opts.seed, out);
    });
  }

  if (eval->parsed()) {
    json cfg = eval_opts.build_config();
    GraphHandle g = eval_opts.load_graph(cfg);
    double acc = 0.0;
    expect_ok(pgkd_evaluate(g.g, nullptr, cfg.dump().c_str(), eval_opts.seed,
                            eval_ckpt.c_str(), eval_on.c_str(), &acc));
    json j;
    j["op"] = "evaluate";
    j["on"] = eval_on;
    j["accuracy"] = acc;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (grid->parsed()) {
    return run_simple(grid_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_grid(g, nullptr, cfg.dump().c_str(), grid_l1.data(),
                       grid_l1.size(), grid_l2.data(), grid_l2.size(),
                       grid_seeds.data(), grid_seeds.size(), out);
    });
  }

  if (adist->parsed()) {
    return run_simple(adist_opts, [&](pgkd_graph* g, const json&, char** out) {
      return pgkd_analyze_dist(g, adist_ckpt.empty() ? nullptr : adist_ckpt.c_str(),
                               adist_source.c_str(), out);
    });
  }

  if (aspear->parsed()) {
    return run_simple(aspear_opts, [&](pgkd_graph* g, const json&, char** out) {
      return pgkd_analyze_spearman(
          g, aspear_ckpt.empty() ? nullptr : aspear_ckpt.c_str(),
          aspear_source.c_str(), aspear_csv.empty() ? nullptr : aspear_csv.c_str(),
          out);
    });
  }

  if (snoise->parsed()) {
    return run_simple(snoise_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_sweep_noise(g, nullptr, cfg.dump().c_str(), noise_alphas.data(),
                              noise_alphas.size(), noise_seeds.data(),
                              noise_seeds.size(), out);
    });
  }

  if (sratio->parsed()) {
    return run_simple(sratio_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_sweep_ratio(g, cfg.dump().c_str(), ratio_list.data(),
                              ratio_list.size(), ratio_seeds.data(),
                              ratio_seeds.size(), out);
    });
  }

  if (scap->parsed()) {
    if (cap_layers.size() != cap_widths.size()) {
      std::cerr << "error: --layers and --widths must have the same length\n";
      return 1;
    }
    return run_simple(scap_opts, [&](pgkd_graph* g, const json& cfg, char** out) {
      return pgkd_sweep_capacity(g, nullptr, cfg.dump().c_str(), cap_layers.data(),
                                 cap_widths.data(), cap_layers.size(),
                                 cap_seeds.data(), cap_seeds.size(), out);
    });
  }

  if (emb->parsed()) {
    return run_simple(emb_opts, [&](pgkd_graph* g, const json&, char** out) {
      return pgkd_export_embeddings(g,
                                    emb_ckpt.empty() ? nullptr : emb_ckpt.c_str(),
                                    emb_source.c_str(), emb_out.c_str(), out);
    });
  }

  return 0;
}
