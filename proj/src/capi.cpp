#include "pgkd/pgkd.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "pgkd/error.hpp"
#include "pgkd/experiment.hpp"

using nlohmann::json;

struct pgkd_graph_s {
  pgkd::Graph graph;
};

struct pgkd_split_s {
  pgkd::SplitSpec split;
};

namespace {

thread_local std::string g_last_error;

pgkd_status status_of(const pgkd::Error& e) {
  switch (e.kind()) {
    case pgkd::ErrorKind::io:
      return PGKD_ERR_IO;
    case pgkd::ErrorKind::runtime:
      return PGKD_ERR_RUNTIME;
    default:
      return PGKD_ERR_INVALID;
  }
}

template <typename Fn>
pgkd_status guarded(Fn&& fn) {
  try {
    fn();
    return PGKD_OK;
  } catch (const pgkd::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PGKD_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return PGKD_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  pgkd::check(cond, pgkd::ErrorKind::invalid_argument, what);
}

pgkd::ExperimentConfig parse_config(const char* config_json) {
  require(config_json != nullptr, "config_json must not be null");
  json j;
  try {
    j = json::parse(config_json);
  } catch (const json::exception& e) {
    pgkd::fail(pgkd::ErrorKind::invalid_argument, "config: invalid JSON: ",
               e.what());
  }
  return pgkd::ExperimentConfig::from_json(j);
}

std::vector<std::uint64_t> seed_vector(const uint64_t* seeds, size_t n) {
  require(seeds != nullptr && n > 0, "at least one seed is required");
  return std::vector<std::uint64_t>(seeds, seeds + n);
}

}  // namespace

extern "C" {

const char* pgkd_version(void) { return "1.0.0"; }

const char* pgkd_last_error(void) { return g_last_error.c_str(); }

void pgkd_string_free(char* s) { std::free(s); }

pgkd_status pgkd_graph_load(const char* manifest_path, pgkd_graph** out) {
  return guarded([&] {
    require(manifest_path && out, "manifest_path and out must not be null");
    auto* h = new pgkd_graph_s{pgkd::load_dataset(manifest_path)};
    *out = h;
  });
}

pgkd_status pgkd_graph_generate_sbm(const char* sbm_config_json, pgkd_graph** out) {
  return guarded([&] {
    require(sbm_config_json && out, "sbm_config_json and out must not be null");
    json j;
    try {
      j = json::parse(sbm_config_json);
    } catch (const json::exception& e) {
      pgkd::fail(pgkd::ErrorKind::invalid_argument, "sbm config: invalid JSON: ",
                 e.what());
    }
    pgkd::SbmConfig cfg = pgkd::sbm_config_from_json(j, "sbm");
    auto* h = new pgkd_graph_s{pgkd::generate_sbm(cfg)};
    *out = h;
  });
}

pgkd_status pgkd_graph_save(const pgkd_graph* g, const char* name,
                            const char* dir) {
  return guarded([&] {
    require(g && name && dir, "graph, name and dir must not be null");
    pgkd::save_dataset(g->graph, name, dir);
  });
}

pgkd_status pgkd_graph_info(const pgkd_graph* g, char** info_json) {
  return guarded([&] {
    require(g && info_json, "graph and info_json must not be null");
    json j;
    j["n"] = g->graph.n;
    j["d"] = g->graph.d;
    j["k"] = g->graph.k;
    j["edges"] = g->graph.edges.size();
    *info_json = dup_string(j.dump());
  });
}

void pgkd_graph_free(pgkd_graph* g) { delete g; }

pgkd_status pgkd_split_make(const pgkd_graph* g, const char* config_json,
                            uint64_t seed, pgkd_split** out) {
  return guarded([&] {
    require(g && out, "graph and out must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    auto* h = new pgkd_split_s{pgkd::resolve_split(g->graph, cfg, seed)};
    *out = h;
  });
}

pgkd_status pgkd_split_load(const char* path, const pgkd_graph* g,
                            pgkd_split** out) {
  return guarded([&] {
    require(path && g && out, "path, graph and out must not be null");
    std::ifstream in(path);
    pgkd::check(in.good(), pgkd::ErrorKind::io, "cannot open ", path);
    json j = json::parse(in, nullptr, false);
    pgkd::check(!j.is_discarded(), pgkd::ErrorKind::data, path, ": invalid JSON");
    j.erase("seed");
    j.erase("config_hash");
    auto* h = new pgkd_split_s{pgkd::split_spec_from_json(j, g->graph.n)};
    *out = h;
  });
}

pgkd_status pgkd_split_save(const pgkd_split* s, const char* path) {
  return guarded([&] {
    require(s && path, "split and path must not be null");
    std::ofstream out(path);
    pgkd::check(out.good(), pgkd::ErrorKind::io, "cannot write ", path);
    out << pgkd::split_to_json(s->split).dump(2) << '\n';
  });
}

pgkd_status pgkd_split_info(const pgkd_split* s, char** info_json) {
  return guarded([&] {
    require(s && info_json, "split and info_json must not be null");
    json j;
    j["setting"] = s->split.setting == pgkd::Setting::transductive
                       ? "transductive"
                       : "inductive";
    j["train"] = s->split.train.size();
    j["val"] = s->split.val.size();
    j["test_obs"] = s->split.test_obs.size();
    j["test_ind"] = s->split.test_ind.size();
    j["ind_ratio"] = s->split.ind_ratio;
    *info_json = dup_string(j.dump());
  });
}

void pgkd_split_free(pgkd_split* s) { delete s; }

pgkd_status pgkd_config_resolve(const char* config_json, char** resolved_json) {
  return guarded([&] {
    require(resolved_json != nullptr, "resolved_json must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    *resolved_json = dup_string(cfg.echo().dump());
  });
}

pgkd_status pgkd_config_hash(const char* config_json, char** hash) {
  return guarded([&] {
    require(hash != nullptr, "hash must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    *hash = dup_string(cfg.hash());
  });
}

pgkd_status pgkd_train_teacher(const pgkd_graph* g, const pgkd_split* split,
                               const char* config_json, uint64_t seed,
                               char** result_json) {
  return guarded([&] {
    require(g != nullptr, "graph must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    json res = pgkd::train_teacher_op(g->graph, cfg, seed,
                                      split ? &split->split : nullptr);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_distill(const pgkd_graph* g, const pgkd_split* split,
                         const char* teacher_ckpt, const char* config_json,
                         uint64_t seed, char** result_json) {
  return guarded([&] {
    require(g != nullptr, "graph must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    json res = pgkd::distill_op(g->graph, cfg, seed,
                                teacher_ckpt ? teacher_ckpt : "",
                                split ? &split->split : nullptr);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_evaluate(const pgkd_graph* g, const pgkd_split* split,
                          const char* config_json, uint64_t seed,
                          const char* checkpoint, const char* which,
                          double* accuracy) {
  return guarded([&] {
    require(g && checkpoint && which && accuracy,
            "graph, checkpoint, which and accuracy must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    *accuracy = pgkd::evaluate_op(g->graph, cfg, seed, checkpoint, which,
                                  split ? &split->split : nullptr);
  });
}

pgkd_status pgkd_grid(const pgkd_graph* g, const pgkd_split* split,
                      const char* config_json, const double* lambda1_grid,
                      size_t n_lambda1, const double* lambda2_grid,
                      size_t n_lambda2, const uint64_t* seeds, size_t n_seeds,
                      char** result_json) {
  return guarded([&] {
    require(g != nullptr, "graph must not be null");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    std::vector<double> l1(lambda1_grid, lambda1_grid + n_lambda1);
    std::vector<double> l2(lambda2_grid, lambda2_grid + n_lambda2);
    json res = pgkd::grid_op(g->graph, cfg, l1, l2, seed_vector(seeds, n_seeds),
                             split ? &split->split : nullptr);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_sweep_noise(const pgkd_graph* g, const pgkd_split* split,
                             const char* config_json, const double* alphas,
                             size_t n_alphas, const uint64_t* seeds,
                             size_t n_seeds, char** result_json) {
  return guarded([&] {
    require(g && alphas && n_alphas > 0, "graph and alphas must not be empty");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    std::vector<double> a(alphas, alphas + n_alphas);
    json res = pgkd::sweep_noise_op(g->graph, cfg, a, seed_vector(seeds, n_seeds),
                                    split ? &split->split : nullptr);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_sweep_ratio(const pgkd_graph* g, const char* config_json,
                             const double* ratios, size_t n_ratios,
                             const uint64_t* seeds, size_t n_seeds,
                             char** result_json) {
  return guarded([&] {
    require(g && ratios && n_ratios > 0, "graph and ratios must not be empty");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    std::vector<double> r(ratios, ratios + n_ratios);
    json res = pgkd::sweep_ratio_op(g->graph, cfg, r, seed_vector(seeds, n_seeds));
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_sweep_capacity(const pgkd_graph* g, const pgkd_split* split,
                                const char* config_json, const int* layers,
                                const int* widths, size_t n_settings,
                                const uint64_t* seeds, size_t n_seeds,
                                char** result_json) {
  return guarded([&] {
    require(g && layers && widths && n_settings > 0,
            "graph and capacity settings must not be empty");
    pgkd::ExperimentConfig cfg = parse_config(config_json);
    std::vector<std::pair<int, int>> settings;
    for (size_t i = 0; i < n_settings; ++i)
      settings.emplace_back(layers[i], widths[i]);
    json res = pgkd::sweep_capacity_op(g->graph, cfg, settings,
                                       seed_vector(seeds, n_seeds),
                                       split ? &split->split : nullptr);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_analyze_dist(const pgkd_graph* g, const char* checkpoint,
                              const char* source, char** result_json) {
  return guarded([&] {
    require(g && source, "graph and source must not be null");
    json res = pgkd::analyze_dist_op(g->graph, checkpoint ? checkpoint : "",
                                     source);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_analyze_spearman(const pgkd_graph* g, const char* checkpoint,
                                  const char* source, const char* out_csv,
                                  char** result_json) {
  return guarded([&] {
    require(g && source, "graph and source must not be null");
    json res = pgkd::analyze_spearman_op(g->graph, checkpoint ? checkpoint : "",
                                         source, out_csv ? out_csv : "");
    if (result_json) *result_json = dup_string(res.dump());
  });
}

pgkd_status pgkd_export_embeddings(const pgkd_graph* g, const char* checkpoint,
                                   const char* source, const char* out_path,
                                   char** result_json) {
  return guarded([&] {
    require(g && source && out_path,
            "graph, source and out_path must not be null");
    json res = pgkd::export_embeddings_op(g->graph, checkpoint ? checkpoint : "",
                                          source, out_path);
    if (result_json) *result_json = dup_string(res.dump());
  });
}

}  // extern "C"
