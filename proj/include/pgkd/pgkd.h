/* C API for the pgkd library: prototype-guided distillation of graph neural
 * network teachers into edge-free MLP students, plus the analysis suite.
 *
 * Conventions:
 *   - Opaque handles own their objects; free them with the matching
 *     *_free function.
 *   - Every function returns a pgkd_status; on failure pgkd_last_error()
 *     holds a message for the calling thread.
 *   - Strings returned through char** are heap-allocated; release them with
 *     pgkd_string_free.
 *   - Configuration travels as JSON text with the schema documented in the
 *     project README; unknown keys are rejected.
 */
#ifndef PGKD_PGKD_H
#define PGKD_PGKD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct pgkd_graph_s pgkd_graph;
typedef struct pgkd_split_s pgkd_split;

typedef enum pgkd_status {
  PGKD_OK = 0,
  PGKD_ERR_INVALID = 1, /* bad arguments, config, or input data */
  PGKD_ERR_RUNTIME = 2, /* training or analysis failure */
  PGKD_ERR_IO = 3       /* filesystem failure */
} pgkd_status;

const char* pgkd_version(void);

/* Message for the most recent failure on this thread. */
const char* pgkd_last_error(void);

void pgkd_string_free(char* s);

/* ---- datasets ---- */

pgkd_status pgkd_graph_load(const char* manifest_path, pgkd_graph** out);
pgkd_status pgkd_graph_generate_sbm(const char* sbm_config_json, pgkd_graph** out);
pgkd_status pgkd_graph_save(const pgkd_graph* g, const char* name,
                            const char* dir);
/* {"n":..,"d":..,"k":..,"edges":..} */
pgkd_status pgkd_graph_info(const pgkd_graph* g, char** info_json);
void pgkd_graph_free(pgkd_graph* g);

/* ---- splits ---- */

pgkd_status pgkd_split_make(const pgkd_graph* g, const char* config_json,
                            uint64_t seed, pgkd_split** out);
pgkd_status pgkd_split_load(const char* path, const pgkd_graph* g,
                            pgkd_split** out);
pgkd_status pgkd_split_save(const pgkd_split* s, const char* path);
pgkd_status pgkd_split_info(const pgkd_split* s, char** info_json);
void pgkd_split_free(pgkd_split* s);

/* ---- configuration ---- */

/* Validates config_json, materializes defaults, returns the full echo. */
pgkd_status pgkd_config_resolve(const char* config_json, char** resolved_json);
/* 16-hex-digit content digest of the resolved config (out_dir and jobs
 * excluded). */
pgkd_status pgkd_config_hash(const char* config_json, char** hash);

/* ---- training and distillation ----
 * split may be NULL: it is then derived from (config, seed).
 * Artifacts land under <out_dir>/<config_hash>/<seed>/... and result_json
 * reports what was written. */

pgkd_status pgkd_train_teacher(const pgkd_graph* g, const pgkd_split* split,
                               const char* config_json, uint64_t seed,
                               char** result_json);

/* teacher_ckpt may be NULL: a teacher is then trained under the same seed. */
pgkd_status pgkd_distill(const pgkd_graph* g, const pgkd_split* split,
                         const char* teacher_ckpt, const char* config_json,
                         uint64_t seed, char** result_json);

/* which: train|val|test|test_obs|test_ind */
pgkd_status pgkd_evaluate(const pgkd_graph* g, const pgkd_split* split,
                          const char* config_json, uint64_t seed,
                          const char* checkpoint, const char* which,
                          double* accuracy);

pgkd_status pgkd_grid(const pgkd_graph* g, const pgkd_split* split,
                      const char* config_json, const double* lambda1_grid,
                      size_t n_lambda1, const double* lambda2_grid,
                      size_t n_lambda2, const uint64_t* seeds, size_t n_seeds,
                      char** result_json);

/* ---- analysis sweeps ---- */

pgkd_status pgkd_sweep_noise(const pgkd_graph* g, const pgkd_split* split,
                             const char* config_json, const double* alphas,
                             size_t n_alphas, const uint64_t* seeds,
                             size_t n_seeds, char** result_json);

pgkd_status pgkd_sweep_ratio(const pgkd_graph* g, const char* config_json,
                             const double* ratios, size_t n_ratios,
                             const uint64_t* seeds, size_t n_seeds,
                             char** result_json);

pgkd_status pgkd_sweep_capacity(const pgkd_graph* g, const pgkd_split* split,
                                const char* config_json, const int* layers,
                                const int* widths, size_t n_settings,
                                const uint64_t* seeds, size_t n_seeds,
                                char** result_json);

/* ---- structure metrics and embedding export ----
 * source: input|hidden|logits; checkpoint may be NULL for source=input. */

pgkd_status pgkd_analyze_dist(const pgkd_graph* g, const char* checkpoint,
                              const char* source, char** result_json);

pgkd_status pgkd_analyze_spearman(const pgkd_graph* g, const char* checkpoint,
                                  const char* source, const char* out_csv,
                                  char** result_json);

pgkd_status pgkd_export_embeddings(const pgkd_graph* g, const char* checkpoint,
                                   const char* source, const char* out_path,
                                   char** result_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PGKD_PGKD_H */
