#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "pgkd/pgkd.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kSbm = R"({
  "k": 2, "nodes_per_block": 40, "p_intra": 0.2, "p_inter": 0.02,
  "feature_dim": 6, "center_separation": 3.0, "noise_std": 1.0, "seed": 7
})";

std::string base_config(const std::string& out_dir) {
  json cfg;
  cfg["dataset"]["sbm"] = json::parse(kSbm);
  cfg["split"]["train_per_class"] = 5;
  cfg["split"]["val_count"] = 10;
  cfg["teacher"]["kind"] = "gcn";
  cfg["teacher"]["hidden"] = 8;
  cfg["teacher"]["max_epochs"] = 60;
  cfg["teacher"]["patience"] = 15;
  cfg["student"]["hidden"] = 8;
  cfg["student"]["max_epochs"] = 60;
  cfg["student"]["patience"] = 15;
  cfg["distill"]["lambda1"] = 0.2;
  cfg["distill"]["lambda2"] = 0.1;
  cfg["out_dir"] = out_dir;
  return cfg.dump();
}

struct Graph {
  pgkd_graph* g = nullptr;
  ~Graph() { pgkd_graph_free(g); }
};

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  pgkd_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("c api: graph generation, info, save and load") {
  Graph g;
  REQUIRE(pgkd_graph_generate_sbm(kSbm, &g.g) == PGKD_OK);
  char* info = nullptr;
  REQUIRE(pgkd_graph_info(g.g, &info) == PGKD_OK);
  json j = json::parse(take(info));
  CHECK(j["n"] == 80);
  CHECK(j["d"] == 6);
  CHECK(j["k"] == 2);

  const std::string dir = "/tmp/pgkd_capi_ds";
  fs::remove_all(dir);
  REQUIRE(pgkd_graph_save(g.g, "sbm-test", dir.c_str()) == PGKD_OK);
  Graph g2;
  REQUIRE(pgkd_graph_load((dir + "/manifest.json").c_str(), &g2.g) == PGKD_OK);
  char* info2 = nullptr;
  REQUIRE(pgkd_graph_info(g2.g, &info2) == PGKD_OK);
  CHECK(json::parse(take(info2))["edges"] == j["edges"]);
  fs::remove_all(dir);
}

TEST_CASE("c api: errors carry messages and invalid status") {
  Graph g;
  CHECK(pgkd_graph_load("/nonexistent/manifest.json", &g.g) == PGKD_ERR_IO);
  CHECK(std::strlen(pgkd_last_error()) > 0);

  CHECK(pgkd_graph_generate_sbm("{\"k\": -3}", &g.g) == PGKD_ERR_INVALID);
  CHECK(pgkd_graph_generate_sbm("not json", &g.g) == PGKD_ERR_INVALID);
  CHECK(pgkd_graph_generate_sbm(nullptr, &g.g) == PGKD_ERR_INVALID);
}

TEST_CASE("c api: config resolve rejects unknown keys with their path") {
  char* out = nullptr;
  json cfg = json::parse(base_config("/tmp/out"));
  cfg["distill"]["lambda3"] = 1.0;
  CHECK(pgkd_config_resolve(cfg.dump().c_str(), &out) == PGKD_ERR_INVALID);
  CHECK(std::string(pgkd_last_error()).find("distill.lambda3") != std::string::npos);

  json ok = json::parse(base_config("/tmp/out"));
  REQUIRE(pgkd_config_resolve(ok.dump().c_str(), &out) == PGKD_OK);
  json resolved = json::parse(take(out));
  CHECK(resolved["distill"]["tau2"] == 10.0);  // defaults materialized
  CHECK(resolved["teacher"]["lr"] == 0.01);
}

TEST_CASE("c api: config hash ignores out_dir and jobs") {
  json a = json::parse(base_config("/tmp/out_a"));
  json b = json::parse(base_config("/tmp/out_b"));
  b["jobs"] = 7;
  char* ha = nullptr;
  char* hb = nullptr;
  REQUIRE(pgkd_config_hash(a.dump().c_str(), &ha) == PGKD_OK);
  REQUIRE(pgkd_config_hash(b.dump().c_str(), &hb) == PGKD_OK);
  std::string sa = take(ha), sb = take(hb);
  CHECK(sa == sb);
  CHECK(sa.size() == 16);

  json c = json::parse(base_config("/tmp/out_a"));
  c["distill"]["lambda1"] = 0.4;
  char* hc = nullptr;
  REQUIRE(pgkd_config_hash(c.dump().c_str(), &hc) == PGKD_OK);
  CHECK(take(hc) != sa);
}

TEST_CASE("c api: split make, save, load, info") {
  Graph g;
  REQUIRE(pgkd_graph_generate_sbm(kSbm, &g.g) == PGKD_OK);
  const std::string cfg = base_config("/tmp/pgkd_capi_out");

  pgkd_split* s = nullptr;
  REQUIRE(pgkd_split_make(g.g, cfg.c_str(), 3, &s) == PGKD_OK);
  char* info = nullptr;
  REQUIRE(pgkd_split_info(s, &info) == PGKD_OK);
  json j = json::parse(take(info));
  CHECK(j["train"] == 10);
  CHECK(j["val"] == 10);
  CHECK(j["test_obs"] == 60);

  const std::string path = "/tmp/pgkd_capi_split.json";
  REQUIRE(pgkd_split_save(s, path.c_str()) == PGKD_OK);
  pgkd_split* s2 = nullptr;
  REQUIRE(pgkd_split_load(path.c_str(), g.g, &s2) == PGKD_OK);
  char* info2 = nullptr;
  REQUIRE(pgkd_split_info(s2, &info2) == PGKD_OK);
  CHECK(json::parse(take(info2))["train"] == 10);
  pgkd_split_free(s);
  pgkd_split_free(s2);
  fs::remove(path);
}

TEST_CASE("c api: teacher, distillation, evaluation, analysis round trip") {
  Graph g;
  REQUIRE(pgkd_graph_generate_sbm(kSbm, &g.g) == PGKD_OK);
  const std::string out_dir = "/tmp/pgkd_capi_run";
  fs::remove_all(out_dir);
  const std::string cfg = base_config(out_dir);

  char* tres = nullptr;
  REQUIRE(pgkd_train_teacher(g.g, nullptr, cfg.c_str(), 1, &tres) == PGKD_OK);
  json teacher = json::parse(take(tres));
  const std::string teacher_ckpt = teacher["checkpoint"];
  CHECK(fs::exists(teacher_ckpt));
  CHECK(teacher["test_acc"].get<double>() > 0.8);

  char* dres = nullptr;
  REQUIRE(pgkd_distill(g.g, nullptr, teacher_ckpt.c_str(), cfg.c_str(), 1, &dres) ==
          PGKD_OK);
  json student = json::parse(take(dres));
  const std::string student_ckpt = student["checkpoint"];
  CHECK(student["objective"] == "pgkd");
  CHECK(fs::exists(student["run_dir"].get<std::string>() + "/metrics.jsonl"));

  double acc = 0.0;
  REQUIRE(pgkd_evaluate(g.g, nullptr, cfg.c_str(), 1, student_ckpt.c_str(), "test",
                        &acc) == PGKD_OK);
  CHECK(acc == student["test_acc"].get<double>());
  CHECK(pgkd_evaluate(g.g, nullptr, cfg.c_str(), 1, student_ckpt.c_str(), "nope",
                      &acc) == PGKD_ERR_INVALID);

  char* ares = nullptr;
  REQUIRE(pgkd_analyze_dist(g.g, nullptr, "input", &ares) == PGKD_OK);
  json dist = json::parse(take(ares));
  CHECK(dist["avg_connected_l2"].get<double>() > 0.0);

  char* sres = nullptr;
  REQUIRE(pgkd_analyze_spearman(g.g, teacher_ckpt.c_str(), "hidden", nullptr,
                                &sres) == PGKD_OK);
  json spear = json::parse(take(sres));
  CHECK(spear.contains("spearman_rho"));

  char* eres = nullptr;
  const std::string emb_path = out_dir + "/emb.csv";
  REQUIRE(pgkd_export_embeddings(g.g, student_ckpt.c_str(), "hidden",
                                 emb_path.c_str(), &eres) == PGKD_OK);
  json emb = json::parse(take(eres));
  CHECK(emb["rows"] == 80);
  CHECK(fs::exists(emb_path));

  fs::remove_all(out_dir);
}
