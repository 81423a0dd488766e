#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = PGKD_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run(const std::string& args, const std::string& tag) {
  const std::string out_file = "/tmp/pgkd_cli_" + tag + ".out";
  const std::string cmd = kCli + " " + args + " > " + out_file + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stdout_text = ss.str();
  fs::remove(out_file);
  return r;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  Workspace() : dir("/tmp/pgkd_cli_ws") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream sbm(dir / "sbm.json");
    sbm << R"({"k": 2, "nodes_per_block": 40, "p_intra": 0.2, "p_inter": 0.02,
               "feature_dim": 6, "center_separation": 3.0, "seed": 5})";
    std::ofstream cfg(dir / "config.json");
    cfg << R"({
      "dataset": {"manifest": ")" << (dir / "ds" / "manifest.json").string() << R"("},
      "split": {"train_per_class": 5, "val_count": 10},
      "teacher": {"kind": "gcn", "hidden": 8, "max_epochs": 50, "patience": 12},
      "student": {"hidden": 8, "max_epochs": 50, "patience": 12},
      "distill": {"lambda1": 0.2, "lambda2": 0.1}
    })";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

}  // namespace

TEST_CASE("cli: end-to-end workflow and the documented exit codes") {
  Workspace ws;

  // gen-sbm
  RunResult gen = run("gen-sbm --sbm-config " + ws.path("sbm.json") + " --out " +
                          ws.path("ds") + " --name toy",
                      "gen");
  REQUIRE(gen.exit_code == 0);
  CHECK(fs::exists(ws.path("ds/manifest.json")));

  // split
  RunResult split = run("split --config " + ws.path("config.json") + " --seed 1 " +
                            "--out " + ws.path("split.json"),
                        "split");
  REQUIRE(split.exit_code == 0);
  CHECK(fs::exists(ws.path("split.json")));

  // train-teacher
  RunResult teach = run("train-teacher --config " + ws.path("config.json") +
                            " --seed 1 --out-dir " + ws.path("out"),
                        "teach");
  REQUIRE(teach.exit_code == 0);
  json tj = json::parse(teach.stdout_text);
  const std::string teacher_ckpt = tj["checkpoint"];
  CHECK(fs::exists(teacher_ckpt));

  // distill --glnn vs explicit zero lambdas: identical outputs
  const std::string base = " --config " + ws.path("config.json") + " --seed 1 " +
                           "--teacher " + teacher_ckpt;
  RunResult d1 = run("distill" + base + " --glnn --out-dir " + ws.path("g1"), "d1");
  RunResult d2 = run("distill" + base + " --lambda1 0 --lambda2 0 --out-dir " +
                         ws.path("g2"),
                     "d2");
  REQUIRE(d1.exit_code == 0);
  REQUIRE(d2.exit_code == 0);
  json j1 = json::parse(d1.stdout_text);
  json j2 = json::parse(d2.stdout_text);
  CHECK(j1["objective"] == "glnn");
  CHECK(j2["objective"] == "glnn");
  CHECK(j1["config_hash"] == j2["config_hash"]);
  const std::string rel = json::parse(d1.stdout_text)["run_dir"];
  std::string rel2 = j2["run_dir"];
  CHECK(file_bytes(rel + "/metrics.jsonl") == file_bytes(rel2 + "/metrics.jsonl"));
  CHECK(file_bytes(rel + "/student.ckpt") == file_bytes(rel2 + "/student.ckpt"));

  // evaluate the student checkpoint
  RunResult ev = run("evaluate --config " + ws.path("config.json") +
                         " --seed 1 --ckpt " + j1["checkpoint"].get<std::string>() +
                         " --on test",
                     "eval");
  REQUIRE(ev.exit_code == 0);
  CHECK(json::parse(ev.stdout_text)["accuracy"].get<double>() > 0.5);

  // analyze on input features
  RunResult an = run("analyze dist --config " + ws.path("config.json") +
                         " --source input",
                     "an");
  REQUIRE(an.exit_code == 0);
  CHECK(json::parse(an.stdout_text)["avg_connected_l2"].get<double>() > 0.0);

  // export embeddings
  RunResult em = run("export-embeddings --config " + ws.path("config.json") +
                         " --ckpt " + teacher_ckpt + " --source hidden --out " +
                         ws.path("emb.csv"),
                     "emb");
  REQUIRE(em.exit_code == 0);
  CHECK(fs::exists(ws.path("emb.csv")));
}

TEST_CASE("cli: validation failures exit 1 naming the offender") {
  Workspace ws;
  RunResult gen = run("gen-sbm --sbm-config " + ws.path("sbm.json") + " --out " +
                          ws.path("ds") + " --name toy",
                      "gen2");
  REQUIRE(gen.exit_code == 0);

  std::ofstream bad(ws.path("bad.json"));
  bad << R"({
    "dataset": {"manifest": ")" << ws.path("ds/manifest.json") << R"("},
    "distill": {"lambda_one": 0.1}
  })";
  bad.close();

  RunResult r = run("train-teacher --config " + ws.path("bad.json") + " --seed 0",
                    "bad");
  CHECK(r.exit_code == 1);
  CHECK(r.stdout_text.find("distill.lambda_one") != std::string::npos);

  RunResult missing =
      run("train-teacher --dataset /nonexistent/manifest.json --seed 0", "miss");
  CHECK(missing.exit_code == 2);  // io failure
}

TEST_CASE("cli: identical invocations give byte-identical metrics") {
  Workspace ws;
  RunResult gen = run("gen-sbm --sbm-config " + ws.path("sbm.json") + " --out " +
                          ws.path("ds") + " --name toy",
                      "gen3");
  REQUIRE(gen.exit_code == 0);

  const std::string base = "distill --config " + ws.path("config.json") +
                           " --seed 7 --student-epochs 40";
  RunResult a = run(base + " --out-dir " + ws.path("rep_a"), "rep_a");
  RunResult b = run(base + " --out-dir " + ws.path("rep_b"), "rep_b");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  json ja = json::parse(a.stdout_text);
  json jb = json::parse(b.stdout_text);
  std::string dir_a = ja["run_dir"], dir_b = jb["run_dir"];
  CHECK(file_bytes(dir_a + "/metrics.jsonl") == file_bytes(dir_b + "/metrics.jsonl"));
  CHECK(file_bytes(dir_a + "/result.json") == file_bytes(dir_b + "/result.json"));
  CHECK(file_bytes(dir_a + "/student.ckpt") == file_bytes(dir_b + "/student.ckpt"));
}
