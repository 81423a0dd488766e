#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "pgkd/checkpoint.hpp"
#include "pgkd/dataset.hpp"
#include "pgkd/error.hpp"
#include "pgkd/models.hpp"

using namespace pgkd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& rel) const { return (path / rel).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

void write_toy_manifest(const TempDir& dir, const std::string& edges_body) {
  write_file(dir.file("features.csv"), "1,0\n0,1\n0.5,0.5\n");
  write_file(dir.file("labels.csv"), "0,0\n1,1\n2,0\n");
  write_file(dir.file("edges.csv"), edges_body);
  write_file(dir.file("manifest.json"), R"({
    "format_version": 1, "name": "toy", "n": 3, "d": 2, "k": 2,
    "features": "features.csv", "labels": "labels.csv", "edges": "edges.csv"
  })");
}

}  // namespace

TEST_CASE("toy dataset round trip through the manifest") {
  TempDir dir("pgkd_toy_ds");
  write_toy_manifest(dir, "0,1\n1,2\n");
  Graph g = load_dataset(dir.file("manifest.json"));
  CHECK(g.n == 3);
  CHECK(g.d == 2);
  CHECK(g.k == 2);
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(g.features.at(2, 0) == 0.5);
  CHECK(g.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("load errors carry file and line") {
  TempDir dir("pgkd_bad_ds");

  SUBCASE("dangling edge endpoint") {
    write_toy_manifest(dir, "0,1\n1,99\n");
    try {
      load_dataset(dir.file("manifest.json"));
      FAIL("expected a load error");
    } catch (const Error& e) {
      std::string msg = e.what();
      CHECK(msg.find("edges.csv:2") != std::string::npos);
      CHECK(msg.find("99") != std::string::npos);
      CHECK(e.kind() == ErrorKind::data);
    }
  }

  SUBCASE("non-numeric cell") {
    write_toy_manifest(dir, "0,1\n");
    write_file(dir.file("features.csv"), "1,0\n0,zap\n0.5,0.5\n");
    try {
      load_dataset(dir.file("manifest.json"));
      FAIL("expected a load error");
    } catch (const Error& e) {
      std::string msg = e.what();
      CHECK(msg.find("features.csv:2") != std::string::npos);
      CHECK(msg.find("zap") != std::string::npos);
    }
  }

  SUBCASE("shape mismatch against declared n") {
    write_toy_manifest(dir, "0,1\n");
    write_file(dir.file("features.csv"), "1,0\n0,1\n");
    CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), Error);
  }

  SUBCASE("missing label") {
    write_toy_manifest(dir, "0,1\n");
    write_file(dir.file("labels.csv"), "0,0\n1,1\n");
    CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), Error);
  }
}

TEST_CASE("save_dataset then load_dataset reproduces the graph") {
  SbmConfig cfg;
  cfg.k = 3;
  cfg.nodes_per_block = 15;
  cfg.p_intra = 0.3;
  cfg.p_inter = 0.02;
  cfg.feature_dim = 5;
  cfg.seed = 4;
  Graph g = generate_sbm(cfg);

  TempDir dir("pgkd_save_ds");
  save_dataset(g, "sbm45", dir.path.string());
  Graph g2 = load_dataset(dir.file("manifest.json"));
  CHECK(g2.n == g.n);
  CHECK(g2.edges == g.edges);
  CHECK(g2.labels == g.labels);
  CHECK(g2.features == g.features);  // 17 significant digits round-trip
}

TEST_CASE("sbm complete and empty blocks") {
  SbmConfig cfg;
  cfg.k = 2;
  cfg.nodes_per_block = 3;
  cfg.p_intra = 1.0;
  cfg.p_inter = 0.0;
  cfg.feature_dim = 2;
  Graph g = generate_sbm(cfg);
  CHECK(g.edges.size() == 6);  // two disjoint triangles
  EdgeClassTally t = classify_edges(g);
  CHECK(t.intra_total() == 6);
  CHECK(t.inter_total() == 0);

  cfg.p_intra = 0.0;
  CHECK(generate_sbm(cfg).edges.empty());
}

TEST_CASE("sbm intra-edge counts stay within 4 sigma of the binomial mean") {
  SbmConfig cfg;
  cfg.k = 2;
  cfg.nodes_per_block = 10;
  cfg.p_intra = 0.5;
  cfg.p_inter = 0.0;
  cfg.feature_dim = 2;
  long pairs_per_seed = 2 * (10 * 9 / 2);  // 90
  long total = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = s;
    total += static_cast<long>(generate_sbm(cfg).edges.size());
  }
  const double mean = seeds * pairs_per_seed * 0.5;
  const double sigma = std::sqrt(seeds * pairs_per_seed * 0.25);
  CHECK(std::fabs(total - mean) <= 4.0 * sigma);
}

TEST_CASE("sbm is bit-identical per seed and respects block sizes") {
  SbmConfig cfg;
  cfg.k = 3;
  cfg.block_sizes = {5, 7, 9};
  cfg.p_intra = 0.4;
  cfg.p_inter = 0.05;
  cfg.feature_dim = 3;
  cfg.seed = 123;
  Graph a = generate_sbm(cfg);
  Graph b = generate_sbm(cfg);
  CHECK(a.n == 21);
  CHECK(a.features == b.features);
  CHECK(a.edges == b.edges);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 2) == 9);

  cfg.seed = 124;
  Graph c = generate_sbm(cfg);
  CHECK(a.edges != c.edges);
}

TEST_CASE("sbm chain affinity decays with class distance") {
  SbmConfig cfg;
  cfg.k = 4;
  cfg.nodes_per_block = 10;
  cfg.p_intra = 0.5;
  cfg.p_inter = 0.2;
  cfg.affinity = Affinity::chain;
  cfg.affinity_decay = 1.0;
  CHECK(cfg.edge_probability(0, 0) == 0.5);
  CHECK(cfg.edge_probability(0, 1) == doctest::Approx(0.2));
  CHECK(cfg.edge_probability(0, 3) == doctest::Approx(0.2 * std::exp(-2.0)));
  CHECK(cfg.edge_probability(3, 0) == cfg.edge_probability(0, 3));
}

TEST_CASE("sbm config validation") {
  SbmConfig cfg;
  cfg.p_intra = 1.5;
  CHECK_THROWS_AS(generate_sbm(cfg), Error);
  cfg.p_intra = 0.5;
  cfg.block_sizes = {3};
  cfg.k = 2;
  CHECK_THROWS_AS(generate_sbm(cfg), Error);
}

TEST_CASE("checkpoint round trip is bit-identical") {
  ModelParams p = init_params(ModelKind::sage, {7, 5, 3}, 99);
  TempDir dir("pgkd_ckpt");
  const std::string path = dir.file("model.ckpt");
  nlohmann::json meta;
  meta["note"] = "round-trip";
  save_checkpoint(p.to_checkpoint(meta), path);
  Checkpoint c = load_checkpoint(path);
  ModelParams q = ModelParams::from_checkpoint(c);
  CHECK(q.kind == ModelKind::sage);
  CHECK(q.dims == p.dims);
  REQUIRE(q.tensors.size() == p.tensors.size());
  for (size_t i = 0; i < p.tensors.size(); ++i) {
    CHECK(q.tensors[i].first == p.tensors[i].first);
    CHECK(q.tensors[i].second == p.tensors[i].second);
  }
  CHECK(c.meta.at("note") == "round-trip");
}

TEST_CASE("checkpoint corruption and version errors") {
  ModelParams p = init_params(ModelKind::mlp, {4, 3, 2}, 1);
  TempDir dir("pgkd_ckpt_bad");
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(p.to_checkpoint(), path);

  SUBCASE("truncated payload") {
    std::string data;
    {
      std::ifstream in(path, std::ios::binary);
      data.assign(std::istreambuf_iterator<char>(in), {});
    }
    write_file(path, data.substr(0, data.size() - 16));
    CHECK_THROWS_AS(load_checkpoint(path), Error);
  }

  SUBCASE("wrong magic / format version") {
    std::string data;
    {
      std::ifstream in(path, std::ios::binary);
      data.assign(std::istreambuf_iterator<char>(in), {});
    }
    data[7] = '9';
    write_file(path, data);
    try {
      load_checkpoint(path);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }

  SUBCASE("trailing garbage") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "junk";
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), Error);
  }
}
