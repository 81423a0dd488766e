#include "pgkd/dataset.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pgkd/error.hpp"
#include "pgkd/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pgkd {

namespace {

std::string resolve(const fs::path& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return p.string();
  return (base_dir / p).lexically_normal().string();
}

// Line-oriented reader skipping blanks and '#' comments, tracking the
// physical line number for error messages.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    check(in_.good(), ErrorKind::io, "cannot open ", path);
  }
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t start = line.find_first_not_of(" \t");
      if (start == std::string::npos) continue;
      if (line[start] == '#') continue;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail_here(const std::string& msg) const {
    fail(ErrorKind::data, path_, ":", lineno_, ": ", msg);
  }
  int lineno() const { return lineno_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  int lineno_ = 0;
};

std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

double parse_double(const LineReader& r, const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    r.fail_here("non-numeric cell '" + s + "'");
  return v;
}

long parse_long(const LineReader& r, const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  long v = 0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    r.fail_here("non-integer cell '" + s + "'");
  return v;
}

void write_double(std::ostream& os, double v) {
  char buf[40];
  int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  os.write(buf, len);
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  check(in.good(), ErrorKind::io, "cannot open manifest ", manifest_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, manifest_path, ": invalid JSON: ", e.what());
  }
  check(j.value("format_version", 0) == 1, ErrorKind::data, manifest_path,
        ": unsupported format_version");
  DatasetManifest m;
  fs::path base = fs::path(manifest_path).parent_path();
  try {
    m.name = j.at("name").get<std::string>();
    m.n = j.at("n").get<int>();
    m.d = j.at("d").get<int>();
    m.k = j.at("k").get<int>();
    m.features_path = resolve(base, j.at("features").get<std::string>());
    m.labels_path = resolve(base, j.at("labels").get<std::string>());
    m.edges_path = resolve(base, j.at("edges").get<std::string>());
    if (j.contains("splits")) {
      const json& s = j.at("splits");
      m.train_ids_path = resolve(base, s.at("train").get<std::string>());
      m.val_ids_path = resolve(base, s.at("val").get<std::string>());
      m.test_ids_path = resolve(base, s.at("test").get<std::string>());
    }
    m.feature_norm = j.value("feature_norm", "none");
  } catch (const json::exception& e) {
    fail(ErrorKind::data, manifest_path, ": ", e.what());
  }
  check(m.feature_norm == "none" || m.feature_norm == "row_l1", ErrorKind::data,
        manifest_path, ": unknown feature_norm '", m.feature_norm, "'");
  check(m.n > 0 && m.d > 0 && m.k > 0, ErrorKind::data, manifest_path,
        ": n, d, k must be positive");
  return m;
}

Graph load_dataset(const DatasetManifest& m) {
  Matrix features(m.n, m.d);
  {
    LineReader r(m.features_path);
    std::string line;
    int row = 0;
    while (r.next(line)) {
      if (row >= m.n) r.fail_here("more feature rows than declared n=" + std::to_string(m.n));
      auto fields = split_fields(line);
      if (static_cast<int>(fields.size()) != m.d)
        r.fail_here("expected " + std::to_string(m.d) + " columns, got " +
                    std::to_string(fields.size()));
      double* dst = features.row(row);
      for (int c = 0; c < m.d; ++c) dst[c] = parse_double(r, fields[c]);
      ++row;
    }
    check(row == m.n, ErrorKind::data, m.features_path, ": expected ", m.n,
          " rows, got ", row);
  }
  if (m.feature_norm == "row_l1") {
    for (int i = 0; i < m.n; ++i) {
      double* row = features.row(i);
      double s = 0.0;
      for (int c = 0; c < m.d; ++c) s += std::fabs(row[c]);
      if (s > 0.0)
        for (int c = 0; c < m.d; ++c) row[c] /= s;
    }
  }

  std::vector<int> labels(m.n, -1);
  {
    LineReader r(m.labels_path);
    std::string line;
    while (r.next(line)) {
      auto fields = split_fields(line);
      if (fields.size() != 2) r.fail_here("expected node_id,class_id");
      long id = parse_long(r, fields[0]);
      long cls = parse_long(r, fields[1]);
      if (id < 0 || id >= m.n)
        r.fail_here("node id " + std::to_string(id) + " out of range [0," +
                    std::to_string(m.n) + ")");
      if (labels[id] != -1) r.fail_here("duplicate label for node " + std::to_string(id));
      if (cls < 0 || cls >= m.k)
        r.fail_here("class id " + std::to_string(cls) + " out of range [0," +
                    std::to_string(m.k) + ")");
      labels[id] = static_cast<int>(cls);
    }
    for (int i = 0; i < m.n; ++i)
      check(labels[i] != -1, ErrorKind::data, m.labels_path, ": node ", i,
            " has no label");
  }

  std::vector<std::pair<int, int>> edges;
  {
    LineReader r(m.edges_path);
    std::string line;
    while (r.next(line)) {
      auto fields = split_fields(line);
      if (fields.size() != 2) r.fail_here("expected src,dst");
      long u = parse_long(r, fields[0]);
      long v = parse_long(r, fields[1]);
      if (u < 0 || u >= m.n || v < 0 || v >= m.n)
        r.fail_here("edge endpoint (" + std::to_string(u) + "," + std::to_string(v) +
                    ") out of range [0," + std::to_string(m.n) + ")");
      edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    }
  }
  return Graph::build(m.k, std::move(features), std::move(labels), std::move(edges));
}

Graph load_dataset(const std::string& manifest_path) {
  return load_dataset(DatasetManifest::load(manifest_path));
}

std::array<std::vector<int>, 3> load_split_ids(const DatasetManifest& m) {
  check(m.has_split_files(), ErrorKind::contract, "manifest '", m.name,
        "' declares no split files");
  auto read_ids = [&](const std::string& path) {
    LineReader r(path);
    std::vector<int> ids;
    std::string line;
    while (r.next(line)) {
      long id = parse_long(r, line);
      if (id < 0 || id >= m.n)
        r.fail_here("node id " + std::to_string(id) + " out of range");
      ids.push_back(static_cast<int>(id));
    }
    return ids;
  };
  return {read_ids(m.train_ids_path), read_ids(m.val_ids_path),
          read_ids(m.test_ids_path)};
}

void save_dataset(const Graph& g, const std::string& name, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "features.csv");
    check(out.good(), ErrorKind::io, "cannot write features.csv in ", dir);
    for (int i = 0; i < g.n; ++i) {
      const double* row = g.features.row(i);
      for (int c = 0; c < g.d; ++c) {
        if (c) out << ',';
        write_double(out, row[c]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "labels.csv");
    check(out.good(), ErrorKind::io, "cannot write labels.csv in ", dir);
    for (int i = 0; i < g.n; ++i) out << i << ',' << g.labels[i] << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "edges.csv");
    check(out.good(), ErrorKind::io, "cannot write edges.csv in ", dir);
    for (auto [u, v] : g.edges) out << u << ',' << v << '\n';
  }
  {
    json j;
    j["format_version"] = 1;
    j["name"] = name;
    j["n"] = g.n;
    j["d"] = g.d;
    j["k"] = g.k;
    j["features"] = "features.csv";
    j["labels"] = "labels.csv";
    j["edges"] = "edges.csv";
    std::ofstream out(fs::path(dir) / "manifest.json");
    check(out.good(), ErrorKind::io, "cannot write manifest.json in ", dir);
    out << j.dump(2) << '\n';
  }
}

void SbmConfig::validate() const {
  check(k >= 1, ErrorKind::invalid_argument, "sbm: k must be positive");
  check(feature_dim >= 1, ErrorKind::invalid_argument, "sbm: feature_dim must be positive");
  check(p_intra >= 0.0 && p_intra <= 1.0, ErrorKind::invalid_argument,
        "sbm: p_intra must lie in [0,1], got ", p_intra);
  check(p_inter >= 0.0 && p_inter <= 1.0, ErrorKind::invalid_argument,
        "sbm: p_inter must lie in [0,1], got ", p_inter);
  check(noise_std >= 0.0, ErrorKind::invalid_argument, "sbm: noise_std must be >= 0");
  check(center_separation >= 0.0, ErrorKind::invalid_argument,
        "sbm: center_separation must be >= 0");
  check(affinity_decay >= 0.0, ErrorKind::invalid_argument,
        "sbm: affinity_decay must be >= 0");
  if (block_sizes.empty()) {
    check(nodes_per_block >= 1, ErrorKind::invalid_argument,
          "sbm: nodes_per_block must be positive");
  } else {
    check(static_cast<int>(block_sizes.size()) == k, ErrorKind::invalid_argument,
          "sbm: block_sizes length ", block_sizes.size(), " != k ", k);
    for (int s : block_sizes)
      check(s >= 1, ErrorKind::invalid_argument, "sbm: block sizes must be positive");
  }
}

std::vector<int> SbmConfig::sizes() const {
  if (!block_sizes.empty()) return block_sizes;
  return std::vector<int>(k, nodes_per_block);
}

double SbmConfig::edge_probability(int a, int b) const {
  if (a == b) return p_intra;
  if (affinity == Affinity::uniform) return p_inter;
  return p_inter * std::exp(-affinity_decay * (std::abs(a - b) - 1));
}

Graph generate_sbm(const SbmConfig& cfg) {
  cfg.validate();
  const std::vector<int> sizes = cfg.sizes();
  std::int64_t n64 = 0;
  for (int s : sizes) n64 += s;
  check(n64 <= 200000, ErrorKind::invalid_argument, "sbm: too many nodes (", n64, ")");
  const int n = static_cast<int>(n64);
  const int d = cfg.feature_dim;

  std::vector<int> labels(n);
  {
    int pos = 0;
    for (int c = 0; c < cfg.k; ++c)
      for (int i = 0; i < sizes[c]; ++i) labels[pos++] = c;
  }

  // Class centers; the chain layout is a random walk, so adjacent class
  // ids stay close in feature space.
  rng::Counter center_rng(cfg.seed, rng::Stream::sbm, /*salt=*/1);
  Matrix centers(cfg.k, d);
  const double step = cfg.center_separation / std::sqrt(static_cast<double>(d));
  for (int c = 0; c < cfg.k; ++c) {
    double* row = centers.row(c);
    for (int j = 0; j < d; ++j) {
      double delta = step * center_rng.normal(static_cast<std::uint64_t>(c) * d + j);
      row[j] = (cfg.geometry == FeatureGeometry::chain && c > 0)
                   ? centers.at(c - 1, j) + delta
                   : delta;
    }
  }

  rng::Counter feat_rng(cfg.seed, rng::Stream::sbm, /*salt=*/2);
  Matrix features(n, d);
  for (int i = 0; i < n; ++i) {
    const double* ctr = centers.row(labels[i]);
    double* row = features.row(i);
    for (int j = 0; j < d; ++j)
      row[j] = ctr[j] +
               cfg.noise_std * feat_rng.normal(static_cast<std::uint64_t>(i) * d + j);
  }

  // One counter slot per unordered pair, so the edge set is independent of
  // iteration order.
  rng::Counter edge_rng(cfg.seed, rng::Stream::sbm, /*salt=*/0);
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = cfg.edge_probability(labels[u], labels[v]);
      if (p <= 0.0) continue;
      const std::uint64_t idx =
          static_cast<std::uint64_t>(u) * (2ull * n - u - 1) / 2 + (v - u - 1);
      if (edge_rng.uniform(idx) < p) edges.emplace_back(u, v);
    }
  }
  return Graph::build(cfg.k, std::move(features), std::move(labels), std::move(edges));
}

}  // namespace pgkd
