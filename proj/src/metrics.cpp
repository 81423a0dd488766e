#include "pgkd/metrics.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "pgkd/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pgkd {

std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string canonical_json(const json& j) { return j.dump(); }

std::string config_hash(const json& config) {
  json scrubbed = config;
  scrubbed.erase("out_dir");
  scrubbed.erase("jobs");
  const std::string s = canonical_json(scrubbed);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

namespace {

json epoch_json(const EpochRecord& e) {
  json j;
  j["epoch"] = e.epoch;
  j["label"] = e.loss.label;
  j["kd"] = e.loss.kd;
  j["intra"] = e.loss.intra;
  j["inter"] = e.loss.inter;
  j["total"] = e.loss.total;
  j["train_acc"] = e.train_acc;
  j["val_acc"] = e.val_acc;
  return j;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorKind::io, "cannot write ", path);
  return out;
}

void csv_header(std::ofstream& out, const std::string& hash,
                const std::vector<std::uint64_t>& seeds) {
  out << "# config_hash=" << hash << " seeds=";
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i) out << '+';
    out << seeds[i];
  }
  out << '\n';
}

}  // namespace

json run_result_json(const RunRecord& rec, const json& config_echo,
                     const std::string& hash) {
  json j;
  j["config"] = config_echo;
  j["config_hash"] = hash;
  j["seed"] = rec.seed;
  j["best_epoch"] = rec.best_epoch;
  j["stopped_epoch"] = rec.stopped_epoch;
  j["best_val_acc"] = rec.best_val_acc;
  j["test_acc"] = rec.test_acc;
  j["epochs_recorded"] = rec.epochs.size();
  j["inter_degenerate_epochs"] = rec.inter_degenerate_epochs;
  return j;
}

void write_run_outputs(const std::string& dir, const RunRecord& rec,
                       const json& config_echo, const std::string& hash) {
  fs::create_directories(dir);
  {
    auto out = open_out((fs::path(dir) / "metrics.jsonl").string());
    for (const EpochRecord& e : rec.epochs) out << epoch_json(e).dump() << '\n';
    json fin;
    fin["final"] = true;
    fin["best_epoch"] = rec.best_epoch;
    fin["stopped_epoch"] = rec.stopped_epoch;
    fin["best_val_acc"] = rec.best_val_acc;
    fin["test_acc"] = rec.test_acc;
    fin["seed"] = rec.seed;
    fin["config_hash"] = hash;
    fin["inter_degenerate_epochs"] = rec.inter_degenerate_epochs;
    out << fin.dump() << '\n';
  }
  {
    auto out = open_out((fs::path(dir) / "result.json").string());
    out << run_result_json(rec, config_echo, hash).dump(2) << '\n';
  }
  {
    // wall-clock lives apart so the metrics files stay byte-reproducible
    auto out = open_out((fs::path(dir) / "timing.json").string());
    json t;
    t["wall_ms"] = rec.wall_ms;
    out << t.dump(2) << '\n';
  }
}

void write_grid_csv(const std::string& path, const GridResult& res,
                    const std::string& hash,
                    const std::vector<std::uint64_t>& seeds) {
  auto out = open_out(path);
  csv_header(out, hash, seeds);
  out << "lambda1,lambda2,seed,val_acc,test_acc,epochs,wall_ms\n";
  for (const GridCell& c : res.cells) {
    out << fmt_double(c.lambda1) << ',' << fmt_double(c.lambda2) << ',' << c.seed
        << ',' << fmt_double(c.val_acc) << ',' << fmt_double(c.test_acc) << ','
        << c.epochs << ',' << c.wall_ms << '\n';
  }
}

void write_noise_csv(const std::string& path, const std::vector<NoiseCell>& cells,
                     const std::string& hash,
                     const std::vector<std::uint64_t>& seeds) {
  auto out = open_out(path);
  csv_header(out, hash, seeds);
  out << "alpha,seed,teacher_acc,glnn_acc,pgkd_acc\n";
  for (const NoiseCell& c : cells) {
    out << fmt_double(c.alpha) << ',' << c.seed << ',' << fmt_double(c.teacher_acc)
        << ',' << fmt_double(c.glnn_acc) << ',' << fmt_double(c.pgkd_acc) << '\n';
  }
}

void write_ratio_csv(const std::string& path, const std::vector<RatioCell>& cells,
                     const std::string& hash,
                     const std::vector<std::uint64_t>& seeds) {
  auto out = open_out(path);
  csv_header(out, hash, seeds);
  out << "ratio,seed,test_ind_size,teacher_acc,glnn_acc,pgkd_acc\n";
  for (const RatioCell& c : cells) {
    out << fmt_double(c.ratio) << ',' << c.seed << ',' << c.test_ind_size << ','
        << fmt_double(c.teacher_acc) << ',' << fmt_double(c.glnn_acc) << ','
        << fmt_double(c.pgkd_acc) << '\n';
  }
}

void write_capacity_csv(const std::string& path,
                        const std::vector<CapacityCell>& cells,
                        const std::string& hash,
                        const std::vector<std::uint64_t>& seeds) {
  auto out = open_out(path);
  csv_header(out, hash, seeds);
  out << "layers,width,param_count,seed,vanilla_acc,glnn_acc,pgkd_acc\n";
  for (const CapacityCell& c : cells) {
    out << c.layers << ',' << c.width << ',' << c.param_count << ',' << c.seed
        << ',' << fmt_double(c.vanilla_acc) << ',' << fmt_double(c.glnn_acc) << ','
        << fmt_double(c.pgkd_acc) << '\n';
  }
}

void write_structure_csv(const std::string& path, const StructureMetrics& m,
                         const std::string& hash) {
  auto out = open_out(path);
  out << "# config_hash=" << hash << '\n';
  out << "# avg_connected_l2=" << fmt_double(m.avg_connected_l2)
      << " spearman_rho=" << fmt_double(m.spearman_rho)
      << " degenerate=" << (m.spearman_degenerate ? 1 : 0) << '\n';
  out << "class_a,class_b,prototype_distance,inter_edge_count\n";
  for (const auto& p : m.pairs) {
    out << p.class_a << ',' << p.class_b << ',' << fmt_double(p.prototype_distance)
        << ',' << p.inter_edge_count << '\n';
  }
}

}  // namespace pgkd
