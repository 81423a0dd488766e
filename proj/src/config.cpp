#include "pgkd/config.hpp"

#include <fstream>
#include <set>

#include "pgkd/error.hpp"
#include "pgkd/metrics.hpp"

using nlohmann::json;

namespace pgkd {

namespace {

[[noreturn]] void bad_key(const std::string& path) {
  fail(ErrorKind::invalid_argument, "config: unknown key '", path, "'");
}

void require_keys(const json& j, const std::string& prefix,
                  const std::set<std::string>& allowed) {
  check(j.is_object(), ErrorKind::invalid_argument, "config: '",
        prefix.empty() ? std::string("<root>") : prefix, "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      bad_key(prefix.empty() ? it.key() : prefix + "." + it.key());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& prefix, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::invalid_argument, "config: bad value for '",
         prefix.empty() ? key : prefix + "." + key, "'");
  }
}

Setting setting_from_string(const std::string& s) {
  if (s == "transductive") return Setting::transductive;
  if (s == "inductive") return Setting::inductive;
  fail(ErrorKind::invalid_argument,
       "config: setting must be transductive|inductive, got '", s, "'");
}

Distance distance_from_string(const std::string& s) {
  if (s == "l2") return Distance::euclidean;
  if (s == "cosine") return Distance::cosine;
  fail(ErrorKind::invalid_argument, "config: distance must be l2|cosine, got '",
       s, "'");
}

}  // namespace

json sbm_config_to_json(const SbmConfig& cfg) {
  json j;
  j["k"] = cfg.k;
  if (!cfg.block_sizes.empty())
    j["block_sizes"] = cfg.block_sizes;
  else
    j["nodes_per_block"] = cfg.nodes_per_block;
  j["p_intra"] = cfg.p_intra;
  j["p_inter"] = cfg.p_inter;
  j["affinity"] = cfg.affinity == Affinity::uniform ? "uniform" : "chain";
  j["affinity_decay"] = cfg.affinity_decay;
  j["feature_dim"] = cfg.feature_dim;
  j["center_separation"] = cfg.center_separation;
  j["noise_std"] = cfg.noise_std;
  j["geometry"] = cfg.geometry == FeatureGeometry::random ? "random" : "chain";
  j["seed"] = cfg.seed;
  return j;
}

SbmConfig sbm_config_from_json(const json& j, const std::string& prefix) {
  require_keys(j, prefix,
               {"k", "nodes_per_block", "block_sizes", "p_intra", "p_inter",
                "affinity", "affinity_decay", "feature_dim", "center_separation",
                "noise_std", "geometry", "seed"});
  SbmConfig cfg;
  cfg.k = get_or(j, "k", prefix, cfg.k);
  cfg.nodes_per_block = get_or(j, "nodes_per_block", prefix, cfg.nodes_per_block);
  cfg.block_sizes = get_or(j, "block_sizes", prefix, cfg.block_sizes);
  cfg.p_intra = get_or(j, "p_intra", prefix, cfg.p_intra);
  cfg.p_inter = get_or(j, "p_inter", prefix, cfg.p_inter);
  std::string aff = get_or<std::string>(j, "affinity", prefix, "uniform");
  if (aff == "uniform")
    cfg.affinity = Affinity::uniform;
  else if (aff == "chain")
    cfg.affinity = Affinity::chain;
  else
    fail(ErrorKind::invalid_argument, "config: ", prefix,
         ".affinity must be uniform|chain, got '", aff, "'");
  cfg.affinity_decay = get_or(j, "affinity_decay", prefix, cfg.affinity_decay);
  cfg.feature_dim = get_or(j, "feature_dim", prefix, cfg.feature_dim);
  cfg.center_separation =
      get_or(j, "center_separation", prefix, cfg.center_separation);
  cfg.noise_std = get_or(j, "noise_std", prefix, cfg.noise_std);
  std::string geo = get_or<std::string>(j, "geometry", prefix, "random");
  if (geo == "random")
    cfg.geometry = FeatureGeometry::random;
  else if (geo == "chain")
    cfg.geometry = FeatureGeometry::chain;
  else
    fail(ErrorKind::invalid_argument, "config: ", prefix,
         ".geometry must be random|chain, got '", geo, "'");
  cfg.seed = get_or<std::uint64_t>(j, "seed", prefix, cfg.seed);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorKind::io, "cannot open config ", path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, path, ": invalid JSON: ", e.what());
  }
  return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  require_keys(j, "",
               {"dataset", "split", "teacher", "student", "distill", "out_dir",
                "jobs"});
  ExperimentConfig cfg;

  check(j.contains("dataset"), ErrorKind::invalid_argument,
        "config: missing 'dataset'");
  {
    const json& d = j.at("dataset");
    require_keys(d, "dataset", {"manifest", "sbm"});
    const bool has_manifest = d.contains("manifest");
    const bool has_sbm = d.contains("sbm");
    check(has_manifest != has_sbm, ErrorKind::invalid_argument,
          "config: dataset needs exactly one of 'manifest' or 'sbm'");
    if (has_manifest)
      cfg.dataset_manifest = d.at("manifest").get<std::string>();
    else
      cfg.sbm = sbm_config_from_json(d.at("sbm"), "dataset.sbm");
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    require_keys(s, "split",
                 {"setting", "train_per_class", "label_rate", "val_count",
                  "ind_ratio", "file"});
    cfg.split.setting = setting_from_string(
        get_or<std::string>(s, "setting", "split", "transductive"));
    cfg.split.train_per_class =
        get_or(s, "train_per_class", "split", cfg.split.train_per_class);
    cfg.split.label_rate = get_or(s, "label_rate", "split", cfg.split.label_rate);
    cfg.split.val_count = get_or(s, "val_count", "split", cfg.split.val_count);
    cfg.split.ind_ratio = get_or(s, "ind_ratio", "split", cfg.split.ind_ratio);
    cfg.split_file = get_or<std::string>(s, "file", "split", "");
  }

  if (j.contains("teacher")) {
    const json& t = j.at("teacher");
    require_keys(t, "teacher",
                 {"kind", "hidden", "dropout", "lr", "weight_decay", "max_epochs",
                  "patience", "eval_every", "appnp_alpha", "appnp_power"});
    TeacherConfig& tc = cfg.pipeline.teacher;
    tc.kind = model_kind_from_string(
        get_or<std::string>(t, "kind", "teacher", to_string(tc.kind)));
    check(tc.kind != ModelKind::mlp, ErrorKind::invalid_argument,
          "config: teacher.kind must be a graph model (gcn|sage|appnp)");
    tc.hidden = get_or(t, "hidden", "teacher", tc.hidden);
    tc.dropout = get_or(t, "dropout", "teacher", tc.dropout);
    tc.lr = get_or(t, "lr", "teacher", tc.lr);
    tc.weight_decay = get_or(t, "weight_decay", "teacher", tc.weight_decay);
    tc.max_epochs = get_or(t, "max_epochs", "teacher", tc.max_epochs);
    tc.patience = get_or(t, "patience", "teacher", tc.patience);
    tc.eval_every = get_or(t, "eval_every", "teacher", tc.eval_every);
    tc.appnp_alpha = get_or(t, "appnp_alpha", "teacher", tc.appnp_alpha);
    tc.appnp_power = get_or(t, "appnp_power", "teacher", tc.appnp_power);
    check(tc.max_epochs >= 1, ErrorKind::invalid_argument,
          "config: teacher.max_epochs must be >= 1");
    check(tc.patience >= 0, ErrorKind::invalid_argument,
          "config: teacher.patience must be >= 0");
    check(tc.eval_every >= 1, ErrorKind::invalid_argument,
          "config: teacher.eval_every must be >= 1");
    check(tc.dropout >= 0.0 && tc.dropout < 1.0, ErrorKind::invalid_argument,
          "config: teacher.dropout must lie in [0,1)");
  }

  if (j.contains("student")) {
    const json& s = j.at("student");
    require_keys(s, "student",
                 {"layers", "hidden", "dropout", "lr", "weight_decay",
                  "max_epochs", "patience", "eval_every"});
    StudentConfig& sc = cfg.pipeline.student;
    sc.layers = get_or(s, "layers", "student", sc.layers);
    sc.hidden = get_or(s, "hidden", "student", sc.hidden);
    sc.dropout = get_or(s, "dropout", "student", sc.dropout);
    sc.lr = get_or(s, "lr", "student", sc.lr);
    sc.weight_decay = get_or(s, "weight_decay", "student", sc.weight_decay);
    sc.max_epochs = get_or(s, "max_epochs", "student", sc.max_epochs);
    sc.patience = get_or(s, "patience", "student", sc.patience);
    sc.eval_every = get_or(s, "eval_every", "student", sc.eval_every);
    check(sc.layers >= 2, ErrorKind::invalid_argument,
          "config: student.layers must be >= 2");
    check(sc.max_epochs >= 1, ErrorKind::invalid_argument,
          "config: student.max_epochs must be >= 1");
    check(sc.patience >= 0, ErrorKind::invalid_argument,
          "config: student.patience must be >= 0");
    check(sc.eval_every >= 1, ErrorKind::invalid_argument,
          "config: student.eval_every must be >= 1");
    check(sc.dropout >= 0.0 && sc.dropout < 1.0, ErrorKind::invalid_argument,
          "config: student.dropout must lie in [0,1)");
  }

  if (j.contains("distill")) {
    const json& d = j.at("distill");
    require_keys(d, "distill",
                 {"lambda1", "lambda2", "tau1", "tau2", "tau_kd", "distance",
                  "inter_sign", "mask_self_distance", "proto_scope",
                  "representation"});
    DistillConfig& dc = cfg.pipeline.distill;
    dc.lambda1 = get_or(d, "lambda1", "distill", dc.lambda1);
    dc.lambda2 = get_or(d, "lambda2", "distill", dc.lambda2);
    dc.tau1 = get_or(d, "tau1", "distill", dc.tau1);
    dc.tau2 = get_or(d, "tau2", "distill", dc.tau2);
    dc.tau_kd = get_or(d, "tau_kd", "distill", dc.tau_kd);
    dc.distance =
        distance_from_string(get_or<std::string>(d, "distance", "distill", "l2"));
    std::string sign = get_or<std::string>(d, "inter_sign", "distill", "pos");
    if (sign == "pos")
      dc.inter_sign = +1;
    else if (sign == "neg")
      dc.inter_sign = -1;
    else
      fail(ErrorKind::invalid_argument,
           "config: distill.inter_sign must be pos|neg, got '", sign, "'");
    dc.mask_self_distance =
        get_or(d, "mask_self_distance", "distill", dc.mask_self_distance);
    std::string scope = get_or<std::string>(d, "proto_scope", "distill", "visible");
    if (scope == "visible")
      dc.proto_scope = ProtoScope::visible;
    else if (scope == "train_val")
      dc.proto_scope = ProtoScope::train_val;
    else
      fail(ErrorKind::invalid_argument,
           "config: distill.proto_scope must be visible|train_val, got '", scope,
           "'");
    std::string rep = get_or<std::string>(d, "representation", "distill", "hidden");
    if (rep == "hidden")
      dc.representation = Representation::hidden;
    else if (rep == "logits")
      dc.representation = Representation::logits;
    else
      fail(ErrorKind::invalid_argument,
           "config: distill.representation must be hidden|logits, got '", rep, "'");
    dc.validate();
  }

  cfg.out_dir = get_or<std::string>(j, "out_dir", "", cfg.out_dir);
  cfg.jobs = get_or(j, "jobs", "", cfg.jobs);
  check(cfg.jobs >= 1, ErrorKind::invalid_argument, "config: jobs must be >= 1");
  check(cfg.split.ind_ratio >= 0.0 && cfg.split.ind_ratio <= 1.0,
        ErrorKind::invalid_argument, "config: split.ind_ratio must lie in [0,1]");
  return cfg;
}

json ExperimentConfig::echo() const {
  json j;
  if (sbm.has_value())
    j["dataset"]["sbm"] = sbm_config_to_json(*sbm);
  else
    j["dataset"]["manifest"] = dataset_manifest;

  json s;
  s["setting"] = split.setting == Setting::transductive ? "transductive" : "inductive";
  s["train_per_class"] = split.train_per_class;
  s["label_rate"] = split.label_rate;
  s["val_count"] = split.val_count;
  s["ind_ratio"] = split.ind_ratio;
  if (!split_file.empty()) s["file"] = split_file;
  j["split"] = s;

  const TeacherConfig& tc = pipeline.teacher;
  json t;
  t["kind"] = to_string(tc.kind);
  t["hidden"] = tc.hidden;
  t["dropout"] = tc.dropout;
  t["lr"] = tc.lr;
  t["weight_decay"] = tc.weight_decay;
  t["max_epochs"] = tc.max_epochs;
  t["patience"] = tc.patience;
  t["eval_every"] = tc.eval_every;
  if (tc.kind == ModelKind::appnp) {
    t["appnp_alpha"] = tc.appnp_alpha;
    t["appnp_power"] = tc.appnp_power;
  }
  j["teacher"] = t;

  const StudentConfig& sc = pipeline.student;
  json st;
  st["layers"] = sc.layers;
  st["hidden"] = sc.hidden;
  st["dropout"] = sc.dropout;
  st["lr"] = sc.lr;
  st["weight_decay"] = sc.weight_decay;
  st["max_epochs"] = sc.max_epochs;
  st["patience"] = sc.patience;
  st["eval_every"] = sc.eval_every;
  j["student"] = st;

  const DistillConfig& dc = pipeline.distill;
  json d;
  d["lambda1"] = dc.lambda1;
  d["lambda2"] = dc.lambda2;
  d["tau1"] = dc.tau1;
  d["tau2"] = dc.tau2;
  d["tau_kd"] = dc.tau_kd;
  d["distance"] = dc.distance == Distance::euclidean ? "l2" : "cosine";
  d["inter_sign"] = dc.inter_sign > 0 ? "pos" : "neg";
  d["mask_self_distance"] = dc.mask_self_distance;
  d["proto_scope"] = dc.proto_scope == ProtoScope::visible ? "visible" : "train_val";
  d["representation"] =
      dc.representation == Representation::hidden ? "hidden" : "logits";
  j["distill"] = d;

  j["out_dir"] = out_dir;
  j["jobs"] = jobs;
  return j;
}

std::string ExperimentConfig::hash() const { return config_hash(echo()); }

json split_to_json(const SplitSpec& s) {
  json j;
  j["setting"] = s.setting == Setting::transductive ? "transductive" : "inductive";
  j["ind_ratio"] = s.ind_ratio;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test_obs"] = s.test_obs;
  j["test_ind"] = s.test_ind;
  return j;
}

SplitSpec split_spec_from_json(const json& j, int n) {
  require_keys(j, "split-file",
               {"setting", "ind_ratio", "train", "val", "test_obs", "test_ind"});
  SplitSpec s;
  try {
    s.setting = setting_from_string(j.at("setting").get<std::string>());
    s.ind_ratio = j.value("ind_ratio", 0.0);
    s.train = j.at("train").get<std::vector<int>>();
    s.val = j.at("val").get<std::vector<int>>();
    s.test_obs = j.at("test_obs").get<std::vector<int>>();
    s.test_ind = j.value("test_ind", std::vector<int>{});
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "split file: ", e.what());
  }
  s.validate(n);
  return s;
}

}  // namespace pgkd
