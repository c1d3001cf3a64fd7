#include "mird/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <json.hpp>
#include <sstream>

#include "mird/data_synth.hpp"

namespace fs = std::filesystem;

namespace mird {
namespace {

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex16(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("short write to '" + path + "'");
}

// Everything the commands need to know about the input data. Synthetic
// splits carry their serialized bytes so fingerprints exist before anything
// touches the output directory.
struct DataBundle {
  Dataset train, val, test, unlabeled;
  FactorSet test_factors;
  bool has_val = false, has_test = false, has_factors = false;
  nlohmann::json fingerprints;                  // split name -> hex hash
  std::map<std::string, std::string> blobs;     // split name -> ndjson bytes
};

DataBundle resolve_data(const RunSettings& s) {
  DataBundle b;
  if (s.synthetic) {
    SyntheticData d = generate(s.synth);
    b.train = std::move(d.train);
    b.val = std::move(d.val);
    b.test = std::move(d.test);
    b.unlabeled = std::move(d.unlabeled);
    b.test_factors = std::move(d.test_factors);
    b.has_val = b.has_test = b.has_factors = true;
    b.blobs["train"] = dataset_to_ndjson(b.train);
    b.blobs["val"] = dataset_to_ndjson(b.val);
    b.blobs["test"] = dataset_to_ndjson(b.test);
    b.blobs["unlabeled"] = dataset_to_ndjson(b.unlabeled);
    for (const auto& [name, bytes] : b.blobs)
      b.fingerprints[name] = hex16(fnv1a64(bytes));
    return b;
  }

  if (s.train_path.empty())
    throw ConfigError("config: data.source = files requires data.train_path");
  b.train = load_dataset(s.train_path);
  b.fingerprints["train"] = hex16(fnv1a64_file(s.train_path));
  if (!s.val_path.empty()) {
    b.val = load_dataset(s.val_path);
    b.has_val = true;
    b.fingerprints["val"] = hex16(fnv1a64_file(s.val_path));
  }
  if (!s.test_path.empty()) {
    b.test = load_dataset(s.test_path);
    b.has_test = true;
    b.fingerprints["test"] = hex16(fnv1a64_file(s.test_path));
  }
  if (!s.unlabeled_path.empty()) {
    b.unlabeled = load_dataset(s.unlabeled_path);
    b.fingerprints["unlabeled"] = hex16(fnv1a64_file(s.unlabeled_path));
  } else {
    b.unlabeled.d_v = b.train.d_v;
    b.unlabeled.d_a = b.train.d_a;
    b.unlabeled.vocab = b.train.vocab;
  }
  return b;
}

// Synthetic data is materialized under <out>/data so eval and external tools
// can reach the exact bytes the run saw.
void write_synth_data(const DataBundle& b, const std::string& out_dir) {
  if (b.blobs.empty()) return;
  const auto dir = fs::path(out_dir) / "data";
  fs::create_directories(dir);
  for (const auto& [name, bytes] : b.blobs)
    write_text((dir / (name + ".ndjson")).string(), bytes);
  if (b.has_factors)
    save_factors((dir / "test_factors.ndjson").string(), b.test_factors);
}

nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j;
  j["acc"] = m.acc;
  j["f1"] = m.f1;
  j["mae"] = m.mae;
  j["corr"] = m.corr;
  j["accf1_defined"] = m.accf1_defined;
  j["corr_defined"] = m.corr_defined;
  return j;
}

void write_mi_csv(const std::string& path, const std::vector<double>& mi) {
  std::string text = "epoch,mi\n";
  char buf[64];
  for (size_t i = 0; i < mi.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, mi[i]);
    text += buf;
  }
  write_text(path, text);
}

std::uint64_t fnv1a64_extend(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  return fnv1a64_extend(14695981039346656037ULL, bytes);
}

std::uint64_t fnv1a64_file(const std::string& path) {
  return fnv1a64(read_file_bytes(path));
}

TrainOutputs run_train_command(const RunSettings& s, const std::string& out_dir,
                               bool force) {
  s.train.validate();
  DataBundle data = resolve_data(s);

  nlohmann::json manifest;
  manifest["version"] = kToolkitVersion;
  manifest["mode"] = train_mode_name(s.mode);
  manifest["seed"] = s.train.seed;
  manifest["config"] = nlohmann::json::parse(settings_snapshot_json(s));
  manifest["fingerprints"] = data.fingerprints;
  manifest["outputs"] = {{"checkpoint", "checkpoint.bin"},
                         {"trace", "trace.csv"},
                         {"metrics", "metrics.json"}};

  // drift guard runs before the first write so a refused rerun leaves the
  // recorded run intact
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  if (!force && fs::exists(manifest_path)) {
    nlohmann::json old = nlohmann::json::parse(read_file_bytes(manifest_path));
    if (old.contains("fingerprints") &&
        old["fingerprints"] != manifest["fingerprints"])
      throw Error(
          "dataset fingerprint mismatch against existing manifest '" +
          manifest_path + "'; inputs changed since the recorded run (use "
          "--force to overwrite)");
  }
  fs::create_directories(out_dir);
  write_synth_data(data, out_dir);
  write_text(manifest_path, manifest.dump(2) + "\n");

  TrainResult r = run_training(s.train, data.train, data.unlabeled, s.mode,
                               data.has_val ? &data.val : nullptr);
  for (const auto& w : r.trace.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());

  TrainOutputs out;
  out.manifest_path = manifest_path;
  out.checkpoint_path = (fs::path(out_dir) / "checkpoint.bin").string();
  out.trace_path = (fs::path(out_dir) / "trace.csv").string();
  out.metrics_path = (fs::path(out_dir) / "metrics.json").string();
  save_checkpoint(out.checkpoint_path, r.model->meta, r.model->params());
  write_trace_csv(r.trace, out.trace_path);
  if (data.has_val) out.val_metrics = evaluate(*r.model, data.val);
  else {
    out.val_metrics = MetricsReport{std::nan(""), std::nan(""), std::nan(""),
                                    std::nan(""), false, false};
  }
  write_text(out.metrics_path, metrics_json(out.val_metrics).dump(2) + "\n");
  return out;
}

MetricsReport run_eval_command(const std::string& checkpoint_path,
                               const std::string& dataset_path) {
  const ModelMeta meta = peek_checkpoint_meta(checkpoint_path);
  Rng rng(0);  // weights are overwritten by the load below
  MirdModel model(meta, rng);
  ParamRegistry reg = model.params();
  load_checkpoint(checkpoint_path, reg);
  const Dataset ds = load_dataset(dataset_path);
  return evaluate(model, ds);
}

AblationOutputs run_ablate_command(const RunSettings& s,
                                   const std::string& out_dir, int jobs) {
  s.train.validate();
  if (!s.synthetic)
    throw ConfigError(
        "ablate needs data.source = synthetic (probes require ground-truth "
        "factors)");
  if (s.train.split_rate <= 0)
    throw ConfigError(
        "ablate needs train.split_rate > 0 for the unlabeled-data cell");
  if (jobs < 1) throw ConfigError("ablate: jobs must be >= 1");

  fs::create_directories(out_dir);
  DataBundle data = resolve_data(s);
  write_synth_data(data, out_dir);
  std::uint64_t fp = 14695981039346656037ULL;
  for (const char* name : {"train", "val", "test", "unlabeled"})
    fp = fnv1a64_extend(fp, data.blobs.at(name));

  struct Cell {
    const char* variant;
    TrainMode mode;
    int split_rate;
    bool input_terms, recon;
  };
  const Cell cells[] = {
      {"mim+unlabeled", TrainMode::MIM, s.train.split_rate, true, true},
      {"mim", TrainMode::MIM, 0, true, true},
      {"mim-no-input-mi", TrainMode::MIM, 0, false, true},
      {"nc", TrainMode::NC, 0, true, true},
      {"mim-no-recon", TrainMode::MIM, 0, true, false},
  };

  auto run_cell = [&](const Cell& c) {
    TrainConfig cfg = s.train;
    cfg.split_rate = c.split_rate;
    cfg.with_input_terms = c.input_terms;
    cfg.with_recon = c.recon;
    TrainResult r =
        run_training(cfg, data.train, data.unlabeled, c.mode, &data.val);
    AblationRow row;
    row.variant = c.variant;
    row.mode = c.mode;
    row.split_rate = c.split_rate;
    row.with_input_terms = c.input_terms;
    row.with_recon = c.recon;
    row.test_metrics = evaluate(*r.model, data.test);
    LatentRows lat = collect_latents(*r.model, data.test);
    const FactorSet& f = data.test_factors;
    auto m = probe_factors({&lat.z_v, &lat.z_l, &lat.z_a, &lat.z_s},
                           {&f.shared, &f.priv_v, &f.priv_l, &f.priv_a});
    row.r2_shared_from_zs = m[3][0];
    row.r2_shared_max_private = std::max({m[0][0], m[1][0], m[2][0]});
    row.r2_priv_v_from_zv = m[0][1];
    row.r2_priv_l_from_zl = m[1][2];
    row.r2_priv_a_from_za = m[2][3];
    return row;
  };

  AblationOutputs out;
  out.data_fingerprint = fp;
  out.rows.resize(std::size(cells));
  if (jobs <= 1) {
    for (size_t i = 0; i < std::size(cells); ++i) out.rows[i] = run_cell(cells[i]);
  } else {
    // cells are independent: every thread builds its own graphs and RNGs and
    // only reads the shared datasets
    for (size_t base = 0; base < std::size(cells); base += jobs) {
      std::vector<std::future<AblationRow>> wave;
      for (size_t i = base; i < std::min(base + jobs, std::size(cells)); ++i)
        wave.push_back(std::async(std::launch::async, run_cell, cells[i]));
      for (size_t i = 0; i < wave.size(); ++i) out.rows[base + i] = wave[i].get();
    }
  }

  nlohmann::json j;
  j["seed"] = s.train.seed;
  j["data_fingerprint"] = hex16(fp);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : out.rows) {
    nlohmann::json rj;
    rj["variant"] = row.variant;
    rj["mode"] = train_mode_name(row.mode);
    rj["split_rate"] = row.split_rate;
    rj["with_input_terms"] = row.with_input_terms;
    rj["with_recon"] = row.with_recon;
    rj["seed"] = s.train.seed;
    rj["data_fingerprint"] = hex16(fp);
    rj["test"] = metrics_json(row.test_metrics);
    rj["probe"] = {{"r2_shared_from_zs", row.r2_shared_from_zs},
                   {"r2_shared_max_private", row.r2_shared_max_private},
                   {"r2_priv_v_from_zv", row.r2_priv_v_from_zv},
                   {"r2_priv_l_from_zl", row.r2_priv_l_from_zl},
                   {"r2_priv_a_from_za", row.r2_priv_a_from_za}};
    j["rows"].push_back(rj);
  }
  out.json_path = (fs::path(out_dir) / "ablation.json").string();
  write_text(out.json_path, j.dump(2) + "\n");

  char line[256];
  std::string t =
      "variant           acc%    f1%     mae     corr    R2(s|zS) R2(s|zm) "
      "R2(pv|zv) R2(pl|zl) R2(pa|za)\n";
  for (const auto& row : out.rows) {
    std::snprintf(line, sizeof line,
                  "%-17s %-7.2f %-7.2f %-7.4f %-7.4f %-8.4f %-8.4f %-9.4f "
                  "%-9.4f %-9.4f\n",
                  row.variant.c_str(), row.test_metrics.acc, row.test_metrics.f1,
                  row.test_metrics.mae, row.test_metrics.corr,
                  row.r2_shared_from_zs, row.r2_shared_max_private,
                  row.r2_priv_v_from_zv, row.r2_priv_l_from_zl,
                  row.r2_priv_a_from_za);
    t += line;
  }
  out.table = t;
  return out;
}

MiTraceOutputs run_mi_trace_command(const RunSettings& s,
                                    const std::string& out_dir) {
  s.train.validate();
  if (s.train.split_rate <= 0)
    throw ConfigError("mi-trace needs train.split_rate > 0 to compare against "
                      "the split_rate 0 run");
  fs::create_directories(out_dir);
  DataBundle data = resolve_data(s);

  auto mi_of = [&](int split) {
    TrainConfig cfg = s.train;
    cfg.split_rate = split;
    TrainResult r = run_training(cfg, data.train, data.unlabeled,
                                 TrainMode::MIM, data.has_val ? &data.val : nullptr);
    std::vector<double> mi;
    mi.reserve(r.trace.epochs.size());
    for (const auto& e : r.trace.epochs) mi.push_back(e.mi_latent);
    return mi;
  };

  MiTraceOutputs out;
  out.split0_mi = mi_of(0);
  out.splitn_mi = mi_of(s.train.split_rate);
  out.split0_path = (fs::path(out_dir) / "mi_trace_split0.csv").string();
  out.splitn_path =
      (fs::path(out_dir) /
       ("mi_trace_split" + std::to_string(s.train.split_rate) + ".csv"))
          .string();
  write_mi_csv(out.split0_path, out.split0_mi);
  write_mi_csv(out.splitn_path, out.splitn_mi);
  return out;
}

}  // namespace mird
