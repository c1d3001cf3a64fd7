// mird command line. Thin shell over the C API: parse flags, forward, map
// status to exit code.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "mird.h"

namespace {

struct ConfigHandle {
  mird_config* h = nullptr;
  ~ConfigHandle() { mird_config_free(h); }
};

int complain(mird_status st) {
  std::fprintf(stderr, "error: %s\n", mird_last_error());
  return static_cast<int>(st);
}

struct Overrides {
  std::optional<std::string> mode;
  std::optional<int> split_rate;
  std::optional<double> alpha;
  std::optional<long long> seed;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--mode", ov.mode, "Training mode: mim, oc or nc");
  cmd->add_option("--split-rate", ov.split_rate,
                  "Unlabeled batches per labeled batch");
  cmd->add_option("--alpha", ov.alpha, "Constraint weight");
  cmd->add_option("--seed", ov.seed, "Run seed");
}

// Loads the config file and applies flag overrides through the same typed
// key dispatch the file parser uses.
int load_config(const std::string& path, const Overrides& ov, ConfigHandle& out) {
  out.h = mird_config_load(path.c_str());
  if (!out.h) return complain(MIRD_ERR_USAGE);
  auto set = [&](const char* key, const std::string& value) {
    return mird_config_set(out.h, key, value.c_str());
  };
  mird_status st = MIRD_OK;
  if (ov.mode && st == MIRD_OK) st = set("train.mode", *ov.mode);
  if (ov.split_rate && st == MIRD_OK)
    st = set("train.split_rate", std::to_string(*ov.split_rate));
  if (ov.alpha && st == MIRD_OK) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *ov.alpha);
    st = set("train.alpha", buf);
  }
  if (ov.seed && st == MIRD_OK) st = set("train.seed", std::to_string(*ov.seed));
  if (st != MIRD_OK) return complain(st);
  return 0;
}

void print_num(const char* key, double v, bool defined, bool last = false) {
  if (defined && !std::isnan(v))
    std::printf("  \"%s\": %.17g%s\n", key, v, last ? "" : ",");
  else
    std::printf("  \"%s\": null%s\n", key, last ? "" : ",");
}

void print_metrics(const mird_metrics& m) {
  std::printf("{\n");
  print_num("acc", m.acc, m.accf1_defined != 0);
  print_num("f1", m.f1, m.accf1_defined != 0);
  print_num("mae", m.mae, true);
  print_num("corr", m.corr, m.corr_defined != 0, true);
  std::printf("}\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mird: disentangled multimodal sequence training toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", [] { return std::string(mird_version()); });

  std::string config_path, out_dir, checkpoint_path, dataset_path;
  bool force = false;
  int jobs = 1;
  Overrides train_ov, ablate_ov, trace_ov;

  CLI::App* train = app.add_subcommand("train", "Train one run");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_flag("--force", force,
                  "Overwrite outputs even if dataset fingerprints changed");
  add_override_flags(train, train_ov);

  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("dataset", dataset_path, "Dataset file (NDJSON)")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "Run the ablation grid");
  ablate->add_option("--config", config_path, "Config file")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();
  ablate->add_option("--jobs", jobs, "Concurrent cells (default 1)");
  add_override_flags(ablate, ablate_ov);

  CLI::App* trace = app.add_subcommand(
      "mi-trace", "Train MIM with and without unlabeled data, logging MI");
  trace->add_option("--config", config_path, "Config file")->required();
  trace->add_option("--out", out_dir, "Output directory")->required();
  add_override_flags(trace, trace_ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (train->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config(config_path, train_ov, cfg)) return rc;
    mird_metrics m{};
    mird_status st = mird_train(cfg.h, out_dir.c_str(), force ? 1 : 0, &m);
    if (st != MIRD_OK) return complain(st);
    print_metrics(m);
    std::fprintf(stderr, "wrote %s\n", out_dir.c_str());
    return 0;
  }
  if (eval->parsed()) {
    mird_metrics m{};
    mird_status st = mird_eval(checkpoint_path.c_str(), dataset_path.c_str(), &m);
    if (st != MIRD_OK) return complain(st);
    print_metrics(m);
    return 0;
  }
  if (ablate->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config(config_path, ablate_ov, cfg)) return rc;
    char* table = nullptr;
    mird_status st = mird_ablate(cfg.h, out_dir.c_str(), jobs, &table);
    if (st != MIRD_OK) return complain(st);
    std::printf("%s", table);
    mird_string_free(table);
    std::fprintf(stderr, "wrote %s\n", out_dir.c_str());
    return 0;
  }
  ConfigHandle cfg;
  if (int rc = load_config(config_path, trace_ov, cfg)) return rc;
  mird_status st = mird_mi_trace(cfg.h, out_dir.c_str());
  if (st != MIRD_OK) return complain(st);
  std::fprintf(stderr, "wrote %s\n", out_dir.c_str());
  return 0;
}
