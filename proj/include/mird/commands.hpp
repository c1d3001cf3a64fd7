#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mird/config_file.hpp"

namespace mird {

// 64-bit FNV-1a, used for dataset fingerprints in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);

struct TrainOutputs {
  MetricsReport val_metrics;  // final validation metrics (NaN fields if no val)
  std::string manifest_path, checkpoint_path, trace_path, metrics_path;
};

// Resolves data, writes the manifest, trains, and drops checkpoint, trace
// CSV, and final metrics into out_dir. An existing manifest whose dataset
// fingerprints disagree with the current inputs aborts unless force is set.
TrainOutputs run_train_command(const RunSettings& s, const std::string& out_dir,
                               bool force = false);

// Loads a checkpoint and scores a fully labeled dataset.
MetricsReport run_eval_command(const std::string& checkpoint_path,
                               const std::string& dataset_path);

// One ablation grid cell.
struct AblationRow {
  std::string variant;
  TrainMode mode = TrainMode::MIM;
  int split_rate = 0;
  bool with_input_terms = true;
  bool with_recon = true;
  MetricsReport test_metrics;
  double r2_shared_from_zs = 0.0;
  double r2_shared_max_private = 0.0;  // worst-case leak: max over z_v,z_l,z_a
  double r2_priv_v_from_zv = 0.0;
  double r2_priv_l_from_zl = 0.0;
  double r2_priv_a_from_za = 0.0;
};

struct AblationOutputs {
  std::vector<AblationRow> rows;   // fixed order, see run_ablate_command
  std::string table;               // rendered text table
  std::string json_path;           // out_dir/ablation.json
  std::uint64_t data_fingerprint = 0;  // shared by every row
};

// Five cells against one synthetic dataset and seed: full model with
// unlabeled data, labeled-only, without the input MI terms, without the MI
// constraint, and without reconstruction. jobs > 1 runs cells on that many
// threads; results are written in fixed order either way.
AblationOutputs run_ablate_command(const RunSettings& s,
                                   const std::string& out_dir, int jobs = 1);

struct MiTraceOutputs {
  std::string split0_path, splitn_path;
  std::vector<double> split0_mi, splitn_mi;  // per-epoch six-pair CLUB sums
};

// Trains MIM twice on identical data, with split_rate 0 and with the
// configured split_rate (> 0 required), and writes one epoch,mi CSV each.
MiTraceOutputs run_mi_trace_command(const RunSettings& s,
                                    const std::string& out_dir);

}  // namespace mird
