#pragma once

#include <functional>
#include <memory>

#include "mird/metrics.hpp"
#include "mird/model.hpp"

namespace mird {

enum class TrainMode { MIM, OC, NC };

const char* train_mode_name(TrainMode m);
TrainMode parse_train_mode(const std::string& s);  // "mim" | "oc" | "nc"

struct TrainConfig {
  double alpha = 0.1;        // constraint weight
  double eta1 = 1e-3;        // Adam rate for the MI estimators
  double eta2 = 1e-5;        // AdamW rate for theta
  int epochs = 100;          // T
  int inner_steps = 5;       // T'
  int batch_size = 32;       // N_bs
  int split_rate = 0;        // N_u = split_rate * N_bs per iteration
  int d = 64;
  int d_w = 32;
  double epsilon = 1.0;
  std::uint64_t seed = 0;
  double loss_guard = 1e-8;
  double clip_norm = 5.0;     // theta updates only
  double weight_decay = 0.01; // AdamW decoupled decay
  bool with_input_terms = true;  // false drops the three input-MI terms
  bool with_recon = true;        // false drops the reconstruction loss

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double l_reg = 0.0;
  double l_recon = 0.0;   // NaN when reconstruction is disabled
  double l_mim = 0.0;     // constraint loss actually used (0 in NC mode)
  double val_acc = 0.0, val_f1 = 0.0, val_mae = 0.0, val_corr = 0.0;
  double mi_latent = 0.0;  // six-pair CLUB sum, NaN outside MIM mode
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  long long outer_iterations = 0;
  long long theta_updates = 0;
  long long theta_var_updates = 0;
  std::vector<std::string> warnings;
};

// Test instrumentation: both fire after the respective backward pass and
// before the optimizer step.
struct TrainHooks {
  std::function<void(const MirdModel&, const MiEstimators&, long long outer,
                     int inner)>
      after_inner_backward;
  std::function<void(const MirdModel&, const MiEstimators&, long long outer)>
      after_theta_backward;
};

struct TrainResult {
  std::shared_ptr<MirdModel> model;
  std::shared_ptr<MiEstimators> estimators;
  TrainTrace trace;
};

// Full alternating optimization. Validation metrics are recorded per epoch
// when val is given, otherwise the val columns hold NaN.
TrainResult run_training(const TrainConfig& cfg, const Dataset& labeled,
                         const Dataset& unlabeled, TrainMode mode,
                         const Dataset* val = nullptr,
                         const TrainHooks& hooks = {});

// Forward-only prediction for every sample, in dataset order.
std::vector<double> predict_all(const MirdModel& model, const Dataset& ds);

// Prediction + metrics; every sample must carry a label.
MetricsReport evaluate(const MirdModel& model, const Dataset& ds);

// Latents for every sample as plain rows (z_v, z_l, z_a, z_s).
struct LatentRows {
  Rows z_v, z_l, z_a, z_s;
};
LatentRows collect_latents(const MirdModel& model, const Dataset& ds);

// epoch,l_reg,l_recon,l_mim,val_acc,val_f1,val_mae,val_corr with %.17g
// values; byte-identical for identical traces.
void write_trace_csv(const TrainTrace& trace, const std::string& path);

}  // namespace mird
