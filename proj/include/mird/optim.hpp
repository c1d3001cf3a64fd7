#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mird/tensor.hpp"

namespace mird {

// Named trainable tensors. Names double as checkpoint keys, so they must be
// unique within a registry.
using ParamRegistry = std::vector<std::pair<std::string, Tensor>>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // true selects AdamW-style decay
  double clip_norm = 0.0;  // 0 disables clipping
};

// Adam over a fixed parameter list. Parameters with no accumulated gradient
// are treated as having a zero gradient (moments still update, decoupled
// decay still applies).
class Adam {
 public:
  Adam(ParamRegistry params, AdamConfig cfg);

  void step();
  void zero_grad();

  long long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const ParamRegistry& params() const { return params_; }

 private:
  ParamRegistry params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long long t_ = 0;
};

// Scales all gradients in place so their joint l2 norm is at most max_norm.
// Returns the pre-clipping norm.
double clip_global_norm(ParamRegistry& params, double max_norm);

}  // namespace mird
