#pragma once

#include <string>

#include "mird/optim.hpp"

namespace mird {

// Architecture hyperparameters stored alongside the weights so a checkpoint
// is self-describing.
struct ModelMeta {
  int d = 64;       // latent width, z^m and z^S
  int d_w = 32;     // fusion GRU width
  int d_v = 0;      // visual frame dim
  int d_a = 0;      // audio frame dim
  int vocab = 0;    // language vocabulary size
  double epsilon = 1.0;  // injection scale bound

  bool operator==(const ModelMeta&) const = default;
};

void save_checkpoint(const std::string& path, const ModelMeta& meta,
                     const ParamRegistry& params);

// Loads weights into an already constructed registry. Every stored record
// must match a registered parameter by name and shape, and vice versa.
ModelMeta load_checkpoint(const std::string& path, ParamRegistry& params);

// Reads only the header, for pre-flight shape checks.
ModelMeta peek_checkpoint_meta(const std::string& path);

}  // namespace mird
