#pragma once

#include <string>

#include "mird/data_synth.hpp"
#include "mird/trainer.hpp"

namespace mird {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Everything a command needs, resolved from the config file plus overrides.
struct RunSettings {
  TrainConfig train;
  TrainMode mode = TrainMode::MIM;
  bool synthetic = true;
  SyntheticSpec synth;
  std::string train_path, val_path, test_path, unlabeled_path;
};

// Applies one "section.key = value" assignment. Unknown sections or keys and
// unparsable values throw ConfigError naming the offender.
void apply_config_key(RunSettings& s, const std::string& section,
                      const std::string& key, const std::string& value);

// Flat INI-style file: [section] headers, key = value lines, # or ;
// comments. Section-less keys are errors.
RunSettings parse_config_file(const std::string& path);

// Resolved snapshot serialized as a JSON string (sorted keys, no
// timestamps), embedded in the run manifest.
std::string settings_snapshot_json(const RunSettings& s);

}  // namespace mird
