#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mird/tensor.hpp"

namespace mird {

enum class Modality { V, L, A };

const char* modality_name(Modality m);

// One modality's feature sequence. Containers may hold padding rows past
// `length`; the mask has exactly `length` leading true entries and padding is
// never allowed to influence any computation.
struct ModalitySequence {
  Modality modality = Modality::V;
  int length = 0;             // T_m, the number of valid timesteps
  int d = 0;                  // frame dim for V/A, 0 for L
  std::vector<double> frames; // V/A: container_rows x d, row-major
  std::vector<int> tokens;    // L: container_rows token ids
  std::vector<bool> mask;     // container_rows entries, prefix-contiguous

  int container_rows() const { return static_cast<int>(mask.size()); }

  // Throws Error on any invariant violation. vocab applies to L only.
  void validate(int expected_d, int vocab) const;

  // The first `length` frames as a constant [length, d] tensor.
  Tensor valid_frames() const;
  // The first `length` token ids.
  std::vector<int> valid_tokens() const;
};

ModalitySequence make_frame_sequence(Modality m, int d,
                                     std::vector<double> frames_row_major);
ModalitySequence make_token_sequence(std::vector<int> tokens);

struct Sample {
  long long id = 0;
  std::optional<double> label;
  ModalitySequence v, l, a;
};

struct Dataset {
  int d_v = 0;
  int d_a = 0;
  int vocab = 0;
  std::vector<Sample> samples;

  void validate() const;  // checks every sample against the header dims
};

}  // namespace mird
