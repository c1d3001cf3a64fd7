#include "mird/modality.hpp"

#include <cmath>

namespace mird {

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::V: return "V";
    case Modality::L: return "L";
    case Modality::A: return "A";
  }
  return "?";
}

void ModalitySequence::validate(int expected_d, int vocab) const {
  const std::string who = std::string("ModalitySequence(") + modality_name(modality) + ")";
  if (length <= 0) throw Error(who + ": empty sequence");
  if (container_rows() < length)
    throw Error(who + ": mask shorter than length");
  for (int i = 0; i < container_rows(); ++i)
    if (mask[i] != (i < length))
      throw Error(who + ": mask is not prefix-contiguous with " +
                  std::to_string(length) + " true entries");
  if (modality == Modality::L) {
    if (d != 0 || !frames.empty()) throw Error(who + ": language carries frames");
    if (static_cast<int>(tokens.size()) != container_rows())
      throw Error(who + ": token count does not match container size");
    for (int i = 0; i < length; ++i)
      if (tokens[i] < 0 || tokens[i] >= vocab)
        throw Error(who + ": token " + std::to_string(tokens[i]) +
                    " outside vocab " + std::to_string(vocab));
  } else {
    if (!tokens.empty()) throw Error(who + ": non-language carries tokens");
    if (d != expected_d)
      throw Error(who + ": frame dim " + std::to_string(d) + ", expected " +
                  std::to_string(expected_d));
    if (frames.size() != static_cast<std::size_t>(container_rows()) * d)
      throw Error(who + ": frame buffer does not match container size");
    for (int i = 0; i < length * d; ++i)
      if (!std::isfinite(frames[i])) throw Error(who + ": non-finite frame value");
  }
}

Tensor ModalitySequence::valid_frames() const {
  return Tensor::from({length, d},
                      std::vector<double>(frames.begin(),
                                          frames.begin() + static_cast<std::size_t>(length) * d));
}

std::vector<int> ModalitySequence::valid_tokens() const {
  return std::vector<int>(tokens.begin(), tokens.begin() + length);
}

ModalitySequence make_frame_sequence(Modality m, int d,
                                     std::vector<double> frames_row_major) {
  ModalitySequence s;
  s.modality = m;
  s.d = d;
  if (d <= 0 || frames_row_major.size() % d != 0)
    throw Error("make_frame_sequence: buffer not a multiple of d");
  s.length = static_cast<int>(frames_row_major.size()) / d;
  s.frames = std::move(frames_row_major);
  s.mask.assign(s.length, true);
  return s;
}

ModalitySequence make_token_sequence(std::vector<int> tokens) {
  ModalitySequence s;
  s.modality = Modality::L;
  s.length = static_cast<int>(tokens.size());
  s.tokens = std::move(tokens);
  s.mask.assign(s.length, true);
  return s;
}

void Dataset::validate() const {
  for (const auto& s : samples) {
    s.v.validate(d_v, vocab);
    s.l.validate(0, vocab);
    s.a.validate(d_a, vocab);
    if (s.v.modality != Modality::V || s.l.modality != Modality::L ||
        s.a.modality != Modality::A)
      throw Error("Dataset: sample " + std::to_string(s.id) +
                  " has mislabeled modalities");
  }
}

}  // namespace mird
