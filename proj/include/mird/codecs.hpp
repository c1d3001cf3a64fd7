#pragma once

#include "mird/layers.hpp"
#include "mird/modality.hpp"

namespace mird {

inline constexpr double kLossGuard = 1e-8;

// Modality-specific encoder: recurrent pass over the valid timesteps, final
// hidden state mapped to the d-dimensional private latent.
struct SequenceEncoder {
  Modality modality = Modality::V;
  Embedding embed;  // L only
  GruCell gru;
  Linear out;

  SequenceEncoder() = default;
  // in_or_vocab: frame dim for V/A, vocabulary size for L
  SequenceEncoder(Modality m, int in_or_vocab, int hidden, int d, Rng& rng);

  Tensor encode(const ModalitySequence& x) const;  // -> [d]
  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// Decoder seeded from [z_m; z_s], unrolled with an input-free recurrent cell,
// emitting frames (V/A) or vocab logits (L) per step.
struct SequenceDecoder {
  Modality modality = Modality::V;
  Linear seed;   // 2d -> hidden
  GruCell gru;   // input-free
  Linear emit;   // hidden -> d_m or vocab

  SequenceDecoder() = default;
  SequenceDecoder(Modality m, int d, int hidden, int out_dim, Rng& rng);

  Tensor decode(const Tensor& z_m, const Tensor& z_s, int target_len) const;
  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// log(MSE_V + guard) + log(CE_L + guard) + log(MSE_A + guard), each inner
// loss averaged over the unmasked elements of the whole batch. The rec_*
// vectors hold one reconstruction per sample, aligned with `batch`.
Tensor recon_loss_batch(const std::vector<Tensor>& rec_v,
                        const std::vector<Tensor>& rec_l,
                        const std::vector<Tensor>& rec_a,
                        const std::vector<const Sample*>& batch,
                        double guard = kLossGuard);

}  // namespace mird
