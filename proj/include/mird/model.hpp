#pragma once

#include "mird/checkpoint.hpp"
#include "mird/codecs.hpp"
#include "mird/fusion.hpp"
#include "mird/mi.hpp"

namespace mird {

// The four disentangled representations for one sample.
struct LatentBundle {
  Tensor z_v, z_l, z_a, z_s;  // each [d]

  // [z_v; z_l; z_a; z_s], exactly in that order
  Tensor p() const {
    return concat(concat(z_v, z_l, 0), concat(z_a, z_s, 0), 0);
  }
};

struct Reconstructions {
  Tensor v;  // [T_v, d_v]
  Tensor l;  // [T_l, vocab] logits
  Tensor a;  // [T_a, d_a]
};

// Everything owned by theta: three private encoders, the fusion encoder,
// three decoders, and the regression head.
struct MirdModel {
  ModelMeta meta;
  SequenceEncoder enc_v, enc_l, enc_a;
  FusionEncoder fusion;
  SequenceDecoder dec_v, dec_l, dec_a;
  Linear reg1;  // 4d -> d_w
  Linear reg2;  // d_w -> 1

  MirdModel(const ModelMeta& m, Rng& rng);

  LatentBundle encode(const Sample& s) const;
  Tensor predict(const LatentBundle& b) const;  // scalar
  Reconstructions decode(const LatentBundle& b, const Sample& s) const;

  ParamRegistry params() const;  // fixed declaration order
  void zero_grads() const;
};

}  // namespace mird
