#include "mird/model.hpp"

namespace mird {

MirdModel::MirdModel(const ModelMeta& m, Rng& rng)
    : meta(m),
      enc_v(Modality::V, m.d_v, m.d_w, m.d, rng),
      enc_l(Modality::L, m.vocab, m.d_w, m.d, rng),
      enc_a(Modality::A, m.d_a, m.d_w, m.d, rng),
      fusion(m.vocab, m.d_v, m.d_a, m.d_w, m.d, m.epsilon, rng),
      dec_v(Modality::V, m.d, m.d_w, m.d_v, rng),
      dec_l(Modality::L, m.d, m.d_w, m.vocab, rng),
      dec_a(Modality::A, m.d, m.d_w, m.d_a, rng),
      reg1(4 * m.d, m.d_w, rng),
      reg2(m.d_w, 1, rng) {}

LatentBundle MirdModel::encode(const Sample& s) const {
  LatentBundle b;
  b.z_v = enc_v.encode(s.v);
  b.z_l = enc_l.encode(s.l);
  b.z_a = enc_a.encode(s.a);
  b.z_s = fusion.encode(s.v, s.l, s.a);
  return b;
}

Tensor MirdModel::predict(const LatentBundle& b) const {
  return sum_all(reg2(tanh_(reg1(b.p()))));
}

Reconstructions MirdModel::decode(const LatentBundle& b, const Sample& s) const {
  Reconstructions r;
  r.v = dec_v.decode(b.z_v, b.z_s, s.v.length);
  r.l = dec_l.decode(b.z_l, b.z_s, s.l.length);
  r.a = dec_a.decode(b.z_a, b.z_s, s.a.length);
  return r;
}

ParamRegistry MirdModel::params() const {
  ParamRegistry reg;
  enc_v.collect(reg, "enc_v");
  enc_l.collect(reg, "enc_l");
  enc_a.collect(reg, "enc_a");
  fusion.collect(reg, "fusion");
  dec_v.collect(reg, "dec_v");
  dec_l.collect(reg, "dec_l");
  dec_a.collect(reg, "dec_a");
  reg1.collect(reg, "reg.l1");
  reg2.collect(reg, "reg.l2");
  return reg;
}

void MirdModel::zero_grads() const {
  for (auto& [name, p] : params()) p.zero_grad();
}

}  // namespace mird
