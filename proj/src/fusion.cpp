#include "mird/fusion.hpp"

#include "mird/sparsemax.hpp"

namespace mird {

FusionEncoder::FusionEncoder(int vocab, int d_v, int d_a, int d_w_, int d_,
                             double epsilon_, Rng& rng)
    : d_w(d_w_), d(d_), epsilon(epsilon_) {
  if (epsilon <= 0.0) throw Error("FusionEncoder: epsilon must be positive");
  embed = Embedding(vocab, d_w, rng);
  gru1 = GruCell(d_w, d_w, rng);
  gru2 = GruCell(d_w, d_w, rng);
  q_v = Linear(d_w, d_w, rng);
  k_v = Linear(d_v, d_w, rng);
  q_a = Linear(d_w, d_w, rng);
  k_a = Linear(d_a, d_w, rng);
  gate_v = Linear(d_w + d_v, d_w, rng);
  gate_a = Linear(d_w + d_a, d_w, rng);
  disp_v = Linear(d_v, d_w, rng);
  disp_a = Linear(d_a, d_w, rng);
  out = Linear(d_w, d, rng);
}

Tensor FusionEncoder::cross_modal_attend(const Tensor& w_mid,
                                         const ModalitySequence& x) const {
  if (x.length <= 0)
    throw Error(std::string("cross_modal_attend(") + modality_name(x.modality) +
                "): empty sequence");
  const Linear& pq = x.modality == Modality::V ? q_v : q_a;
  const Linear& pk = x.modality == Modality::V ? k_v : k_a;
  // only valid timesteps enter the score matrix, so padding receives exactly
  // zero attention by construction
  Tensor frames = x.valid_frames();           // [T_m, d_m]
  Tensor scores = matmul(pq(w_mid), transpose(pk(frames)));  // [T_L, T_m]
  Tensor attn = sparsemax_rows(scores);
  return matmul(attn, frames);  // [T_L, d_m]
}

Tensor FusionEncoder::adaptive_gate(const Tensor& w_mid, const Tensor& x_tilde,
                                    Modality m) const {
  if (w_mid.shape()[0] != x_tilde.shape()[0])
    throw Error("adaptive_gate: row mismatch " + shape_str(w_mid.shape()) +
                " vs " + shape_str(x_tilde.shape()));
  const Linear& g = m == Modality::V ? gate_v : gate_a;
  return sigmoid(g(concat(w_mid, x_tilde, 1)));
}

Tensor FusionEncoder::displacement(const Tensor& gate_v_m, const Tensor& x_tilde_v,
                                   const Tensor& gate_a_m,
                                   const Tensor& x_tilde_a) const {
  if (!gate_v_m.defined() || !x_tilde_v.defined() || !gate_a_m.defined() ||
      !x_tilde_a.defined())
    throw Error("displacement: both non-verbal modalities are required");
  return add(hadamard(gate_v_m, disp_v(x_tilde_v)),
             hadamard(gate_a_m, disp_a(x_tilde_a)));
}

Tensor FusionEncoder::inject(const Tensor& w_mid, const Tensor& h, double epsilon) {
  if (epsilon <= 0.0) throw Error("inject: epsilon must be positive");
  if (w_mid.shape() != h.shape())
    throw Error("inject: shape mismatch " + shape_str(w_mid.shape()) + " vs " +
                shape_str(h.shape()));
  Tensor lambda = clamped_norm_ratio(l2_norm_rows(w_mid), l2_norm_rows(h), epsilon);
  return add(w_mid, scale_rows(h, lambda));
}

Tensor FusionEncoder::encode(const ModalitySequence& xv, const ModalitySequence& xl,
                             const ModalitySequence& xa) const {
  Tensor w_mid = stack_rows(gru1.unroll(embed(xl.valid_tokens())));
  Tensor xt_v = cross_modal_attend(w_mid, xv);
  Tensor xt_a = cross_modal_attend(w_mid, xa);
  Tensor g_v = adaptive_gate(w_mid, xt_v, Modality::V);
  Tensor g_a = adaptive_gate(w_mid, xt_a, Modality::A);
  Tensor h = displacement(g_v, xt_v, g_a, xt_a);
  Tensor w_tilde = inject(w_mid, h, epsilon);
  Tensor w_last = stack_rows(gru2.unroll(w_tilde));
  return out(mean_axis(w_last, 0));
}

void FusionEncoder::collect(ParamRegistry& reg, const std::string& prefix) const {
  embed.collect(reg, prefix + ".embed");
  gru1.collect(reg, prefix + ".gru1");
  gru2.collect(reg, prefix + ".gru2");
  q_v.collect(reg, prefix + ".q_v");
  k_v.collect(reg, prefix + ".k_v");
  q_a.collect(reg, prefix + ".q_a");
  k_a.collect(reg, prefix + ".k_a");
  gate_v.collect(reg, prefix + ".gate_v");
  gate_a.collect(reg, prefix + ".gate_a");
  disp_v.collect(reg, prefix + ".disp_v");
  disp_a.collect(reg, prefix + ".disp_a");
  out.collect(reg, prefix + ".out");
}

}  // namespace mird
