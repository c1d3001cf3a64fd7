#pragma once

#include "mird/layers.hpp"
#include "mird/modality.hpp"

namespace mird {

// Modality-agnostic encoder: word-anchored sparsemax cross-modal attention,
// adaptive gating, norm-bounded displacement injection between two recurrent
// stages, masked mean pooling to z^S.
struct FusionEncoder {
  int d_w = 0;
  int d = 0;
  double epsilon = 1.0;

  Embedding embed;        // vocab -> d_w
  GruCell gru1, gru2;     // d_w -> d_w stages around the injection
  Linear q_v, k_v;        // similarity projections, visual
  Linear q_a, k_a;        // similarity projections, audio
  Linear gate_v, gate_a;  // [w_mid; x_tilde] -> gate
  Linear disp_v, disp_a;  // x_tilde -> displacement summand
  Linear out;             // pooled d_w -> d

  FusionEncoder() = default;
  FusionEncoder(int vocab, int d_v, int d_a, int d_w, int d, double epsilon,
                Rng& rng);

  // Word-anchored attention over the valid timesteps of a non-verbal
  // sequence; returns the combined T_L x d_m matrix.
  Tensor cross_modal_attend(const Tensor& w_mid, const ModalitySequence& x) const;

  // sigmoid(linear([w_mid; x_tilde])) rows -> T_L x d_w gates in (0,1).
  Tensor adaptive_gate(const Tensor& w_mid, const Tensor& x_tilde, Modality m) const;

  // H = G_V .* linear_V(X_tilde_V) + G_A .* linear_A(X_tilde_A)
  Tensor displacement(const Tensor& gate_v_m, const Tensor& x_tilde_v,
                      const Tensor& gate_a_m, const Tensor& x_tilde_a) const;

  // W_mid + Diag(lambda) H with lambda_k = min(eps*|w_k|/|h_k|, 1), and
  // lambda_k = 1 where |h_k| = 0.
  static Tensor inject(const Tensor& w_mid, const Tensor& h, double epsilon);

  Tensor encode(const ModalitySequence& xv, const ModalitySequence& xl,
                const ModalitySequence& xa) const;  // -> [d]

  void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace mird
