#pragma once

#include "casunext/layers.hpp"
#include "casunext/rng.hpp"
#include "casunext/tensor.hpp"

namespace casunext {

/// Skip-connection attention gate. The three linear maps are per-position
/// 1x1 channel mixes: W1 lifts the upsampled high-level map from C1 to 3*C2
/// channels so the first split can be added to the low-level map.
struct AttentionGateParams {
  Tensor w1, b1;  // C1 -> 3*C2
  Tensor w2, b2;  // C2 -> C2
  Tensor w3, b3;  // C2 -> C2

  static AttentionGateParams make(int c1, int c2, SplitRng rng);
  int c1() const { return w1.dim(1); }
  int c2() const { return w2.dim(0); }
  void collect(const std::string& prefix, NamedTensors& out) const;
};

/// Intermediates of one gate evaluation, for inspection and tests.
struct GateActivations {
  Tensor u;     // upsampled x1
  Tensor c;     // u * W1
  Tensor c1, c2, c3;
  Tensor s;     // (c1 + x2) * W2
  Tensor y1;    // s (.) x2
  Tensor y2;    // sigmoid(c2) (.) tanh(c3)
  Tensor gate;  // sigmoid(y1 + y2), in (0,1)
  Tensor y;     // gate * W3
  Tensor z;     // concat(y, u)
};

/// x1: N x C1 x H/2 x W/2 (high-level), x2: N x C2 x H x W (low-level).
/// Computes, in order:
///   u  = upsample2x(x1)
///   c  = u*W1;  c1,c2,c3 = channel split of c
///   s  = (c1 + x2)*W2
///   y1 = s (.) x2
///   y2 = sigmoid(c2) (.) tanh(c3)
///   y  = sigmoid(y1 + y2)*W3
///   z  = concat(y, u)           -> N x (C2+C1) x H x W
Tensor attention_gate(const Tensor& x1, const Tensor& x2,
                      const AttentionGateParams& p,
                      GateActivations* acts = nullptr);

}  // namespace casunext
