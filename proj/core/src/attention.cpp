#include "casunext/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace casunext {

AttentionGateParams AttentionGateParams::make(int c1, int c2, SplitRng rng) {
  AttentionGateParams p;
  double b1v = std::sqrt(1.0 / c1);
  p.w1 = Tensor::uniform({3 * c2, c1, 1, 1}, rng, -b1v, b1v, true);
  p.b1 = Tensor::zeros({3 * c2}, true);
  double b2v = std::sqrt(1.0 / c2);
  p.w2 = Tensor::uniform({c2, c2, 1, 1}, rng, -b2v, b2v, true);
  p.b2 = Tensor::zeros({c2}, true);
  p.w3 = Tensor::uniform({c2, c2, 1, 1}, rng, -b2v, b2v, true);
  p.b3 = Tensor::zeros({c2}, true);
  return p;
}

void AttentionGateParams::collect(const std::string& prefix,
                                  NamedTensors& out) const {
  out.emplace_back(prefix + ".w1.weight", w1);
  out.emplace_back(prefix + ".w1.bias", b1);
  out.emplace_back(prefix + ".w2.weight", w2);
  out.emplace_back(prefix + ".w2.bias", b2);
  out.emplace_back(prefix + ".w3.weight", w3);
  out.emplace_back(prefix + ".w3.bias", b3);
}

Tensor attention_gate(const Tensor& x1, const Tensor& x2,
                      const AttentionGateParams& p, GateActivations* acts) {
  if (x1.rank() != 4 || x2.rank() != 4) {
    throw std::invalid_argument("attention_gate: inputs must be 4-d, got " +
                                shape_to_string(x1.shape()) + " and " +
                                shape_to_string(x2.shape()));
  }
  if (2 * x1.dim(2) != x2.dim(2) || 2 * x1.dim(3) != x2.dim(3)) {
    throw std::invalid_argument(
        "attention_gate: x1 spatial size must be exactly half of x2, got " +
        shape_to_string(x1.shape()) + " and " + shape_to_string(x2.shape()));
  }
  const int c1 = x1.dim(1);
  const int c2 = x2.dim(1);
  if (p.w1.dim(1) != c1 || p.w1.dim(0) != 3 * c2 || p.w2.dim(0) != c2 ||
      p.w3.dim(0) != c2) {
    throw std::invalid_argument(
        "attention_gate: parameter shapes do not match inputs (w1 " +
        shape_to_string(p.w1.shape()) + ", x1 " + shape_to_string(x1.shape()) +
        ", x2 " + shape_to_string(x2.shape()) + ")");
  }

  Tensor u = bilinear_upsample2x(x1);
  Tensor c = pointwise_conv(u, p.w1, p.b1);
  Tensor c_1 = narrow_channels(c, 0, c2);
  Tensor c_2 = narrow_channels(c, c2, c2);
  Tensor c_3 = narrow_channels(c, 2 * c2, c2);
  Tensor s = pointwise_conv(add(c_1, x2), p.w2, p.b2);
  Tensor y1 = mul(s, x2);
  Tensor y2 = mul(sigmoid(c_2), tanh(c_3));
  Tensor gate = sigmoid(add(y1, y2));
  Tensor y = pointwise_conv(gate, p.w3, p.b3);
  Tensor z = concat_channels(y, u);

  if (acts != nullptr) {
    acts->u = u;
    acts->c = c;
    acts->c1 = c_1;
    acts->c2 = c_2;
    acts->c3 = c_3;
    acts->s = s;
    acts->y1 = y1;
    acts->y2 = y2;
    acts->gate = gate;
    acts->y = y;
    acts->z = z;
  }
  return z;
}

}  // namespace casunext
