#pragma once

#include <string>
#include <utility>
#include <vector>

#include "casunext/rng.hpp"
#include "casunext/tensor.hpp"

namespace casunext {

// Convolution ops use cross-correlation semantics (no kernel flip) on
// NxCxHxW tensors. All of them record onto the active GradTape.

/// kernel: C_out x C_in x K x K, bias: C_out.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding);

/// One KxK filter per input channel; kernel: C x 1 x K x K, stride 1.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel,
                        const Tensor& bias, int padding);

/// 1x1 cross-channel mixing; kernel: C_out x C_in x 1 x 1.
Tensor pointwise_conv(const Tensor& x, const Tensor& kernel,
                      const Tensor& bias);

/// H and W must be even. Gradient routes to the first (row-major) maximum
/// of each 2x2 window.
Tensor maxpool2x2(const Tensor& x);

/// Doubles H and W. Output pixel (i,j) samples the source at
/// ((i+0.5)/2 - 0.5, (j+0.5)/2 - 0.5) with clamped bilinear interpolation
/// (align-corners=false).
Tensor bilinear_upsample2x(const Tensor& x);

/// Normalizes over the channel axis at every (n,h,w) position, then applies
/// per-channel scale/shift. gamma, beta: shape [C].
Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma,
                           const Tensor& beta, double eps = 1e-5);

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct Conv2dParams {
  Tensor kernel;  // C_out x C_in x K x K
  Tensor bias;    // C_out
  int stride = 1;
  int padding = 0;

  /// Fan-in-scaled uniform init, zero bias, "same" padding for stride 1.
  static Conv2dParams make(int c_in, int c_out, int k, SplitRng rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, NamedTensors& out) const;
};

struct DepthwiseSeparableParams {
  Tensor depthwise_kernel;  // C_in x 1 x K x K
  Tensor depthwise_bias;    // C_in
  Tensor pointwise_kernel;  // C_out x C_in x 1 x 1
  Tensor pointwise_bias;    // C_out
  int padding = 0;

  static DepthwiseSeparableParams make(int c_in, int c_out, int k,
                                       SplitRng rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, NamedTensors& out) const;
};

/// KxK spatial convolution that is either depthwise-separable or dense,
/// depending on the ablation switch it was built with.
struct SpatialConvParams {
  bool separable = true;
  DepthwiseSeparableParams ds;
  Conv2dParams dense;

  static SpatialConvParams make(int c_in, int c_out, int k, bool separable,
                                SplitRng rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, NamedTensors& out) const;
};

/// expand (1x1, C -> r*C) -> channel layer norm -> relu -> KxK spatial
/// (depthwise or dense) -> relu -> project (1x1, r*C -> C), with a residual
/// connection; input and output channel counts are equal.
struct InvertedBottleneckParams {
  Tensor expand_kernel, expand_bias;
  Tensor norm_gamma, norm_beta;
  Tensor spatial_kernel, spatial_bias;  // depthwise rC x 1 x K x K, or dense
  bool depthwise_spatial = true;
  Tensor project_kernel, project_bias;
  int channels = 0;
  int padding = 0;

  static InvertedBottleneckParams make(int channels, int expansion_ratio,
                                       int k, bool use_depthwise, SplitRng rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, NamedTensors& out) const;
};

/// Final 1x1 projection to the two segmentation logit channels
/// (channel 0 = foreground, channel 1 = background).
struct PointwiseHeadParams {
  Tensor kernel;  // 2 x C_in x 1 x 1
  Tensor bias;    // 2

  static PointwiseHeadParams make(int c_in, SplitRng rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, NamedTensors& out) const;
};

}  // namespace casunext
