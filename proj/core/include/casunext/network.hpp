#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "casunext/attention.hpp"
#include "casunext/layers.hpp"

namespace casunext {

/// Full architectural description; a Network is built deterministically
/// from a config and its seed.
struct ModelConfig {
  int input_size = 128;
  int stem_kernel = 7;
  std::array<int, 4> channel_schedule{16, 32, 64, 128};
  std::array<int, 4> stage_depths{1, 1, 3, 1};
  int expansion_ratio = 4;
  double width_multiplier = 1.0;
  bool use_attention = true;
  bool use_depthwise = true;
  bool use_cascade = true;
  std::uint64_t seed = 0;

  /// channel_schedule scaled by width_multiplier, each at least 1.
  std::array<int, 4> scaled_channels() const;
  void validate() const;
};

/// Internal activations of one forward pass, for shape assertions.
struct ForwardTrace {
  Tensor stem;
  std::array<Tensor, 4> encoder;  // pre-pool stage outputs
  Tensor bottleneck;
  std::array<Tensor, 4> decoder;
};

/// Encoder-decoder segmentation network: 7x7 stem (dense, stride 1), four
/// encoder stages of inverted-bottleneck blocks with 2x2 max pooling, four
/// decoder stages with attention-gated skips, and a pointwise head to the
/// two logit channels.
class Network {
 public:
  explicit Network(const ModelConfig& config);

  /// x: N x 1 x S x S with S == config.input_size; returns N x 2 x S x S
  /// logits (channel 0 foreground, channel 1 background).
  Tensor forward(const Tensor& x) const { return forward(x, nullptr); }
  Tensor forward(const Tensor& x, ForwardTrace* trace) const;

  const ModelConfig& config() const { return config_; }

  /// Stable name -> tensor pairs, in construction order; used for
  /// checkpoints and the optimizer.
  NamedTensors named_parameters() const;
  std::size_t parameter_count() const;
  void zero_grad() const;

 private:
  struct EncoderStage {
    SpatialConvParams raise_conv;
    std::vector<InvertedBottleneckParams> blocks;
  };
  struct DecoderStage {
    bool gated = true;
    AttentionGateParams gate;
    SpatialConvParams reduce;
  };

  ModelConfig config_;
  Conv2dParams stem_;
  std::array<EncoderStage, 4> enc_;
  std::array<DecoderStage, 4> dec_;  // dec_[3] runs first (deepest)
  PointwiseHeadParams head_;
};

/// Checkpoint directory: one tensor file per named parameter plus a
/// manifest.txt with the ModelConfig and an FNV-1a content checksum.
void save_checkpoint(const Network& net, const std::string& dir);
Network load_checkpoint(const std::string& dir);

/// Content hash over parameter names and raw tensor bytes.
std::uint64_t checkpoint_checksum(const Network& net);

}  // namespace casunext
