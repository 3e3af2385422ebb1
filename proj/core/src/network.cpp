#include "casunext/network.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "casunext/config.hpp"

namespace casunext {

std::array<int, 4> ModelConfig::scaled_channels() const {
  std::array<int, 4> out{};
  for (int i = 0; i < 4; ++i) {
    out[i] = std::max(
        1, static_cast<int>(std::llround(channel_schedule[i] * width_multiplier)));
  }
  return out;
}

void ModelConfig::validate() const {
  if (input_size <= 0 || input_size % 16 != 0) {
    throw std::invalid_argument(
        "ModelConfig: input_size must be a positive multiple of 16, got " +
        std::to_string(input_size));
  }
  if (stem_kernel < 1 || stem_kernel % 2 == 0) {
    throw std::invalid_argument("ModelConfig: stem_kernel must be odd");
  }
  auto ch = scaled_channels();
  for (int i = 0; i < 4; ++i) {
    if (i > 0 && ch[i] <= ch[i - 1]) {
      throw std::invalid_argument(
          "ModelConfig: channel schedule must be strictly increasing");
    }
    if (stage_depths[i] <= 0) {
      throw std::invalid_argument("ModelConfig: stage depths must be positive");
    }
  }
  if (expansion_ratio < 1) {
    throw std::invalid_argument("ModelConfig: expansion_ratio must be >= 1");
  }
  if (width_multiplier <= 0.0) {
    throw std::invalid_argument("ModelConfig: width_multiplier must be > 0");
  }
}

Network::Network(const ModelConfig& config) : config_(config) {
  config_.validate();
  const auto ch = config_.scaled_channels();
  const int k = config_.stem_kernel;
  SplitRng root(config_.seed);

  stem_ = Conv2dParams::make(1, ch[0], k, root.split("stem"));

  int c_prev = ch[0];
  for (int i = 0; i < 4; ++i) {
    std::string stage = "enc" + std::to_string(i);
    enc_[i].raise_conv = SpatialConvParams::make(
        c_prev, ch[i], k, config_.use_depthwise, root.split(stage + ".raise"));
    enc_[i].blocks.clear();
    for (int b = 0; b < config_.stage_depths[i]; ++b) {
      enc_[i].blocks.push_back(InvertedBottleneckParams::make(
          ch[i], config_.expansion_ratio, k, config_.use_depthwise,
          root.split(stage + ".block" + std::to_string(b))));
    }
    c_prev = ch[i];
  }

  // dec_[i] fuses the stage-i encoder activation with the deeper feature
  // map: x1 has ch[i+1] channels (ch[3] for the bottleneck), x2 has ch[i].
  for (int i = 3; i >= 0; --i) {
    std::string stage = "dec" + std::to_string(i);
    const int c_high = (i == 3) ? ch[3] : ch[i + 1];
    dec_[i].gated = config_.use_attention;
    if (config_.use_attention) {
      dec_[i].gate =
          AttentionGateParams::make(c_high, ch[i], root.split(stage + ".gate"));
    }
    dec_[i].reduce =
        SpatialConvParams::make(ch[i] + c_high, ch[i], k, config_.use_depthwise,
                                root.split(stage + ".reduce"));
  }

  head_ = PointwiseHeadParams::make(ch[0], root.split("head"));
}

Tensor Network::forward(const Tensor& x, ForwardTrace* trace) const {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != config_.input_size ||
      x.dim(3) != config_.input_size) {
    throw std::invalid_argument(
        "Network::forward: expected Nx1x" + std::to_string(config_.input_size) +
        "x" + std::to_string(config_.input_size) + " input, got shape " +
        shape_to_string(x.shape()));
  }
  Tensor h = stem_.forward(x);
  if (trace) trace->stem = h;

  std::array<Tensor, 4> skips;
  for (int i = 0; i < 4; ++i) {
    h = enc_[i].raise_conv.forward(h);
    for (const auto& block : enc_[i].blocks) h = block.forward(h);
    skips[i] = h;
    if (trace) trace->encoder[i] = h;
    h = maxpool2x2(h);
  }
  if (trace) trace->bottleneck = h;

  for (int i = 3; i >= 0; --i) {
    Tensor fused;
    if (dec_[i].gated) {
      fused = attention_gate(h, skips[i], dec_[i].gate);
    } else {
      fused = concat_channels(skips[i], bilinear_upsample2x(h));
    }
    h = dec_[i].reduce.forward(fused);
    if (trace) trace->decoder[i] = h;
  }
  return head_.forward(h);
}

NamedTensors Network::named_parameters() const {
  NamedTensors out;
  stem_.collect("stem", out);
  for (int i = 0; i < 4; ++i) {
    std::string stage = "enc" + std::to_string(i);
    enc_[i].raise_conv.collect(stage + ".raise", out);
    for (std::size_t b = 0; b < enc_[i].blocks.size(); ++b) {
      enc_[i].blocks[b].collect(stage + ".block" + std::to_string(b), out);
    }
  }
  for (int i = 3; i >= 0; --i) {
    std::string stage = "dec" + std::to_string(i);
    if (dec_[i].gated) dec_[i].gate.collect(stage + ".gate", out);
    dec_[i].reduce.collect(stage + ".reduce", out);
  }
  head_.collect("head", out);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.size();
  return n;
}

void Network::zero_grad() const {
  for (auto& [name, t] : named_parameters()) {
    Tensor tt = t;
    tt.zero_grad();
  }
}

// ------------------------------------------------------------ checkpoints

namespace {

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void put_model_fields(KeyValueFile& kv, const ModelConfig& c) {
  kv.set_int("model.input_size", c.input_size);
  kv.set_int("model.stem_kernel", c.stem_kernel);
  kv.set_ints("model.channel_schedule",
              std::vector<int>(c.channel_schedule.begin(),
                               c.channel_schedule.end()));
  kv.set_ints("model.stage_depths",
              std::vector<int>(c.stage_depths.begin(), c.stage_depths.end()));
  kv.set_int("model.expansion_ratio", c.expansion_ratio);
  kv.set_double("model.width_multiplier", c.width_multiplier);
  kv.set_bool("model.use_attention", c.use_attention);
  kv.set_bool("model.use_depthwise", c.use_depthwise);
  kv.set_bool("model.use_cascade", c.use_cascade);
  kv.set_uint("model.seed", c.seed);
}

ModelConfig read_model_fields(const KeyValueFile& kv) {
  ModelConfig c;
  c.input_size = static_cast<int>(kv.get_int("model.input_size", c.input_size));
  c.stem_kernel =
      static_cast<int>(kv.get_int("model.stem_kernel", c.stem_kernel));
  auto sched = kv.get_ints("model.channel_schedule");
  auto depths = kv.get_ints("model.stage_depths");
  if (sched.size() == 4)
    std::copy(sched.begin(), sched.end(), c.channel_schedule.begin());
  if (depths.size() == 4)
    std::copy(depths.begin(), depths.end(), c.stage_depths.begin());
  c.expansion_ratio =
      static_cast<int>(kv.get_int("model.expansion_ratio", c.expansion_ratio));
  c.width_multiplier =
      kv.get_double("model.width_multiplier", c.width_multiplier);
  c.use_attention = kv.get_bool("model.use_attention", c.use_attention);
  c.use_depthwise = kv.get_bool("model.use_depthwise", c.use_depthwise);
  c.use_cascade = kv.get_bool("model.use_cascade", c.use_cascade);
  c.seed = kv.get_uint("model.seed", c.seed);
  return c;
}

}  // namespace

std::uint64_t checkpoint_checksum(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, t] : net.named_parameters()) {
    h = fnv1a_bytes(h, name.data(), name.size());
    h = fnv1a_bytes(h, t.data().data(), t.size() * sizeof(double));
  }
  return h;
}

void save_checkpoint(const Network& net, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& [name, t] : net.named_parameters()) {
    save_tensor((fs::path(dir) / (name + ".bin")).string(), t);
  }
  KeyValueFile kv;
  kv.set("format", "casunext-checkpoint-1");
  put_model_fields(kv, net.config());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(checkpoint_checksum(net)));
  kv.set("checksum", buf);
  kv.save((fs::path(dir) / "manifest.txt").string());
}

Network load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path manifest = fs::path(dir) / "manifest.txt";
  if (!fs::exists(manifest)) {
    throw std::runtime_error("load_checkpoint: no manifest.txt in " + dir);
  }
  KeyValueFile kv = KeyValueFile::parse_file(manifest.string());
  Network net(read_model_fields(kv));
  for (auto& [name, t] : net.named_parameters()) {
    Tensor loaded = load_tensor((fs::path(dir) / (name + ".bin")).string());
    if (loaded.shape() != t.shape()) {
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name +
                               ": file " + shape_to_string(loaded.shape()) +
                               " vs model " + shape_to_string(t.shape()));
    }
    Tensor dst = t;
    std::copy(loaded.data().begin(), loaded.data().end(), dst.data().begin());
  }
  std::string want = kv.get_string("checksum", "");
  if (!want.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(checkpoint_checksum(net)));
    if (want != buf) {
      throw std::runtime_error("load_checkpoint: checksum mismatch in " + dir);
    }
  }
  return net;
}

}  // namespace casunext
