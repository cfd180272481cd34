#pragma once

#include <torch/torch.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cgigan/error.hpp"
#include "cgigan/rng.hpp"

namespace cgigan::models {

namespace nn = torch::nn;

/// Layout of the encoder-decoder generator. Every block uses a square kernel
/// with "same" padding (kernel / 2); stride-2 transposed convolutions need an
/// explicit output padding to land on odd sizes such as 7.
struct GeneratorConfig {
  std::int64_t image_size = 28;
  std::int64_t kernel_size = 3;
  double negative_slope = 0.2;
  std::vector<std::int64_t> encoder_channels{32, 64, 128, 128, 128};
  std::vector<std::int64_t> encoder_strides{2, 2, 2, 1, 1};
  std::vector<std::int64_t> decoder_channels{128, 128, 64, 64, 32, 32, 16, 16};
  std::vector<std::int64_t> decoder_strides{1, 1, 2, 1, 2, 1, 2, 1};
  std::vector<std::int64_t> decoder_output_padding{0, 0, 0, 0, 1, 0, 1, 0};

  /// Spatial size after each block (encoder then decoder). Throws
  /// ConfigurationError when the plan is inconsistent or does not return to
  /// `image_size`.
  std::vector<std::int64_t> spatial_plan() const {
    if (image_size < 1 || kernel_size < 1 || kernel_size % 2 == 0) {
      throw ConfigurationError("generator: image_size must be >= 1 and kernel_size odd");
    }
    if (encoder_channels.empty() || encoder_channels.size() != encoder_strides.size()) {
      throw ConfigurationError("generator: encoder channel and stride lists must be non-empty and equal length");
    }
    if (decoder_channels.empty() || decoder_channels.size() != decoder_strides.size() ||
        decoder_channels.size() != decoder_output_padding.size()) {
      throw ConfigurationError("generator: decoder channel, stride and output-padding lists must match in length");
    }
    const auto pad = kernel_size / 2;
    std::vector<std::int64_t> sizes;
    auto s = image_size;
    for (std::size_t i = 0; i < encoder_strides.size(); ++i) {
      if (encoder_strides[i] < 1 || encoder_channels[i] < 1) {
        throw ConfigurationError("generator: encoder block " + std::to_string(i) + " has a non-positive stride/width");
      }
      s = (s + 2 * pad - kernel_size) / encoder_strides[i] + 1;
      if (s < 1) throw ConfigurationError("generator: encoder collapses the image below 1 pixel");
      sizes.push_back(s);
    }
    for (std::size_t i = 0; i < decoder_strides.size(); ++i) {
      const auto st = decoder_strides[i];
      const auto op = decoder_output_padding[i];
      if (st < 1 || decoder_channels[i] < 1 || op < 0 || op >= st) {
        throw ConfigurationError("generator: decoder block " + std::to_string(i) +
                                 " needs stride >= 1, width >= 1 and 0 <= output_padding < stride");
      }
      s = (s - 1) * st - 2 * pad + kernel_size + op;
      sizes.push_back(s);
    }
    if (s != image_size) {
      throw ConfigurationError("generator: stride/padding plan ends at " + std::to_string(s) + "x" +
                               std::to_string(s) + ", expected " + std::to_string(image_size) + "x" +
                               std::to_string(image_size));
    }
    return sizes;
  }
};

struct CriticConfig {
  std::int64_t image_size = 28;
  std::int64_t kernel_size = 3;
  double negative_slope = 0.2;
  std::vector<std::int64_t> channels{32, 64, 128, 128};
  std::vector<std::int64_t> strides{2, 2, 2, 1};
  std::int64_t flatten_width = 2048;

  /// Width of the flattened final feature map implied by the plan.
  std::int64_t planned_flatten_width() const {
    if (image_size < 1 || kernel_size < 1 || kernel_size % 2 == 0) {
      throw ConfigurationError("critic: image_size must be >= 1 and kernel_size odd");
    }
    if (channels.empty() || channels.size() != strides.size()) {
      throw ConfigurationError("critic: channel and stride lists must be non-empty and equal length");
    }
    const auto pad = kernel_size / 2;
    auto s = image_size;
    for (std::size_t i = 0; i < strides.size(); ++i) {
      if (strides[i] < 1 || channels[i] < 1) throw ConfigurationError("critic: non-positive stride/width");
      s = (s + 2 * pad - kernel_size) / strides[i] + 1;
    }
    return channels.back() * s * s;
  }

  void validate() const {
    const auto w = planned_flatten_width();
    if (w != flatten_width) {
      throw ConfigurationError("critic: plan flattens to " + std::to_string(w) + " units, configured " +
                               std::to_string(flatten_width));
    }
  }
};

namespace detail {

inline void check_image_batch(const torch::Tensor& x, std::int64_t image_size, const char* who) {
  if (x.dim() != 4 || x.size(1) != 1 || x.size(2) != image_size || x.size(3) != image_size) {
    throw InvalidArgument(std::string(who) + ": expected (batch, 1, " + std::to_string(image_size) + ", " +
                          std::to_string(image_size) + "), got " + c10::str(x.sizes()));
  }
}

// He-uniform for a LeakyReLU-followed layer with the given fan-in.
inline void he_uniform_(torch::Tensor& w, double fan_in, double slope, at::Generator& gen) {
  const double bound = std::sqrt(6.0 / ((1.0 + slope * slope) * fan_in));
  w.uniform_(-bound, bound, gen);
}

}  // namespace detail

class GeneratorImpl : public nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig config = {}) : config_(std::move(config)) {
    config_.spatial_plan();
    const auto k = config_.kernel_size;
    const auto pad = k / 2;
    std::int64_t in = 1;
    for (std::size_t i = 0; i < config_.encoder_channels.size(); ++i) {
      const auto out = config_.encoder_channels[i];
      enc_conv_.push_back(register_module(
          "enc" + std::to_string(i) + "_conv",
          nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(config_.encoder_strides[i]).padding(pad).bias(false))));
      enc_bn_.push_back(register_module("enc" + std::to_string(i) + "_bn", nn::BatchNorm2d(out)));
      in = out;
    }
    for (std::size_t i = 0; i < config_.decoder_channels.size(); ++i) {
      const auto out = config_.decoder_channels[i];
      dec_conv_.push_back(register_module("dec" + std::to_string(i) + "_deconv",
                                          nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, k)
                                                                  .stride(config_.decoder_strides[i])
                                                                  .padding(pad)
                                                                  .output_padding(config_.decoder_output_padding[i])
                                                                  .bias(false))));
      dec_bn_.push_back(register_module("dec" + std::to_string(i) + "_bn", nn::BatchNorm2d(out)));
      in = out;
    }
    out_conv_ = register_module("out_conv", nn::Conv2d(nn::Conv2dOptions(in, 1, k).padding(pad)));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    detail::check_image_batch(x, config_.image_size, "generator_forward");
    auto h = x;
    for (std::size_t i = 0; i < enc_conv_.size(); ++i) h = block(enc_conv_[i]->forward(h), enc_bn_[i]);
    for (std::size_t i = 0; i < dec_conv_.size(); ++i) h = block(dec_conv_[i]->forward(h), dec_bn_[i]);
    return torch::sigmoid(out_conv_->forward(h));
  }

  /// Re-draws every weight from `seed`: He-uniform convolutions, unit BN
  /// scale, zero shifts and zero running statistics reset.
  void reset_parameters(std::uint64_t seed) {
    torch::NoGradGuard no_grad;
    auto gen = make_generator(seed);
    const auto k2 = static_cast<double>(config_.kernel_size * config_.kernel_size);
    const auto slope = config_.negative_slope;
    for (auto& c : enc_conv_) detail::he_uniform_(c->weight, c->weight.size(1) * k2, slope, gen);
    for (std::size_t i = 0; i < dec_conv_.size(); ++i) {
      auto& c = dec_conv_[i];
      const auto s = static_cast<double>(config_.decoder_strides[i]);
      // Transposed weights are (in, out, k, k); each output sees in*k*k/s^2 taps.
      detail::he_uniform_(c->weight, c->weight.size(0) * k2 / (s * s), slope, gen);
    }
    detail::he_uniform_(out_conv_->weight, out_conv_->weight.size(1) * k2, 0.0, gen);
    out_conv_->bias.zero_();
    for (auto* bns : {&enc_bn_, &dec_bn_}) {
      for (auto& bn : *bns) {
        bn->weight.fill_(1.0);
        bn->bias.zero_();
        bn->running_mean.zero_();
        bn->running_var.fill_(1.0);
        bn->num_batches_tracked.zero_();
      }
    }
  }

  /// When false, training-mode forwards normalise with batch statistics but
  /// leave the running buffers untouched (used by the shadow copy).
  void set_track_running_stats(bool on) { track_running_stats_ = on; }
  bool tracks_running_stats() const { return track_running_stats_; }

  const GeneratorConfig& config() const { return config_; }

 private:
  torch::Tensor block(const torch::Tensor& h, nn::BatchNorm2d& bn) {
    const bool use_batch_stats = is_training();
    const bool update = use_batch_stats && track_running_stats_;
    const auto& opt = bn->options;
    auto y = torch::batch_norm(h, bn->weight, bn->bias, update || !use_batch_stats ? bn->running_mean : torch::Tensor{},
                               update || !use_batch_stats ? bn->running_var : torch::Tensor{}, use_batch_stats,
                               opt.momentum().value_or(0.1), opt.eps(), /*cudnn_enabled=*/false);
    return torch::leaky_relu(y, config_.negative_slope);
  }

  GeneratorConfig config_;
  std::vector<nn::Conv2d> enc_conv_;
  std::vector<nn::BatchNorm2d> enc_bn_;
  std::vector<nn::ConvTranspose2d> dec_conv_;
  std::vector<nn::BatchNorm2d> dec_bn_;
  nn::Conv2d out_conv_{nullptr};
  bool track_running_stats_ = true;
};
TORCH_MODULE(Generator);

/// Unbounded real-valued critic: strided convolutions with LeakyReLU, a
/// flatten stage and a single linear unit. No normalisation layers, so the
/// gradient penalty sees per-sample gradients.
class CriticImpl : public nn::Module {
 public:
  explicit CriticImpl(CriticConfig config = {}) : config_(std::move(config)) {
    config_.validate();
    const auto k = config_.kernel_size;
    std::int64_t in = 1;
    for (std::size_t i = 0; i < config_.channels.size(); ++i) {
      convs_.push_back(register_module(
          "conv" + std::to_string(i),
          nn::Conv2d(nn::Conv2dOptions(in, config_.channels[i], k).stride(config_.strides[i]).padding(k / 2))));
      in = config_.channels[i];
    }
    head_ = register_module("head", nn::Linear(config_.flatten_width, 1));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    detail::check_image_batch(x, config_.image_size, "critic_forward");
    auto h = x;
    for (auto& c : convs_) h = torch::leaky_relu(c->forward(h), config_.negative_slope);
    return head_->forward(h.flatten(1)).squeeze(1);
  }

  void reset_parameters(std::uint64_t seed) {
    torch::NoGradGuard no_grad;
    auto gen = make_generator(seed);
    const auto k2 = static_cast<double>(config_.kernel_size * config_.kernel_size);
    for (auto& c : convs_) {
      detail::he_uniform_(c->weight, c->weight.size(1) * k2, config_.negative_slope, gen);
      c->bias.zero_();
    }
    const double bound = std::sqrt(3.0 / static_cast<double>(config_.flatten_width));
    head_->weight.uniform_(-bound, bound, gen);
    head_->bias.zero_();
  }

  std::int64_t flatten_width() const { return config_.flatten_width; }
  const CriticConfig& config() const { return config_; }

 private:
  CriticConfig config_;
  std::vector<nn::Conv2d> convs_;
  nn::Linear head_{nullptr};
};
TORCH_MODULE(Critic);

namespace detail {

template <class Holder>
void probe(Holder& net, std::int64_t image_size, const std::vector<std::int64_t>& expect, const char* who) {
  torch::NoGradGuard no_grad;
  const bool was_training = net->is_training();
  net->eval();
  auto dtype = net->parameters().front().scalar_type();
  auto out = net->forward(torch::zeros({2, 1, image_size, image_size}, dtype));
  net->train(was_training);
  if (out.sizes().vec() != expect) {
    throw ConfigurationError(std::string(who) + ": probe batch produced " + c10::str(out.sizes()));
  }
}

}  // namespace detail

/// Builds a generator deterministically from `seed` and checks the
/// (batch, 1, S, S) -> (batch, 1, S, S) contract on a probe batch.
inline Generator init_generator(const GeneratorConfig& config, std::uint64_t seed) {
  Generator g(config);
  g->reset_parameters(seed);
  detail::probe(g, config.image_size, {2, 1, config.image_size, config.image_size}, "init_generator");
  return g;
}

inline Critic init_critic(const CriticConfig& config, std::uint64_t seed) {
  Critic d(config);
  d->reset_parameters(seed);
  detail::probe(d, config.image_size, {2}, "init_critic");
  return d;
}

/// In-place convex combination `shadow <- (1 - alpha) * shadow + alpha * live`.
inline void ema_blend(torch::Tensor& shadow, const torch::Tensor& live, double alpha) {
  shadow.lerp_(live, alpha);
}

/// Non-trainable exponential-moving-average copy of a generator. Its
/// parameters never require gradients; gradients still flow through its
/// forward computation into whatever produced its input.
class ShadowGenerator {
 public:
  ShadowGenerator() = default;

  /// Exact copy of `live` at the moment of construction.
  ShadowGenerator(const Generator& live, double alpha) : net_(live->config()), alpha_(alpha) {
    check_alpha(alpha);
    torch::NoGradGuard no_grad;
    // Module::to(dtype) would also cast the integer batch counters.
    const auto dtype = live->parameters().front().scalar_type();
    for (auto& p : net_->parameters()) p.set_data(p.to(dtype));
    for (auto& b : net_->buffers()) {
      if (b.is_floating_point()) b.set_data(b.to(dtype));
    }
    auto src_p = live->named_parameters(true);
    for (auto& kv : net_->named_parameters(true)) kv.value().copy_(src_p[kv.key()]);
    auto src_b = live->named_buffers(true);
    for (auto& kv : net_->named_buffers(true)) kv.value().copy_(src_b[kv.key()]);
    for (auto& p : net_->parameters()) p.set_requires_grad(false);
    net_->set_track_running_stats(false);
    net_->train(live->is_training());
  }

  torch::Tensor forward(const torch::Tensor& x) const { return net_.ptr()->forward(x); }
  torch::Tensor operator()(const torch::Tensor& x) const { return forward(x); }

  double alpha() const { return alpha_; }
  Generator& network() { return net_; }
  const Generator& network() const { return net_; }
  void train(bool on = true) { net_->train(on); }
  void eval() { net_->eval(); }

  static void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw InvalidArgument("shadow update rate alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
  }

 private:
  Generator net_{nullptr};
  double alpha_ = 0.1;
};

/// G_sh <- (1 - alpha) G_sh + alpha G for every parameter and BN statistic.
/// `live` is left untouched.
inline void shadow_update(ShadowGenerator& shadow, const Generator& live, double alpha) {
  ShadowGenerator::check_alpha(alpha);
  auto sp = shadow.network()->named_parameters(true);
  auto lp = live->named_parameters(true);
  auto sb = shadow.network()->named_buffers(true);
  auto lb = live->named_buffers(true);
  if (sp.size() != lp.size() || sb.size() != lb.size()) {
    throw InvalidArgument("shadow_update: shadow and generator have different parameter sets");
  }
  for (const auto& kv : sp) {
    const auto* other = lp.find(kv.key());
    if (other == nullptr || other->sizes() != kv.value().sizes()) {
      throw InvalidArgument("shadow_update: parameter '" + kv.key() + "' is not shape-congruent");
    }
  }
  torch::NoGradGuard no_grad;
  for (auto& kv : sp) ema_blend(kv.value(), lp[kv.key()], alpha);
  for (auto& kv : sb) {
    const auto* other = lb.find(kv.key());
    if (other == nullptr || other->sizes() != kv.value().sizes()) {
      throw InvalidArgument("shadow_update: buffer '" + kv.key() + "' is not shape-congruent");
    }
    if (kv.value().is_floating_point()) {
      ema_blend(kv.value(), *other, alpha);
    } else {
      kv.value().copy_(*other);
    }
  }
}

inline void shadow_update(ShadowGenerator& shadow, const Generator& live) {
  shadow_update(shadow, live, shadow.alpha());
}

}  // namespace cgigan::models
