#pragma once

#include "mtgan/latent.hpp"
#include "mtgan/layers.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtgan {

// ---------------------------------------------------------------------------
// convolution arithmetic

constexpr std::int64_t conv_output_side(std::int64_t n, std::int64_t kernel, std::int64_t stride, std::int64_t pad) {
  return (n + 2 * pad - kernel) / stride + 1;
}

constexpr std::int64_t conv_transpose_output_side(std::int64_t n, std::int64_t kernel, std::int64_t stride,
                                                  std::int64_t pad, std::int64_t output_pad) {
  return (n - 1) * stride - 2 * pad + kernel + output_pad;
}

/// Generator output side for latent extent L: 32 L in 2D, 16 (L + 3) in 3D.
constexpr std::int64_t generator_output_side(int ndim, std::int64_t latent_side) {
  return ndim == 2 ? 32 * latent_side : 16 * (latent_side + 3);
}

/// Latent extent whose generator output side is `side`; throws ConfigError when none exists.
std::int64_t latent_side_for_output(int ndim, std::int64_t side);

/// Closed-form parameter counts of the memory comparison.
constexpr std::int64_t ours_param_estimate(std::int64_t d) { return 25600 * (d + 336); }
constexpr std::int64_t dts_param_estimate(std::int64_t n) { return 34816 * (n + 71); }

// ---------------------------------------------------------------------------
// architecture description

struct LayerSpec {
  std::int64_t out_channels = 1;
  std::int64_t kernel = 5;
  std::int64_t stride = 2;
  std::int64_t padding = 2;
  std::int64_t output_padding = 0;
  bool batchnorm = false;
  bool spectral_norm = false;
  bool bias = true;
  /// Output side listed for `ArchitectureSpec::ref_input_side`, when known.
  std::optional<std::int64_t> declared_side;
};

/// A convolution stack plus a network-specific head.
///
/// `head` holds hidden widths: the period-coefficient perceptron of the generator (output
/// 2 d^p is implied), the 1x1 mixing layers of the pair discriminator (last width 1), or the
/// perceptron of the latent discriminator (last width 1, no conv layers).
struct ArchitectureSpec {
  int ndim = 2;
  std::int64_t in_channels = 3;
  bool transposed = false;
  std::vector<LayerSpec> layers;
  std::vector<std::int64_t> head;
  bool head_spectral_norm = false;
  double slope = 0.2;
  std::int64_t ref_input_side = 0;

  std::int64_t out_channels() const { return layers.empty() ? in_channels : layers.back().out_channels; }
  /// Spatial side after every layer for input side `n`.
  std::vector<std::int64_t> layer_sides(std::int64_t n) const;
  std::int64_t output_side(std::int64_t n) const;
  /// Throws ConfigError on inconsistent kernel arithmetic or invalid fields.
  void validate() const;
};

/// Architectures of the five networks.
struct ModelArchitectures {
  ArchitectureSpec generator;
  ArchitectureSpec encoder;
  ArchitectureSpec disc_texture;
  ArchitectureSpec disc_pair;
  ArchitectureSpec disc_latent;

  /// Published 2D layout (160 px crops).
  static ModelArchitectures standard_2d(const LatentSpec& latent);
  /// Published 3D layout (160^3 crops), with kernel parameters corrected to reproduce the listed shapes.
  static ModelArchitectures standard_3d(const LatentSpec& latent);
  /// Same topology as the published layout with every channel count scaled by width / 64.
  static ModelArchitectures reduced(const LatentSpec& latent, std::int64_t width);

  void validate(const LatentSpec& latent) const;
};

// ---------------------------------------------------------------------------
// networks

/// Conv stack built from an ArchitectureSpec. Every layer except the last is followed by
/// (optional batch norm and) a leaky rectifier.
class ConvStackImpl : public torch::nn::Module {
 public:
  explicit ConvStackImpl(const ArchitectureSpec& arch);
  torch::Tensor forward(torch::Tensor x);
  void power_iterate();

 private:
  std::vector<ConvLayer> convs_;
  std::vector<BatchNorm> norms_;  // undefined where a layer has no batch norm
  double slope_;
};
TORCH_MODULE(ConvStack);

class GeneratorImpl : public torch::nn::Module {
 public:
  GeneratorImpl(const LatentSpec& latent, const ArchitectureSpec& arch);

  /// Noise tensor (B, d, L...) -> images in [-1, 1].
  torch::Tensor forward(const torch::Tensor& noise);
  /// Wave coefficients (a, b), each (B, d^p), from global codes (B, d^g).
  std::pair<torch::Tensor, torch::Tensor> period_coefficients(const torch::Tensor& global);
  /// Per-site coefficients for a code field (B, d^g, H, W): the perceptron applied as 1x1 convolutions.
  std::pair<torch::Tensor, torch::Tensor> period_coefficients_field(const torch::Tensor& field);
  PeriodicCoefFn coef_fn();

  /// Builds noise around the given global codes and generates.
  torch::Tensor generate(const torch::Tensor& global, at::Generator& gen, GlobalSource source = GlobalSource::prior,
                         std::int64_t latent_side = 0);

  const LatentSpec& latent() const { return latent_; }

 private:
  LatentSpec latent_;
  ConvStack upsample_{nullptr};
  std::vector<Dense> period_mlp_;
};
TORCH_MODULE(Generator);

struct EncoderOutput {
  torch::Tensor mu;         // (B, d^g) or (B, d^g, H, W) for spatial encodings
  torch::Tensor log_sigma;  // same shape as mu
};

class EncoderImpl : public torch::nn::Module {
 public:
  EncoderImpl(std::int64_t d_global, const ArchitectureSpec& arch);

  /// Feature map (B, 2 d^g, spatial...) before pooling.
  torch::Tensor features(const torch::Tensor& images);
  EncoderOutput forward(const torch::Tensor& images);

  std::int64_t d_global() const { return d_global_; }
  const ArchitectureSpec& arch() const { return arch_; }

 private:
  std::int64_t d_global_;
  ArchitectureSpec arch_;
  ConvStack stack_{nullptr};
};
TORCH_MODULE(Encoder);

/// Per-receptive-field embeddings: global pooling replaced by average pooling with stride 1.
/// The kernel is clamped to the feature-map extent; a kernel covering the whole map equals encode().
EncoderOutput spatial_encode(Encoder& encoder, const torch::Tensor& images, std::int64_t pool_kernel);

class TextureDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit TextureDiscriminatorImpl(const ArchitectureSpec& arch);
  /// Probabilities per receptive field, (B, out, s, t[, u]).
  torch::Tensor forward(const torch::Tensor& images);
  torch::Tensor logits(const torch::Tensor& images);
  void power_iterate();

 private:
  ConvStack stack_{nullptr};
};
TORCH_MODULE(TextureDiscriminator);

class PairDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PairDiscriminatorImpl(const ArchitectureSpec& arch);

  /// Probabilities for (x, y): 2D (B, 1, h, 2w) with the x half first; 3D (B, 2, d, h, w).
  /// In training mode one spectral-norm power iteration runs before the towers.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& y);
  /// Shared tower embedding (B, c, spatial...).
  torch::Tensor embed(const torch::Tensor& images);
  /// Pair probabilities from two tower embeddings.
  torch::Tensor head(const torch::Tensor& ex, const torch::Tensor& ey);
  /// The (B, h*w, h*w) similarity logits before averaging.
  torch::Tensor similarity(const torch::Tensor& ex, const torch::Tensor& ey);
  void power_iterate();

 private:
  int ndim_;
  double slope_;
  ConvStack tower_{nullptr};
  std::vector<Dense> mix_;
};
TORCH_MODULE(PairDiscriminator);

class LatentDiscriminatorImpl : public torch::nn::Module {
 public:
  LatentDiscriminatorImpl(std::int64_t d_global, const ArchitectureSpec& arch);
  /// (B, d^g) -> (B,) probabilities.
  torch::Tensor forward(const torch::Tensor& z);
  void power_iterate();

 private:
  double slope_;
  std::vector<Dense> layers_;
};
TORCH_MODULE(LatentDiscriminator);

std::int64_t count_parameters(const torch::nn::Module& module);

/// Draws every weight from N(0, std) and zeroes biases; batch-norm scales stay 1.
void init_parameters(torch::nn::Module& module, at::Generator& gen, double std = kInitStd);

/// All five networks with their specifications.
struct ModelBundle {
  LatentSpec latent;
  ModelArchitectures arch;
  Generator generator{nullptr};
  Encoder encoder{nullptr};
  TextureDiscriminator disc_texture{nullptr};
  PairDiscriminator disc_pair{nullptr};
  LatentDiscriminator disc_latent{nullptr};

  static ModelBundle build(const LatentSpec& latent, const ModelArchitectures& arch, std::uint64_t seed);

  void train(bool on = true);
  void to(torch::Dtype dtype);
  /// Latent extent whose generator output has side `side`; throws ConfigError when none exists.
  std::int64_t latent_side_for(std::int64_t side) const;
  std::vector<std::pair<std::string, torch::nn::Module*>> modules();
};

}  // namespace mtgan
