#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace mtgan {

/// Weight init used by every network: N(0, 0.02) weights, zero biases.
inline constexpr double kInitStd = 0.02;

/// Spectral normalization state for one weight tensor: W / sigma(W) with sigma
/// estimated by power iteration on W reshaped to (rows, -1).
class SpectralNormState {
 public:
  SpectralNormState() = default;
  SpectralNormState(torch::nn::Module& owner, const torch::Tensor& weight, std::int64_t row_dim);

  bool enabled() const { return u_.defined(); }
  /// One power-iteration step; updates the stored singular vectors in place.
  void power_iterate(const torch::Tensor& weight);
  /// W / (u^T W v) using the stored vectors; gradient flows through W only.
  torch::Tensor normalize(const torch::Tensor& weight) const;

 private:
  torch::Tensor matrix(const torch::Tensor& weight) const;

  torch::Tensor u_;
  torch::Tensor v_;
  std::int64_t row_dim_ = 0;
};

struct ConvOptions {
  int ndim = 2;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  std::int64_t output_padding = 0;
  bool transposed = false;
  bool bias = true;
  bool spectral_norm = false;
};

/// Convolution (plain or transposed, 2D or 3D) with optional spectral normalization.
class ConvLayerImpl : public torch::nn::Module {
 public:
  explicit ConvLayerImpl(const ConvOptions& opts);

  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor effective_weight() const;
  void power_iterate();
  const ConvOptions& options() const { return opts_; }

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  ConvOptions opts_;
  SpectralNormState sn_;
};
TORCH_MODULE(ConvLayer);

/// Fully connected layer with optional spectral normalization.
class DenseImpl : public torch::nn::Module {
 public:
  DenseImpl(std::int64_t in, std::int64_t out, bool spectral_norm = false);

  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor effective_weight() const;
  void power_iterate();

  torch::Tensor weight;  // (out, in)
  torch::Tensor bias;

 private:
  SpectralNormState sn_;
};
TORCH_MODULE(Dense);

/// Batch norm with momentum 1.0: training normalizes by batch statistics and the
/// running buffers hold the statistics of the last training batch, used in eval mode.
class BatchNormImpl : public torch::nn::Module {
 public:
  explicit BatchNormImpl(std::int64_t channels, double eps = 1e-5, double momentum = 1.0);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight;
  torch::Tensor bias;
  torch::Tensor running_mean;
  torch::Tensor running_var;

 private:
  double eps_;
  double momentum_;
};
TORCH_MODULE(BatchNorm);

/// Per-site mixing of pairwise embedding products.
///
/// For embeddings ex (B, c, P) and ey (B, c, Q), forms t[c] = ex[:, c, i] * ey[:, c, j] at every
/// site (i, j) and applies 1x1 layers (weights (out, in), biases (out)) with leaky-rectifier
/// activations between them; the last layer must have one output. Returns (B, P, Q) logits.
/// The forward pass evaluates every site with the same scalar code path, so swapping ex and ey
/// yields exactly the transposed matrix.
torch::Tensor pairwise_mix(const torch::Tensor& ex, const torch::Tensor& ey, const std::vector<torch::Tensor>& weights,
                           const std::vector<torch::Tensor>& biases, double slope);

/// Same computation composed from ordinary tensor ops (materializes the c x P x Q product tensor).
torch::Tensor pairwise_mix_reference(const torch::Tensor& ex, const torch::Tensor& ey,
                                     const std::vector<torch::Tensor>& weights,
                                     const std::vector<torch::Tensor>& biases, double slope);

}  // namespace mtgan
