#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

namespace mtgan {

/// Shape of the structured noise tensor [z^g | z^l | z^p] fed to the generator.
struct LatentSpec {
  std::int64_t d_global = 2;
  std::int64_t d_local = 20;
  std::int64_t d_periodic = 4;
  std::int64_t spatial = 5;  // latent extent, identical on every spatial axis
  int ndim = 2;

  std::int64_t channels() const { return d_global + d_local + d_periodic; }
  /// Throws ConfigError when a field is out of range.
  void validate() const;

  static LatentSpec defaults_2d() { return {}; }
  static LatentSpec defaults_3d() { return {16, 16, 0, 7, 3}; }

  friend bool operator==(const LatentSpec&, const LatentSpec&) = default;
};

enum class GlobalSource { prior, encoder };

struct NoiseTensor {
  torch::Tensor data;  // (batch, channels, L, L[, L])
  GlobalSource global_source = GlobalSource::prior;
};

/// Wave coefficients per batch element: a, b and phase xi, each (batch, d_periodic).
struct PeriodicParams {
  torch::Tensor a;
  torch::Tensor b;
  torch::Tensor xi;
};

/// Maps global codes (batch, d_global) to wave coefficients (a, b), each (batch, d_periodic).
using PeriodicCoefFn = std::function<std::pair<torch::Tensor, torch::Tensor>(const torch::Tensor&)>;

torch::Tensor sample_prior_global(const LatentSpec& spec, std::int64_t batch, at::Generator& gen);

/// sin(a * i + b * j + xi) on an H x W grid with 0-based row index i and column index j.
/// `a`, `b` are (batch, k) or per-site (batch, k, H, W); `xi` is (batch, k) or undefined for zero phase.
torch::Tensor periodic_waves(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& xi,
                             std::int64_t height, std::int64_t width);

/// Periodic channels for global codes. Phases are drawn from U[0, 2pi) per batch element
/// and channel unless `xi` is supplied.
torch::Tensor periodic_part(const torch::Tensor& global, const PeriodicCoefFn& coef_fn, const LatentSpec& spec,
                            at::Generator& gen, const std::optional<torch::Tensor>& xi = std::nullopt);

torch::Tensor draw_phases(std::int64_t batch, std::int64_t d_periodic, at::Generator& gen,
                          torch::TensorOptions options = {});

/// Broadcasts z^g over space, draws i.i.d. normal z^l, and appends z^p.
/// Draw order is fixed (local noise, then phases) so a seed reproduces the tensor bit for bit.
NoiseTensor assemble_noise(const torch::Tensor& global, const LatentSpec& spec, const PeriodicCoefFn& coef_fn,
                           at::Generator& gen, GlobalSource source = GlobalSource::prior,
                           const std::optional<torch::Tensor>& xi = std::nullopt);

/// Noise from explicit parts: global codes (batch, d^g), local noise (batch, d^l, L...) or undefined
/// when d^l = 0, and phases (batch, d^p) or undefined when d^p = 0. No randomness is drawn.
torch::Tensor compose_noise(const torch::Tensor& global, const torch::Tensor& local, const torch::Tensor& xi,
                            const LatentSpec& spec, const PeriodicCoefFn& coef_fn);

struct ReparamOptions {
  bool clamp_log_sigma = false;
  double log_sigma_bound = 10.0;
};

/// mu + exp(log_sigma) * eps; differentiable in mu and log_sigma.
torch::Tensor reparameterize(const torch::Tensor& mu, const torch::Tensor& log_sigma, const torch::Tensor& eps,
                             const ReparamOptions& opts = {});

}  // namespace mtgan
