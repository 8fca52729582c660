#include "mtgan/latent.hpp"

#include "mtgan/error.hpp"

#include <numbers>
#include <string>
#include <vector>

namespace mtgan {

void LatentSpec::validate() const {
  if (ndim != 2 && ndim != 3) throw ConfigError("latent: ndim must be 2 or 3, got " + std::to_string(ndim));
  if (d_global < 1) throw ConfigError("latent: d_global must be >= 1");
  if (d_local < 0) throw ConfigError("latent: d_local must be >= 0");
  if (d_periodic < 0) throw ConfigError("latent: d_periodic must be >= 0");
  if (spatial < 1) throw ConfigError("latent: spatial extent must be >= 1");
  if (ndim == 3 && d_periodic > 0) throw ConfigError("latent: periodic channels are not supported for 3D volumes");
}

torch::Tensor sample_prior_global(const LatentSpec& spec, std::int64_t batch, at::Generator& gen) {
  TORCH_CHECK(batch >= 1, "sample_prior_global: batch must be >= 1");
  return torch::randn({batch, spec.d_global}, gen);
}

torch::Tensor draw_phases(std::int64_t batch, std::int64_t d_periodic, at::Generator& gen,
                          torch::TensorOptions options) {
  auto u = torch::rand({batch, d_periodic}, gen, options);
  return u * (2.0 * std::numbers::pi);
}

torch::Tensor periodic_waves(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& xi,
                             std::int64_t height, std::int64_t width) {
  auto opts = a.options();
  auto rows = torch::arange(height, opts).view({1, 1, height, 1});
  auto cols = torch::arange(width, opts).view({1, 1, 1, width});
  auto as = a.dim() == 2 ? a.unsqueeze(-1).unsqueeze(-1) : a;
  auto bs = b.dim() == 2 ? b.unsqueeze(-1).unsqueeze(-1) : b;
  auto phase = as * rows + bs * cols;
  if (xi.defined()) phase = phase + xi.unsqueeze(-1).unsqueeze(-1);
  return torch::sin(phase);
}

torch::Tensor periodic_part(const torch::Tensor& global, const PeriodicCoefFn& coef_fn, const LatentSpec& spec,
                            at::Generator& gen, const std::optional<torch::Tensor>& xi) {
  if (spec.ndim == 3 && spec.d_periodic > 0)
    throw ConfigError("periodic_part: periodic channels are not supported for 3D volumes");
  TORCH_CHECK(spec.ndim == 2, "periodic_part: requires a 2D latent spec");
  const auto batch = global.size(0);
  if (spec.d_periodic == 0) return torch::zeros({batch, 0, spec.spatial, spec.spatial}, global.options());
  auto [a, b] = coef_fn(global);
  auto phases = xi ? *xi : draw_phases(batch, spec.d_periodic, gen, global.options());
  return periodic_waves(a, b, phases, spec.spatial, spec.spatial);
}

NoiseTensor assemble_noise(const torch::Tensor& global, const LatentSpec& spec, const PeriodicCoefFn& coef_fn,
                           at::Generator& gen, GlobalSource source, const std::optional<torch::Tensor>& xi) {
  spec.validate();
  TORCH_CHECK(global.dim() == 2 && global.size(1) == spec.d_global, "assemble_noise: global codes must be (batch, ",
              spec.d_global, ")");
  const auto batch = global.size(0);
  std::vector<std::int64_t> spatial(static_cast<std::size_t>(spec.ndim), spec.spatial);

  std::vector<std::int64_t> gshape{batch, spec.d_global};
  gshape.insert(gshape.end(), spatial.begin(), spatial.end());
  std::vector<std::int64_t> gview{batch, spec.d_global};
  gview.insert(gview.end(), spatial.size(), 1);
  std::vector<torch::Tensor> parts{global.view(gview).expand(gshape)};

  if (spec.d_local > 0) {
    std::vector<std::int64_t> lshape{batch, spec.d_local};
    lshape.insert(lshape.end(), spatial.begin(), spatial.end());
    parts.push_back(torch::randn(lshape, gen, global.options()));
  }
  if (spec.d_periodic > 0) parts.push_back(periodic_part(global, coef_fn, spec, gen, xi));
  return {torch::cat(parts, 1), source};
}

torch::Tensor compose_noise(const torch::Tensor& global, const torch::Tensor& local, const torch::Tensor& xi,
                            const LatentSpec& spec, const PeriodicCoefFn& coef_fn) {
  spec.validate();
  TORCH_CHECK(global.dim() == 2 && global.size(1) == spec.d_global, "compose_noise: global codes must be (batch, ",
              spec.d_global, ")");
  const auto batch = global.size(0);
  std::vector<std::int64_t> gshape{batch, spec.d_global}, gview{batch, spec.d_global};
  gshape.insert(gshape.end(), static_cast<std::size_t>(spec.ndim), spec.spatial);
  gview.insert(gview.end(), static_cast<std::size_t>(spec.ndim), 1);
  std::vector<torch::Tensor> parts{global.view(gview).expand(gshape)};
  if (spec.d_local > 0) {
    TORCH_CHECK(local.defined() && local.size(0) == batch && local.size(1) == spec.d_local,
                "compose_noise: local noise must be (batch, d_local, L...)");
    parts.push_back(local);
  }
  if (spec.d_periodic > 0) {
    TORCH_CHECK(xi.defined(), "compose_noise: phases required when d_periodic > 0");
    auto [a, b] = coef_fn(global);
    parts.push_back(periodic_waves(a, b, xi, spec.spatial, spec.spatial));
  }
  return torch::cat(parts, 1);
}

torch::Tensor reparameterize(const torch::Tensor& mu, const torch::Tensor& log_sigma, const torch::Tensor& eps,
                             const ReparamOptions& opts) {
  auto ls = opts.clamp_log_sigma ? log_sigma.clamp(-opts.log_sigma_bound, opts.log_sigma_bound) : log_sigma;
  return mu + torch::exp(ls) * eps;
}

}  // namespace mtgan
