#include "mtgan/analysis.hpp"

#include "mtgan/error.hpp"
#include "mtgan/io.hpp"
#include "mtgan/rng.hpp"

#include <cmath>
#include <limits>

namespace mtgan {

namespace F = torch::nn::functional;

torch::Tensor reconstruct(ModelBundle& bundle, const torch::Tensor& textures, at::Generator& gen,
                          const ReconstructOptions& opts) {
  torch::NoGradGuard ng;
  auto enc = bundle.encoder->forward(textures);
  torch::Tensor z = enc.mu;
  if (!opts.zero_sigma) {
    ReparamOptions ro;
    ro.clamp_log_sigma = opts.clamp_log_sigma;
    z = reparameterize(enc.mu, enc.log_sigma, torch::randn(enc.mu.sizes(), gen, enc.mu.options()), ro);
  }
  const auto l = bundle.latent_side_for(textures.size(2));
  return bundle.generator->generate(z, gen, GlobalSource::encoder, l);
}

torch::Tensor sample_images(ModelBundle& bundle, std::int64_t n, std::int64_t side, at::Generator& gen,
                            std::int64_t batch) {
  torch::NoGradGuard ng;
  const auto l = bundle.latent_side_for(side);
  std::vector<torch::Tensor> out;
  for (std::int64_t i = 0; i < n; i += batch) {
    const auto b = std::min(batch, n - i);
    auto z = sample_prior_global(bundle.latent, b, gen);
    out.push_back(bundle.generator->generate(z, gen, GlobalSource::prior, l));
  }
  return torch::cat(out);
}

std::int64_t manifold_points(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo)) throw ConfigError("manifold grid needs step > 0 and hi >= lo");
  return static_cast<std::int64_t>(std::floor((hi - lo) / step + 0.5)) + 1;
}

ManifoldGrid manifold_grid(ModelBundle& bundle, double lo, double hi, double step, std::uint64_t noise_seed,
                           std::int64_t side) {
  if (bundle.latent.d_global != 2) throw ConfigError("manifold grid requires d_global = 2");
  torch::NoGradGuard ng;
  const auto n = manifold_points(lo, hi, step);
  const auto l = side > 0 ? bundle.latent_side_for(side) : bundle.latent.spatial;
  ManifoldGrid grid;
  for (std::int64_t i = 0; i < n; ++i) grid.axis.push_back(lo + static_cast<double>(i) * step);
  std::vector<torch::Tensor> tiles;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      auto gen = make_generator(noise_seed);
      auto z = torch::tensor({grid.axis[static_cast<std::size_t>(i)], grid.axis[static_cast<std::size_t>(j)]},
                             torch::kFloat32)
                   .view({1, 2});
      tiles.push_back(bundle.generator->generate(z, gen, GlobalSource::prior, l));
    }
  grid.tiles = torch::cat(tiles);
  grid.sheet = tile_images(grid.tiles, n, 2, 1.0);
  return grid;
}

torch::Tensor tiled_generate(Generator& generator, const torch::Tensor& field, at::Generator& gen) {
  const auto& spec = generator->latent();
  if (spec.ndim != 2) throw ConfigError("tiled generation supports 2D models only");
  auto z = field.dim() == 3 ? field.unsqueeze(0) : field;
  TORCH_CHECK(z.dim() == 4 && z.size(1) == spec.d_global, "tiled_generate: expected (d_global, H, W)");
  torch::NoGradGuard ng;
  const auto b = z.size(0), h = z.size(2), w = z.size(3);
  std::vector<torch::Tensor> parts{z};
  if (spec.d_local > 0) parts.push_back(torch::randn({b, spec.d_local, h, w}, gen, z.options()));
  if (spec.d_periodic > 0) {
    auto [a, c] = generator->period_coefficients_field(z);
    parts.push_back(periodic_waves(a, c, torch::Tensor(), h, w));
  }
  return generator->forward(torch::cat(parts, 1));
}

void DetectionConfig::validate() const {
  if (!(alpha > 0)) throw ConfigError("detection alpha must be > 0");
  if (pool_kernel < 0) throw ConfigError("detection pool kernel must be >= 0");
}

torch::Tensor texture_map(ModelBundle& bundle, const torch::Tensor& image, const DetectionConfig& config,
                          at::Generator& gen) {
  config.validate();
  torch::NoGradGuard ng;
  auto x = image.dim() == 3 ? image.unsqueeze(0) : image;
  auto emb = spatial_encode(bundle.encoder, x, config.pool_for(bundle));
  return tiled_generate(bundle.generator, emb.mu, gen);
}

torch::Tensor heatmap_from_embeddings(const torch::Tensor& field, const torch::Tensor& embedding, double alpha) {
  TORCH_CHECK(field.dim() == 3 && embedding.dim() == 1 && field.size(0) == embedding.size(0),
              "heatmap: expected field (d, H, W) and embedding (d)");
  auto f = field.to(torch::kFloat64);
  auto e = embedding.to(torch::kFloat64).view({-1, 1, 1});
  auto d2 = (f - e).square().sum(0);
  return torch::exp(-alpha * d2).clamp_min(std::numeric_limits<double>::min());
}

torch::Tensor reflect_pad_to(const torch::Tensor& patch, std::int64_t side) {
  auto p = patch.unsqueeze(0);
  while (p.size(2) < side || p.size(3) < side) {
    const auto need_h = std::max<std::int64_t>(0, side - p.size(2));
    const auto need_w = std::max<std::int64_t>(0, side - p.size(3));
    // a single reflection can add at most size - 1 on each side
    const auto add_h = std::min(need_h, 2 * (p.size(2) - 1));
    const auto add_w = std::min(need_w, 2 * (p.size(3) - 1));
    if ((need_h > 0 && add_h == 0) || (need_w > 0 && add_w == 0)) {
      p = F::pad(p, F::PadFuncOptions({need_w / 2, need_w - need_w / 2, need_h / 2, need_h - need_h / 2})
                        .mode(torch::kReplicate));
      break;
    }
    p = F::pad(p, F::PadFuncOptions({add_w / 2, add_w - add_w / 2, add_h / 2, add_h - add_h / 2})
                      .mode(torch::kReflect));
  }
  return p.squeeze(0);
}

DetectionResult detect(ModelBundle& bundle, const torch::Tensor& image, const PatchRect& patch,
                       const DetectionConfig& config, std::int64_t crop_size) {
  config.validate();
  if (image.dim() != 3) throw DataError("detect: image must be (C, H, W)");
  const auto H = image.size(1), W = image.size(2);
  if (patch.w < 1 || patch.h < 1 || patch.x < 0 || patch.y < 0 || patch.x + patch.w > W || patch.y + patch.h > H)
    throw DataError("detect: patch lies outside the image");
  torch::NoGradGuard ng;
  auto crop = image.narrow(1, patch.y, patch.h).narrow(2, patch.x, patch.w);
  if (patch.w < crop_size || patch.h < crop_size) crop = reflect_pad_to(crop, crop_size);
  DetectionResult r;
  r.patch_embedding = bundle.encoder->forward(crop.unsqueeze(0)).mu[0];
  auto field = spatial_encode(bundle.encoder, image.unsqueeze(0), config.pool_for(bundle)).mu[0];
  r.grid = heatmap_from_embeddings(field, r.patch_embedding, config.alpha);
  r.heatmap = F::interpolate(r.grid.view({1, 1, r.grid.size(0), r.grid.size(1)}),
                             F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{H, W})
                                 .mode(torch::kBilinear)
                                 .align_corners(false))
                  .view({H, W});
  return r;
}

}  // namespace mtgan
