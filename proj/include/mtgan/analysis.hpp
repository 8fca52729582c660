#pragma once

#include "mtgan/networks.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace mtgan {

struct ReconstructOptions {
  bool zero_sigma = false;  // use mu directly instead of sampling
  bool clamp_log_sigma = false;
};

/// Encode, reparameterize and generate; outputs have the spatial size of `textures`.
torch::Tensor reconstruct(ModelBundle& bundle, const torch::Tensor& textures, at::Generator& gen,
                          const ReconstructOptions& opts = {});

/// Draws `n` prior samples of side `side` in batches of at most `batch`.
torch::Tensor sample_images(ModelBundle& bundle, std::int64_t n, std::int64_t side, at::Generator& gen,
                            std::int64_t batch = 16);

struct ManifoldGrid {
  torch::Tensor tiles;       // (rows * cols, C, H, W) row-major
  torch::Tensor sheet;       // tiled image (C, ...)
  std::vector<double> axis;  // code values along both axes
};

/// Number of grid points from lo to hi with the given step (endpoints included).
std::int64_t manifold_points(double lo, double hi, double step);

/// Tile (i, j) is generated alone at code (lo + i step, lo + j step) with local noise and
/// phases from a generator seeded with `noise_seed`. Requires d_global = 2.
ManifoldGrid manifold_grid(ModelBundle& bundle, double lo, double hi, double step, std::uint64_t noise_seed,
                           std::int64_t side = 0);

/// Generator on a spatial field of global codes Z (d^g, H, W) or (1, d^g, H, W): per-site wave
/// coefficients via 1x1 convolutions, zero phase, fresh local noise.
torch::Tensor tiled_generate(Generator& generator, const torch::Tensor& field, at::Generator& gen);

struct DetectionConfig {
  double alpha = 3.0;
  std::int64_t pool_kernel = 0;  // 0: the model's training latent side
  void validate() const;
  std::int64_t pool_for(const ModelBundle& bundle) const { return pool_kernel > 0 ? pool_kernel : bundle.latent.spatial; }
};

/// Spatial-encoder mu embeddings followed by the tiled generator.
torch::Tensor texture_map(ModelBundle& bundle, const torch::Tensor& image, const DetectionConfig& config,
                          at::Generator& gen);

/// exp(-alpha ||Z_ij - e||^2) for a mu field Z (d^g, H, W) and embedding e (d^g), in double.
/// Values are kept at or above the smallest positive normal double.
torch::Tensor heatmap_from_embeddings(const torch::Tensor& field, const torch::Tensor& embedding, double alpha);

struct PatchRect {
  std::int64_t x = 0;  // column of the top-left corner
  std::int64_t y = 0;  // row of the top-left corner
  std::int64_t w = 0;
  std::int64_t h = 0;
};

/// Reflection padding (repeated as needed) centering `patch` (C, h, w) in a side x side canvas.
torch::Tensor reflect_pad_to(const torch::Tensor& patch, std::int64_t side);

struct DetectionResult {
  torch::Tensor grid;     // (H_z, W_z) heatmap at embedding resolution
  torch::Tensor heatmap;  // (H, W) bilinear upsampling to the image size
  torch::Tensor patch_embedding;
};

/// Heatmap of similarity between the patch embedding and every receptive field of `image` (3, H, W).
DetectionResult detect(ModelBundle& bundle, const torch::Tensor& image, const PatchRect& patch,
                       const DetectionConfig& config, std::int64_t crop_size);

}  // namespace mtgan
