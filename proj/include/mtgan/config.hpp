#pragma once

#include "mtgan/data.hpp"
#include "mtgan/latent.hpp"
#include "mtgan/networks.hpp"
#include "mtgan/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace mtgan {

/// Everything a training run needs, read from a `key = value` file.
///
/// Keys: ndim, d_global, d_local, d_periodic, latent_spatial, architecture (standard | reduced), width,
/// batch, iterations, disc_steps_per_gen, lr, adam_beta1, adam_beta2, weight_decay, alpha1, alpha2,
/// beta1, beta2, kl_weight, clamp_log_sigma, ablation (full | psgan), seed, checkpoint_every,
/// dataset (manifest path or `procedural`), crop_size, procedural_size, procedural_count, output_dir.
struct RunConfig {
  LatentSpec latent = LatentSpec::defaults_2d();
  std::string architecture = "standard";
  std::int64_t width = 64;
  TrainingConfig training = TrainingConfig::defaults(2);
  std::string dataset = "procedural";
  std::int64_t crop_size = 160;
  std::int64_t procedural_size = 0;  // 0: crop_size + crop_size / 2
  std::int64_t procedural_count = 4;
  std::filesystem::path output_dir = "run";

  ModelArchitectures architectures() const;
  void validate() const;
};

/// Parses `key = value` lines (`#` starts a comment). Dimension-dependent defaults follow `ndim`.
/// Unknown keys and malformed values raise ConfigError naming the field.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);
/// Applies `overrides` on top of a file's entries (same keys).
RunConfig read_run_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides);

std::string format_run_config(const RunConfig& c);

/// The run's dataset: the manifest named by `dataset`, or procedural textures (desk kinds in 2D,
/// porous volumes in 3D) rendered from `seed`. Crop size comes from the config.
TextureDataset load_dataset(const RunConfig& c, std::uint64_t seed);

}  // namespace mtgan
