#pragma once

#include "mtgan/rng.hpp"

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtgan {

enum class DatasetMode { labeled, raw };

/// One texture image (C, H, W) or volume (1, X, Y, Z) with values in [-1, 1].
struct TextureSource {
  torch::Tensor data;
  std::optional<std::int64_t> label;
  std::string name;
};

struct TextureDataset {
  std::vector<TextureSource> sources;
  std::int64_t crop_size = 160;
  DatasetMode mode = DatasetMode::labeled;
  std::vector<std::string> class_names;  // index = label

  int ndim() const;
  std::int64_t num_classes() const { return static_cast<std::int64_t>(class_names.size()); }
  /// Throws DataError if labels disagree with the mode or a source is smaller than `min_side`
  /// (default: crop_size) on any spatial axis.
  void validate(std::int64_t min_side = 0) const;
  /// Indices of the sources carrying `label`.
  std::vector<std::size_t> sources_with_label(std::int64_t label) const;
};

struct PairBatch {
  torch::Tensor x;      // (N, C, s, s[, s])
  torch::Tensor x_bar;  // same-texture companions
  torch::Tensor labels; // (N,) int64, -1 in raw mode
};

/// Window side used by raw pair sampling: s * 1.1 rounded to the nearest integer.
std::int64_t default_window(std::int64_t crop);

/// Top-left corner of a uniform crop of side `side` inside an extent of `extent` per axis.
std::int64_t uniform_offset(std::int64_t extent, std::int64_t side, HostRng& rng);

/// Uniform random crop of side `side` (no padding). `data` is (C, spatial...).
torch::Tensor random_crop(const torch::Tensor& data, std::int64_t side, HostRng& rng);

/// Raw-photo pairs: a uniform window of side w, then two independent uniform crops of side s inside it.
std::pair<torch::Tensor, torch::Tensor> sample_pair_raw(const torch::Tensor& image, std::int64_t s, std::int64_t w,
                                                        HostRng& rng);

/// Labeled pairs: per element, a label uniformly, then two independent crops of textures with that label.
/// With several sources per label the companion may come from a different source of the same label.
PairBatch sample_pair_labeled(const TextureDataset& dataset, std::int64_t batch, HostRng& rng);

/// Raw-mode batch: per element, a source uniformly, then sample_pair_raw with the given window.
PairBatch sample_pair_raw_batch(const TextureDataset& dataset, std::int64_t batch, std::int64_t window, HostRng& rng);

/// Dispatches on the dataset mode (raw uses default_window).
PairBatch sample_pairs(const TextureDataset& dataset, std::int64_t batch, HostRng& rng);

// ---------------------------------------------------------------------------
// procedural textures

using Rgb = std::array<float, 3>;  // components in [0, 1]

struct TextureKind {
  enum class Pattern { stripes, checker, dots, noise };
  Pattern pattern = Pattern::stripes;
  double angle = 0.0;    // stripes, degrees
  double period = 8.0;   // stripes, checker
  double spacing = 12.0; // dots
  double radius = 3.0;   // dots
  double blur = 2.0;     // noise: box-blur radius in pixels
  Rgb color_a{0.f, 0.f, 0.f};
  Rgb color_b{1.f, 1.f, 1.f};

  static TextureKind stripes(double angle, double period, Rgb a = {0, 0, 0}, Rgb b = {1, 1, 1});
  static TextureKind checker(double period, Rgb a = {0, 0, 0}, Rgb b = {1, 1, 1});
  static TextureKind dots(double spacing, double radius, Rgb a = {0, 0, 0}, Rgb b = {1, 1, 1});
  static TextureKind noise(double blur, Rgb a = {0, 0, 0}, Rgb b = {1, 1, 1});
  std::string name() const;
};

/// Eight kinds with distinct palettes used for desk-scale runs.
std::vector<TextureKind> desk_texture_kinds();

/// Renders one (3, size, size) texture in [-1, 1]. Random offsets come from `rng`.
torch::Tensor render_texture(const TextureKind& kind, std::int64_t size, HostRng& rng);

/// `count_per_kind` textures per kind, label = kind index; crop_size defaults to `size`.
TextureDataset procedural_textures(const std::vector<TextureKind>& kinds, std::int64_t size,
                                   std::int64_t count_per_kind, HostRng& rng);

/// Porous volume kinds: random overlapping solid balls until the target solid fraction.
struct VolumeKind {
  double radius = 3.0;
  double solid_fraction = 0.5;
  std::string name() const;
};

/// Binary volume (1, size, size, size) with values {-1, 1}.
torch::Tensor render_volume(const VolumeKind& kind, std::int64_t size, HostRng& rng);

TextureDataset procedural_volumes(const std::vector<VolumeKind>& kinds, std::int64_t size,
                                  std::int64_t count_per_kind, HostRng& rng);

// ---------------------------------------------------------------------------
// manifests

/// Reads a dataset listing: one `path [label]` per line, `#` comments, paths relative to the
/// manifest directory. PNG files give 2D sources, `.vox` files 3D sources. Either every line
/// has a label (labeled mode) or none does (raw mode).
TextureDataset read_manifest(const std::filesystem::path& manifest, std::int64_t crop_size);

/// Writes every source to `dir` (PNG or .vox) with a manifest `dir/manifest.txt`; returns the manifest path.
std::filesystem::path write_dataset(const TextureDataset& dataset, const std::filesystem::path& dir);

}  // namespace mtgan
