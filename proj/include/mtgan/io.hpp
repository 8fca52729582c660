#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace mtgan {

/// 3D binary occupancy grid; element (x, y, z) is stored at (x * ny + y) * nz + z.
struct VoxelGrid {
  std::array<std::int64_t, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> data;
  double voxel_size = 1.0;

  VoxelGrid() = default;
  VoxelGrid(std::int64_t nx, std::int64_t ny, std::int64_t nz, double voxel = 1.0)
      : dims{nx, ny, nz}, data(static_cast<std::size_t>(nx * ny * nz), 0), voxel_size(voxel) {}

  std::int64_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>((x * dims[1] + y) * dims[2] + z);
  }
  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t z) const { return data[index(x, y, z)]; }
  std::uint8_t& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data[index(x, y, z)]; }
  /// Out-of-range coordinates read as empty.
  std::uint8_t get(std::int64_t x, std::int64_t y, std::int64_t z) const {
    if (x < 0 || y < 0 || z < 0 || x >= dims[0] || y >= dims[1] || z >= dims[2]) return 0;
    return at(x, y, z);
  }
  double volume_fraction() const;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

// Array container: 16-byte header then row-major payload.
//   bytes 0-1  magic "VX"
//   byte  2    format version (1)
//   byte  3    payload type (0: uint8 binary voxels, 1: float32 little-endian)
//   bytes 4-15 three little-endian uint32 dims
inline constexpr std::uint8_t kArrayVersion = 1;

void write_voxels(const VoxelGrid& grid, const std::filesystem::path& path);
/// Throws DataError on a bad header, a truncated payload or values outside {0, 1}.
VoxelGrid read_voxels(const std::filesystem::path& path);

/// Float array (up to three dims; missing leading dims are 1).
void write_float_array(const torch::Tensor& values, const std::filesystem::path& path);
torch::Tensor read_float_array(const std::filesystem::path& path);

/// Voxels {0, 1} -> tensor (1, X, Y, Z) with values {-1, 1}.
torch::Tensor voxels_to_tensor(const VoxelGrid& grid);
/// Thresholds a (1, X, Y, Z) or (X, Y, Z) tensor at 0.
VoxelGrid tensor_to_voxels(const torch::Tensor& volume, double voxel_size = 1.0);

/// 8-bit pixel -> [-1, 1] and back; exact inverses on 0..255.
torch::Tensor normalize_pixels(const torch::Tensor& bytes);
torch::Tensor denormalize_pixels(const torch::Tensor& values);

/// Reads an 8-bit PNG as RGB, returns (3, H, W) in [-1, 1].
torch::Tensor read_png(const std::filesystem::path& path);
/// Writes (3, H, W) or (1, H, W) values in [-1, 1] as 8-bit PNG.
void write_png(const torch::Tensor& image, const std::filesystem::path& path);
/// Writes a (H, W) array in [0, 1] as a grayscale PNG.
void write_png_gray01(const torch::Tensor& values, const std::filesystem::path& path);

/// Tiles (N, C, H, W) images into a grid with `cols` columns and `gap` pixel separators.
torch::Tensor tile_images(const torch::Tensor& images, std::int64_t cols, std::int64_t gap = 2, double fill = 1.0);

}  // namespace mtgan
