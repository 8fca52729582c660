#include "mtgan/io.hpp"

#include "mtgan/error.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <numeric>

namespace mtgan {

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

struct ArrayHeader {
  std::uint8_t type = 0;
  std::array<std::uint32_t, 3> dims{};
  std::size_t count() const { return std::size_t{dims[0]} * dims[1] * dims[2]; }
};

void write_array(const std::filesystem::path& path, const ArrayHeader& h, const void* payload, std::size_t bytes) {
  std::uint8_t header[16];
  header[0] = 'V';
  header[1] = 'X';
  header[2] = kArrayVersion;
  header[3] = h.type;
  for (int i = 0; i < 3; ++i) put_u32(header + 4 + 4 * i, h.dims[static_cast<std::size_t>(i)]);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header), 16);
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<char> read_array(const std::filesystem::path& path, ArrayHeader& h, std::size_t elem_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint8_t header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() != 16) throw DataError(path.string() + ": truncated header");
  if (header[0] != 'V' || header[1] != 'X') throw DataError(path.string() + ": bad magic");
  if (header[2] != kArrayVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(header[2]));
  h.type = header[3];
  for (int i = 0; i < 3; ++i) h.dims[static_cast<std::size_t>(i)] = get_u32(header + 4 + 4 * i);
  const std::size_t bytes = h.count() * elem_size;
  std::vector<char> payload(bytes);
  in.read(payload.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes)
    throw DataError(path.string() + ": truncated payload (expected " + std::to_string(bytes) + " bytes, got " +
                    std::to_string(in.gcount()) + ")");
  return payload;
}

}  // namespace

double VoxelGrid::volume_fraction() const {
  if (data.empty()) return 0.0;
  const auto n = std::accumulate(data.begin(), data.end(), std::int64_t{0});
  return static_cast<double>(n) / static_cast<double>(data.size());
}

void write_voxels(const VoxelGrid& grid, const std::filesystem::path& path) {
  ArrayHeader h;
  h.type = 0;
  for (std::size_t i = 0; i < 3; ++i) h.dims[i] = static_cast<std::uint32_t>(grid.dims[i]);
  write_array(path, h, grid.data.data(), grid.data.size());
}

VoxelGrid read_voxels(const std::filesystem::path& path) {
  ArrayHeader h;
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open " + path.string());
  probe.close();
  auto payload = read_array(path, h, 1);
  if (h.type != 0) throw DataError(path.string() + ": not a binary voxel file");
  VoxelGrid g(h.dims[0], h.dims[1], h.dims[2]);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(payload[i]);
    if (v > 1) throw DataError(path.string() + ": non-binary voxel value " + std::to_string(v));
    g.data[i] = v;
  }
  return g;
}

void write_float_array(const torch::Tensor& values, const std::filesystem::path& path) {
  TORCH_CHECK(values.dim() >= 1 && values.dim() <= 3, "write_float_array: 1 to 3 dims");
  auto v = values.detach().to(torch::kFloat32).contiguous();
  ArrayHeader h;
  h.type = 1;
  h.dims = {1, 1, 1};
  for (std::int64_t d = 0; d < v.dim(); ++d)
    h.dims[static_cast<std::size_t>(3 - v.dim() + d)] = static_cast<std::uint32_t>(v.size(d));
  write_array(path, h, v.data_ptr<float>(), static_cast<std::size_t>(v.numel()) * sizeof(float));
}

torch::Tensor read_float_array(const std::filesystem::path& path) {
  ArrayHeader h;
  auto payload = read_array(path, h, sizeof(float));
  if (h.type != 1) throw DataError(path.string() + ": not a float array");
  auto t = torch::empty({h.dims[0], h.dims[1], h.dims[2]}, torch::kFloat32);
  std::memcpy(t.data_ptr<float>(), payload.data(), payload.size());
  return t;
}

torch::Tensor voxels_to_tensor(const VoxelGrid& grid) {
  auto t = torch::empty({1, grid.dims[0], grid.dims[1], grid.dims[2]}, torch::kFloat32);
  auto* p = t.data_ptr<float>();
  for (std::size_t i = 0; i < grid.data.size(); ++i) p[i] = grid.data[i] ? 1.0f : -1.0f;
  return t;
}

VoxelGrid tensor_to_voxels(const torch::Tensor& volume, double voxel_size) {
  auto v = volume.detach();
  if (v.dim() == 4) v = v.squeeze(0);
  TORCH_CHECK(v.dim() == 3, "tensor_to_voxels: expected (X, Y, Z)");
  auto b = (v > 0).to(torch::kUInt8).contiguous();
  VoxelGrid g(v.size(0), v.size(1), v.size(2), voxel_size);
  std::memcpy(g.data.data(), b.data_ptr<std::uint8_t>(), g.data.size());
  return g;
}

torch::Tensor normalize_pixels(const torch::Tensor& bytes) { return bytes.to(torch::kFloat32) / 127.5 - 1.0; }

torch::Tensor denormalize_pixels(const torch::Tensor& values) {
  return ((values.detach().to(torch::kFloat32) + 1.0) * 127.5).round().clamp(0, 255).to(torch::kUInt8);
}

torch::Tensor read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const auto h = static_cast<std::int64_t>(image.height), w = static_cast<std::int64_t>(image.width);
  auto t = torch::from_blob(buf.data(), {h, w, 3}, torch::kUInt8).permute({2, 0, 1}).clone();
  return normalize_pixels(t);
}

void write_png(const torch::Tensor& image, const std::filesystem::path& path) {
  TORCH_CHECK(image.dim() == 3 && (image.size(0) == 3 || image.size(0) == 1), "write_png: expected (3|1, H, W)");
  auto bytes = denormalize_pixels(image).permute({1, 2, 0}).contiguous();
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.size(2));
  out.height = static_cast<png_uint_32>(image.size(1));
  out.format = image.size(0) == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, bytes.data_ptr<std::uint8_t>(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + out.message);
}

void write_png_gray01(const torch::Tensor& values, const std::filesystem::path& path) {
  TORCH_CHECK(values.dim() == 2, "write_png_gray01: expected (H, W)");
  write_png((values.detach().to(torch::kFloat32).clamp(0, 1) * 2.0 - 1.0).unsqueeze(0), path);
}

torch::Tensor tile_images(const torch::Tensor& images, std::int64_t cols, std::int64_t gap, double fill) {
  TORCH_CHECK(images.dim() == 4 && cols >= 1, "tile_images: expected (N, C, H, W)");
  const auto n = images.size(0), c = images.size(1), h = images.size(2), w = images.size(3);
  const auto rows = (n + cols - 1) / cols;
  auto sheet = torch::full({c, rows * h + (rows - 1) * gap, cols * w + (cols - 1) * gap}, fill, images.options());
  for (std::int64_t k = 0; k < n; ++k) {
    const auto r = k / cols, q = k % cols;
    sheet.narrow(1, r * (h + gap), h).narrow(2, q * (w + gap), w).copy_(images[k]);
  }
  return sheet;
}

}  // namespace mtgan
