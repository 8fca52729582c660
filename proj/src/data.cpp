#include "mtgan/data.hpp"

#include "mtgan/error.hpp"
#include "mtgan/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace mtgan {

int TextureDataset::ndim() const {
  if (sources.empty()) return 2;
  return static_cast<int>(sources.front().data.dim()) - 1;
}

void TextureDataset::validate(std::int64_t min_side) const {
  if (sources.empty()) throw DataError("dataset has no sources");
  if (crop_size < 1) throw DataError("dataset crop size must be >= 1");
  const auto need = std::max(min_side, crop_size);
  const int nd = ndim();
  if (nd != 2 && nd != 3) throw DataError("dataset sources must be 2D images or 3D volumes");
  for (const auto& s : sources) {
    if (s.data.dim() != nd + 1) throw DataError("source " + s.name + ": mixed dimensionality");
    if (s.data.size(0) != sources.front().data.size(0)) throw DataError("source " + s.name + ": channel mismatch");
    for (int d = 1; d <= nd; ++d)
      if (s.data.size(d) < need)
        throw DataError("source " + s.name + " is smaller than " + std::to_string(need) + " on axis " +
                        std::to_string(d - 1));
    if (mode == DatasetMode::labeled) {
      if (!s.label) throw DataError("source " + s.name + " has no label in a labeled dataset");
      if (*s.label < 0 || *s.label >= num_classes())
        throw DataError("source " + s.name + ": label out of range");
    } else if (s.label) {
      throw DataError("source " + s.name + " carries a label in a raw dataset");
    }
  }
}

std::vector<std::size_t> TextureDataset::sources_with_label(std::int64_t label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].label && *sources[i].label == label) out.push_back(i);
  return out;
}

std::int64_t default_window(std::int64_t crop) { return std::llround(static_cast<double>(crop) * 1.1); }

std::int64_t uniform_offset(std::int64_t extent, std::int64_t side, HostRng& rng) {
  if (extent < side)
    throw DataError("cannot crop " + std::to_string(side) + " from extent " + std::to_string(extent));
  return std::uniform_int_distribution<std::int64_t>(0, extent - side)(rng);
}

torch::Tensor random_crop(const torch::Tensor& data, std::int64_t side, HostRng& rng) {
  auto out = data;
  for (std::int64_t d = 1; d < data.dim(); ++d) out = out.narrow(d, uniform_offset(data.size(d), side, rng), side);
  return out;
}

std::pair<torch::Tensor, torch::Tensor> sample_pair_raw(const torch::Tensor& image, std::int64_t s, std::int64_t w,
                                                        HostRng& rng) {
  if (w < s) throw DataError("window side must be at least the crop side");
  auto window = random_crop(image, w, rng);
  auto x = random_crop(window, s, rng);
  auto y = random_crop(window, s, rng);
  return {x, y};
}

namespace {

PairBatch stack_pairs(std::vector<torch::Tensor>& xs, std::vector<torch::Tensor>& ys, std::vector<std::int64_t>& ls) {
  return {torch::stack(xs), torch::stack(ys), torch::tensor(ls, torch::kInt64)};
}

}  // namespace

PairBatch sample_pair_labeled(const TextureDataset& dataset, std::int64_t batch, HostRng& rng) {
  if (dataset.mode != DatasetMode::labeled) throw DataError("labeled pair sampling needs a labeled dataset");
  if (batch < 1) throw DataError("batch must be >= 1");
  std::vector<std::vector<std::size_t>> by_label;
  std::vector<std::int64_t> labels;
  for (std::int64_t c = 0; c < dataset.num_classes(); ++c) {
    auto idx = dataset.sources_with_label(c);
    if (!idx.empty()) {
      by_label.push_back(std::move(idx));
      labels.push_back(c);
    }
  }
  if (by_label.empty()) throw DataError("dataset has no labeled sources");
  std::vector<torch::Tensor> xs, ys;
  std::vector<std::int64_t> ls;
  std::uniform_int_distribution<std::size_t> pick_label(0, by_label.size() - 1);
  for (std::int64_t i = 0; i < batch; ++i) {
    const auto li = pick_label(rng);
    const auto& pool = by_label[li];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const auto& a = dataset.sources[pool[pick(rng)]].data;
    const auto& b = dataset.sources[pool[pick(rng)]].data;
    xs.push_back(random_crop(a, dataset.crop_size, rng));
    ys.push_back(random_crop(b, dataset.crop_size, rng));
    ls.push_back(labels[li]);
  }
  return stack_pairs(xs, ys, ls);
}

PairBatch sample_pair_raw_batch(const TextureDataset& dataset, std::int64_t batch, std::int64_t window, HostRng& rng) {
  if (dataset.sources.empty()) throw DataError("dataset has no sources");
  if (batch < 1) throw DataError("batch must be >= 1");
  std::vector<torch::Tensor> xs, ys;
  std::vector<std::int64_t> ls;
  std::uniform_int_distribution<std::size_t> pick(0, dataset.sources.size() - 1);
  for (std::int64_t i = 0; i < batch; ++i) {
    auto [x, y] = sample_pair_raw(dataset.sources[pick(rng)].data, dataset.crop_size, window, rng);
    xs.push_back(x);
    ys.push_back(y);
    ls.push_back(-1);
  }
  return stack_pairs(xs, ys, ls);
}

PairBatch sample_pairs(const TextureDataset& dataset, std::int64_t batch, HostRng& rng) {
  if (dataset.mode == DatasetMode::labeled) return sample_pair_labeled(dataset, batch, rng);
  return sample_pair_raw_batch(dataset, batch, default_window(dataset.crop_size), rng);
}

// ---------------------------------------------------------------------------
// procedural textures

TextureKind TextureKind::stripes(double angle, double period, Rgb a, Rgb b) {
  TextureKind k;
  k.pattern = Pattern::stripes;
  k.angle = angle;
  k.period = period;
  k.color_a = a;
  k.color_b = b;
  return k;
}

TextureKind TextureKind::checker(double period, Rgb a, Rgb b) {
  TextureKind k;
  k.pattern = Pattern::checker;
  k.period = period;
  k.color_a = a;
  k.color_b = b;
  return k;
}

TextureKind TextureKind::dots(double spacing, double radius, Rgb a, Rgb b) {
  TextureKind k;
  k.pattern = Pattern::dots;
  k.spacing = spacing;
  k.radius = radius;
  k.color_a = a;
  k.color_b = b;
  return k;
}

TextureKind TextureKind::noise(double blur, Rgb a, Rgb b) {
  TextureKind k;
  k.pattern = Pattern::noise;
  k.blur = blur;
  k.color_a = a;
  k.color_b = b;
  return k;
}

std::string TextureKind::name() const {
  std::ostringstream s;
  switch (pattern) {
    case Pattern::stripes: s << "stripes(" << angle << "," << period << ")"; break;
    case Pattern::checker: s << "checker(" << period << ")"; break;
    case Pattern::dots: s << "dots(" << spacing << "," << radius << ")"; break;
    case Pattern::noise: s << "noise(" << blur << ")"; break;
  }
  return s.str();
}

std::vector<TextureKind> desk_texture_kinds() {
  return {
      TextureKind::stripes(0, 8, {0.10f, 0.10f, 0.45f}, {1.00f, 0.90f, 0.20f}),
      TextureKind::stripes(90, 8, {0.55f, 0.05f, 0.05f}, {0.70f, 1.00f, 1.00f}),
      TextureKind::stripes(45, 12, {0.05f, 0.35f, 0.10f}, {1.00f, 0.60f, 0.80f}),
      TextureKind::checker(8, {0.00f, 0.00f, 0.00f}, {1.00f, 1.00f, 1.00f}),
      TextureKind::checker(16, {0.40f, 0.10f, 0.55f}, {1.00f, 0.55f, 0.10f}),
      TextureKind::dots(12, 3, {0.35f, 0.20f, 0.10f}, {0.60f, 1.00f, 0.50f}),
      TextureKind::dots(8, 2, {0.00f, 0.50f, 0.50f}, {0.95f, 0.15f, 0.15f}),
      TextureKind::noise(2, {0.30f, 0.30f, 0.30f}, {0.85f, 0.75f, 0.55f}),
  };
}

namespace {

// exact for multiples of 90 degrees so that axis-aligned stripes are exact transposes
std::pair<double, double> direction(double degrees) {
  const double r = std::fmod(std::fmod(degrees, 360.0) + 360.0, 360.0);
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double t = r * std::numbers::pi / 180.0;
  return {std::cos(t), std::sin(t)};
}

double uniform01(HostRng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void box_blur(std::vector<double>& v, std::int64_t n, std::int64_t radius) {
  if (radius < 1) return;
  std::vector<double> tmp(v.size());
  auto clampi = [n](std::int64_t i) { return std::clamp<std::int64_t>(i, 0, n - 1); };
  for (int pass = 0; pass < 2; ++pass) {
    for (std::int64_t y = 0; y < n; ++y)
      for (std::int64_t x = 0; x < n; ++x) {
        double s = 0;
        for (std::int64_t k = -radius; k <= radius; ++k)
          s += pass == 0 ? v[static_cast<std::size_t>(y * n + clampi(x + k))]
                         : v[static_cast<std::size_t>(clampi(y + k) * n + x)];
        tmp[static_cast<std::size_t>(y * n + x)] = s / static_cast<double>(2 * radius + 1);
      }
    v.swap(tmp);
  }
}

}  // namespace

torch::Tensor render_texture(const TextureKind& kind, std::int64_t size, HostRng& rng) {
  if (size < 1) throw DataError("texture size must be >= 1");
  const auto n = static_cast<std::size_t>(size);
  std::vector<double> t(n * n, 0.0);  // mixing weight between color_a (0) and color_b (1)
  switch (kind.pattern) {
    case TextureKind::Pattern::stripes: {
      const auto [c, s] = direction(kind.angle);
      const double phase = uniform01(rng) * kind.period;
      for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
          const double u = static_cast<double>(x) * c + static_cast<double>(y) * s + phase;
          t[static_cast<std::size_t>(y * size + x)] = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * u / kind.period);
        }
      break;
    }
    case TextureKind::Pattern::checker: {
      const double ox = uniform01(rng) * 2 * kind.period, oy = uniform01(rng) * 2 * kind.period;
      for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
          const auto cx = static_cast<std::int64_t>(std::floor((static_cast<double>(x) + ox) / kind.period));
          const auto cy = static_cast<std::int64_t>(std::floor((static_cast<double>(y) + oy) / kind.period));
          t[static_cast<std::size_t>(y * size + x)] = ((cx + cy) & 1) ? 1.0 : 0.0;
        }
      break;
    }
    case TextureKind::Pattern::dots: {
      const double ox = uniform01(rng) * kind.spacing, oy = uniform01(rng) * kind.spacing;
      const double half = kind.spacing / 2.0, r2 = kind.radius * kind.radius;
      for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
          const double dx = std::fmod(static_cast<double>(x) + ox, kind.spacing) - half;
          const double dy = std::fmod(static_cast<double>(y) + oy, kind.spacing) - half;
          t[static_cast<std::size_t>(y * size + x)] = dx * dx + dy * dy <= r2 ? 1.0 : 0.0;
        }
      break;
    }
    case TextureKind::Pattern::noise: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (auto& v : t) v = normal(rng);
      box_blur(t, size, static_cast<std::int64_t>(std::lround(kind.blur)));
      double mean = 0, sq = 0;
      for (auto v : t) mean += v;
      mean /= static_cast<double>(t.size());
      for (auto v : t) sq += (v - mean) * (v - mean);
      const double sd = std::sqrt(sq / static_cast<double>(t.size())) + 1e-12;
      for (auto& v : t) v = std::clamp(0.5 + 0.25 * (v - mean) / sd, 0.0, 1.0);
      break;
    }
  }
  auto img = torch::empty({3, size, size}, torch::kFloat32);
  auto acc = img.accessor<float, 3>();
  for (std::int64_t ch = 0; ch < 3; ++ch) {
    const double a = kind.color_a[static_cast<std::size_t>(ch)], b = kind.color_b[static_cast<std::size_t>(ch)];
    for (std::int64_t y = 0; y < size; ++y)
      for (std::int64_t x = 0; x < size; ++x)
        acc[ch][y][x] = static_cast<float>(2.0 * (a + (b - a) * t[static_cast<std::size_t>(y * size + x)]) - 1.0);
  }
  return img;
}

TextureDataset procedural_textures(const std::vector<TextureKind>& kinds, std::int64_t size,
                                   std::int64_t count_per_kind, HostRng& rng) {
  if (kinds.empty()) throw DataError("procedural textures need at least one kind");
  TextureDataset ds;
  ds.crop_size = size;
  ds.mode = DatasetMode::labeled;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ds.class_names.push_back(kinds[k].name());
    for (std::int64_t i = 0; i < count_per_kind; ++i)
      ds.sources.push_back({render_texture(kinds[k], size, rng), static_cast<std::int64_t>(k),
                            kinds[k].name() + "#" + std::to_string(i)});
  }
  return ds;
}

std::string VolumeKind::name() const {
  std::ostringstream s;
  s << "balls(" << radius << "," << solid_fraction << ")";
  return s.str();
}

torch::Tensor render_volume(const VolumeKind& kind, std::int64_t size, HostRng& rng) {
  if (size < 1) throw DataError("volume size must be >= 1");
  VoxelGrid g(size, size, size);
  const auto total = static_cast<double>(g.size());
  std::int64_t solid = 0;
  const auto r = kind.radius;
  const auto ri = static_cast<std::int64_t>(std::ceil(r));
  for (int attempt = 0; attempt < 100000 && static_cast<double>(solid) < kind.solid_fraction * total; ++attempt) {
    const double cx = uniform01(rng) * static_cast<double>(size);
    const double cy = uniform01(rng) * static_cast<double>(size);
    const double cz = uniform01(rng) * static_cast<double>(size);
    const auto x0 = static_cast<std::int64_t>(cx), y0 = static_cast<std::int64_t>(cy),
               z0 = static_cast<std::int64_t>(cz);
    for (std::int64_t x = std::max<std::int64_t>(0, x0 - ri); x <= std::min(size - 1, x0 + ri); ++x)
      for (std::int64_t y = std::max<std::int64_t>(0, y0 - ri); y <= std::min(size - 1, y0 + ri); ++y)
        for (std::int64_t z = std::max<std::int64_t>(0, z0 - ri); z <= std::min(size - 1, z0 + ri); ++z) {
          const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy,
                       dz = static_cast<double>(z) + 0.5 - cz;
          if (dx * dx + dy * dy + dz * dz <= r * r && !g.at(x, y, z)) {
            g.at(x, y, z) = 1;
            ++solid;
          }
        }
  }
  return voxels_to_tensor(g);
}

TextureDataset procedural_volumes(const std::vector<VolumeKind>& kinds, std::int64_t size,
                                  std::int64_t count_per_kind, HostRng& rng) {
  if (kinds.empty()) throw DataError("procedural volumes need at least one kind");
  TextureDataset ds;
  ds.crop_size = size;
  ds.mode = DatasetMode::labeled;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ds.class_names.push_back(kinds[k].name());
    for (std::int64_t i = 0; i < count_per_kind; ++i)
      ds.sources.push_back({render_volume(kinds[k], size, rng), static_cast<std::int64_t>(k),
                            kinds[k].name() + "#" + std::to_string(i)});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// manifests

TextureDataset read_manifest(const std::filesystem::path& manifest, std::int64_t crop_size) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open dataset manifest " + manifest.string());
  const auto base = manifest.parent_path();
  TextureDataset ds;
  ds.crop_size = crop_size;
  std::map<std::string, std::int64_t> label_ids;
  int labeled = 0, unlabeled = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string path, label, extra;
    if (!(ls >> path)) continue;
    ls >> label;
    if (ls >> extra)
      throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": expected `path [label]`");
    std::filesystem::path p = path;
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p))
      throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": missing file " + p.string());
    TextureSource src;
    src.name = path;
    const auto ext = p.extension().string();
    if (ext == ".vox")
      src.data = voxels_to_tensor(read_voxels(p));
    else
      src.data = read_png(p);
    if (!label.empty()) {
      auto [it, inserted] = label_ids.emplace(label, static_cast<std::int64_t>(ds.class_names.size()));
      if (inserted) ds.class_names.push_back(label);
      src.label = it->second;
      ++labeled;
    } else {
      ++unlabeled;
    }
    ds.sources.push_back(std::move(src));
  }
  if (labeled > 0 && unlabeled > 0)
    throw DataError(manifest.string() + ": either every entry has a label or none does");
  ds.mode = labeled > 0 ? DatasetMode::labeled : DatasetMode::raw;
  ds.validate();
  return ds;
}

std::filesystem::path write_dataset(const TextureDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "manifest.txt";
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write " + manifest.string());
  for (std::size_t i = 0; i < dataset.sources.size(); ++i) {
    const auto& s = dataset.sources[i];
    char buf[32];
    std::snprintf(buf, sizeof buf, "src_%04zu", i);
    std::string file = buf;
    if (s.data.dim() == 4) {
      file += ".vox";
      write_voxels(tensor_to_voxels(s.data), dir / file);
    } else {
      file += ".png";
      write_png(s.data, dir / file);
    }
    out << file;
    if (s.label) out << ' ' << dataset.class_names[static_cast<std::size_t>(*s.label)];
    out << '\n';
  }
  return manifest;
}

}  // namespace mtgan
