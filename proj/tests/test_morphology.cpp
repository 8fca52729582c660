#include "mtgan/morphology.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace mtgan;

namespace {

VoxelGrid box(std::int64_t p, std::int64_t q, std::int64_t r, std::int64_t pad = 1) {
  VoxelGrid g(p + 2 * pad, q + 2 * pad, r + 2 * pad);
  for (std::int64_t x = 0; x < p; ++x)
    for (std::int64_t y = 0; y < q; ++y)
      for (std::int64_t z = 0; z < r; ++z) g.at(x + pad, y + pad, z + pad) = 1;
  return g;
}

VoxelGrid random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> side(1, 12);
  std::uniform_real_distribution<double> u(0, 1);
  VoxelGrid g(side(rng), side(rng), side(rng));
  const double p = u(rng);
  for (auto& v : g.data) v = u(rng) < p;
  return g;
}

}  // namespace

TEST(Morphology, SingleVoxel) {
  VoxelGrid g(1, 1, 1);
  g.at(0, 0, 0) = 1;
  auto c = cell_counts(g);
  EXPECT_EQ(c, (CellCounts{8, 12, 6, 1, 6}));
  auto m = minkowski(g);
  EXPECT_EQ(m.volume, 1);
  EXPECT_EQ(m.surface_area, 6);
  EXPECT_EQ(m.mean_breadth, 1.5);
  EXPECT_EQ(m.euler, 1);
}

TEST(Morphology, TwoAdjacentVoxels) {
  VoxelGrid g(2, 1, 1);
  g.data = {1, 1};
  auto c = cell_counts(g);
  EXPECT_EQ(c.n0, 12);
  EXPECT_EQ(c.n1, 20);
  EXPECT_EQ(c.n2, 11);
  EXPECT_EQ(c.n3, 2);
  EXPECT_EQ(c.boundary_faces, 10);
  EXPECT_EQ(minkowski(g).euler, 1);
}

TEST(Morphology, CubeOfTwo) {
  auto m = minkowski(box(2, 2, 2, 0));
  EXPECT_EQ(m.surface_area, 24);
  EXPECT_EQ(m.euler, 1);
  EXPECT_EQ(m.volume, 8);
}

TEST(Morphology, HollowCubeHasEulerTwo) {
  auto g = box(3, 3, 3, 0);
  g.at(1, 1, 1) = 0;
  auto m = minkowski(g);
  EXPECT_EQ(m.euler, 2);
  EXPECT_EQ(m.surface_area, 54 + 6);
}

TEST(Morphology, RingHasEulerZero) {
  auto g = box(3, 3, 1, 0);
  g.at(1, 1, 0) = 0;
  EXPECT_EQ(minkowski(g).euler, 0);
}

TEST(Morphology, DiagonalVoxelsShareAVertex) {
  VoxelGrid g(2, 2, 2);
  g.at(0, 0, 0) = 1;
  g.at(1, 1, 1) = 1;
  auto c = cell_counts(g);
  EXPECT_EQ(c.n0, 15);
  EXPECT_EQ(minkowski(g).euler, 1);
}

TEST(Morphology, BoxClosedForms) {
  for (std::int64_t p = 1; p <= 5; ++p)
    for (std::int64_t q = 1; q <= 4; ++q)
      for (std::int64_t r = 1; r <= 3; ++r) {
        auto m = minkowski(box(p, q, r));
        EXPECT_EQ(m.volume, static_cast<double>(p * q * r));
        EXPECT_EQ(m.surface_area, static_cast<double>(2 * (p * q + q * r + r * p)));
        EXPECT_EQ(m.mean_breadth, static_cast<double>(p + q + r) / 2);
        EXPECT_EQ(m.euler, 1);
      }
}

TEST(Morphology, VoxelSizeScaling) {
  auto g = box(2, 3, 4);
  g.voxel_size = 0.5;
  auto m = minkowski(g);
  EXPECT_DOUBLE_EQ(m.volume, 24 * 0.125);
  EXPECT_DOUBLE_EQ(m.surface_area, 52 * 0.25);
  EXPECT_DOUBLE_EQ(m.mean_breadth, 4.5 * 0.5);
  EXPECT_EQ(m.euler, 1);
}

TEST(Morphology, FastCountsMatchBruteForce) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 200; ++t) {
    auto g = random_grid(rng);
    ASSERT_EQ(cell_counts(g), cell_counts_bruteforce(g)) << "grid " << t;
  }
}

TEST(Morphology, InvariantUnderAxisPermutationAndFlip) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 30; ++t) {
    auto g = random_grid(rng);
    VoxelGrid h(g.dims[2], g.dims[0], g.dims[1]);
    for (std::int64_t x = 0; x < g.dims[0]; ++x)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t z = 0; z < g.dims[2]; ++z) h.at(g.dims[2] - 1 - z, x, y) = g.at(x, y, z);
    auto a = minkowski(g), b = minkowski(h);
    EXPECT_EQ(a.volume, b.volume);
    EXPECT_EQ(a.surface_area, b.surface_area);
    EXPECT_EQ(a.mean_breadth, b.mean_breadth);
    EXPECT_EQ(a.euler, b.euler);
  }
}

TEST(Morphology, AdditiveOverSeparatedComponents) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    auto a = random_grid(rng), b = random_grid(rng);
    // place b beyond a with a one-voxel gap
    VoxelGrid u(a.dims[0] + 1 + b.dims[0], std::max(a.dims[1], b.dims[1]), std::max(a.dims[2], b.dims[2]));
    for (std::int64_t x = 0; x < a.dims[0]; ++x)
      for (std::int64_t y = 0; y < a.dims[1]; ++y)
        for (std::int64_t z = 0; z < a.dims[2]; ++z) u.at(x, y, z) = a.at(x, y, z);
    for (std::int64_t x = 0; x < b.dims[0]; ++x)
      for (std::int64_t y = 0; y < b.dims[1]; ++y)
        for (std::int64_t z = 0; z < b.dims[2]; ++z) u.at(a.dims[0] + 1 + x, y, z) = b.at(x, y, z);
    auto ma = minkowski(a), mb = minkowski(b), mu = minkowski(u);
    EXPECT_EQ(mu.volume, ma.volume + mb.volume);
    EXPECT_EQ(mu.surface_area, ma.surface_area + mb.surface_area);
    EXPECT_EQ(mu.mean_breadth, ma.mean_breadth + mb.mean_breadth);
    EXPECT_EQ(mu.euler, ma.euler + mb.euler);
  }
}

TEST(Morphology, EmptyGrid) {
  VoxelGrid g(3, 3, 3);
  EXPECT_EQ(cell_counts(g), CellCounts{});
}

TEST(Morphology, BatchStatisticsAndCsv) {
  std::vector<VoxelGrid> grids{box(1, 1, 1), box(2, 2, 2)};
  auto s = batch_statistics(grids, {"volume", "euler", "permeability"}, {{"permeability", {0.1, 0.2}}});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].values, (std::vector<double>{1, 8}));
  EXPECT_EQ(s[1].values, (std::vector<double>{1, 1}));
  EXPECT_EQ(s[2].values, (std::vector<double>{0.1, 0.2}));
  EXPECT_ANY_THROW(batch_statistics(grids, {"permeability"}));
  EXPECT_ANY_THROW(batch_statistics(grids, {"nonsense"}));

  auto out = std::filesystem::temp_directory_path() / "mtgan_test_morph.csv";
  write_morphology_csv({"a", "b"}, {minkowski(grids[0]), minkowski(grids[1])}, out);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "path,volume,surface_area,mean_breadth,euler");
}
