#include "mtgan/analysis.hpp"
#include "mtgan/error.hpp"
#include "mtgan/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mtgan;

namespace {

ModelBundle small_bundle(std::uint64_t seed = 1) {
  auto lat = LatentSpec::defaults_2d();
  lat.spatial = 2;
  auto b = ModelBundle::build(lat, ModelArchitectures::reduced(lat, 4), seed);
  // populate batch-norm statistics, then switch to inference
  {
    torch::NoGradGuard ng;
    auto gen = make_generator(seed);
    b.generator->generate(torch::randn({4, lat.d_global}, gen), gen, GlobalSource::prior, 2);
    b.encoder->forward(torch::rand({4, 3, 64, 64}, gen) * 2 - 1);
  }
  b.train(false);
  return b;
}

}  // namespace

TEST(Heatmap, OneAtZeroDistanceAndExpMinusAlpha) {
  auto field = torch::zeros({2, 3, 3}, torch::kFloat64);
  field[0][1][2] = 1.0;
  auto e = torch::zeros({2}, torch::kFloat64);
  auto h = heatmap_from_embeddings(field, e, 3.0);
  EXPECT_EQ(h[0][0].item<double>(), 1.0);
  EXPECT_NEAR(h[1][2].item<double>(), std::exp(-3.0), 1e-15);
}

TEST(Heatmap, FarEmbeddingsStayPositive) {
  auto field = torch::full({2, 1, 1}, 100.0, torch::kFloat64);
  auto h = heatmap_from_embeddings(field, torch::zeros({2}, torch::kFloat64), 3.0);
  EXPECT_GT(h.item<double>(), 0.0);
}

TEST(Heatmap, MonotoneInDistance) {
  auto field = torch::zeros({1, 1, 5}, torch::kFloat64);
  for (int i = 0; i < 5; ++i) field[0][0][i] = 0.3 * i;
  auto h = heatmap_from_embeddings(field, torch::zeros({1}, torch::kFloat64), 3.0);
  for (int i = 1; i < 5; ++i) EXPECT_LT(h[0][i].item<double>(), h[0][i - 1].item<double>());
}

TEST(Detection, ReflectPadding) {
  auto p = torch::arange(6, torch::kFloat32).view({1, 2, 3});
  auto out = reflect_pad_to(p, 9);
  EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{1, 9, 9}));
  // the patch itself sits in the middle
  auto one = reflect_pad_to(torch::ones({3, 1, 1}), 5);
  EXPECT_EQ(one.sizes(), (std::vector<std::int64_t>{3, 5, 5}));
  EXPECT_TRUE(torch::equal(one, torch::ones({3, 5, 5})));
  auto same = reflect_pad_to(p, 2);
  EXPECT_TRUE(torch::equal(same.narrow(2, 0, 3), p));
}

TEST(Detection, ShapesAndValidation) {
  auto b = small_bundle();
  auto img = torch::rand({3, 128, 160}) * 2 - 1;
  auto r = detect(b, img, {10, 20, 64, 64}, DetectionConfig{}, 64);
  EXPECT_EQ(r.heatmap.sizes(), (std::vector<std::int64_t>{128, 160}));
  EXPECT_EQ(r.grid.dim(), 2);
  EXPECT_LE(r.heatmap.max().item<double>(), 1.0);
  EXPECT_GT(r.heatmap.min().item<double>(), 0.0);
  // small patches are padded up to the crop size
  auto small = detect(b, img, {0, 0, 20, 30}, DetectionConfig{}, 64);
  EXPECT_EQ(small.patch_embedding.size(0), b.latent.d_global);
  EXPECT_THROW(detect(b, img, {150, 0, 20, 20}, DetectionConfig{}, 64), DataError);
  DetectionConfig bad;
  bad.alpha = 0;
  EXPECT_THROW(detect(b, img, {0, 0, 64, 64}, bad, 64), ConfigError);
}

TEST(Tiled, ConstantFieldMatchesPlainGenerationWithZeroPhase) {
  auto b = small_bundle();
  const auto& lat = b.latent;
  auto z = torch::randn({1, lat.d_global});
  auto field = z.view({1, lat.d_global, 1, 1}).expand({1, lat.d_global, 3, 3}).contiguous();
  auto g1 = make_generator(5);
  auto tiled = tiled_generate(b.generator, field, g1);

  auto g2 = make_generator(5);
  auto spec = lat;
  spec.spatial = 3;
  torch::Tensor local = torch::randn({1, lat.d_local, 3, 3}, g2);
  auto noise = compose_noise(z, local, torch::zeros({1, lat.d_periodic}), spec, b.generator->coef_fn());
  torch::NoGradGuard ng;
  auto plain = b.generator->forward(noise);
  EXPECT_EQ(tiled.sizes(), plain.sizes());
  EXPECT_TRUE(torch::allclose(tiled, plain, 1e-4, 1e-5));
}

TEST(Tiled, TextureMapShape) {
  auto b = small_bundle();
  auto img = torch::rand({3, 160, 160}) * 2 - 1;
  auto gen = make_generator(1);
  auto out = texture_map(b, img, DetectionConfig{}, gen);
  EXPECT_EQ(out.dim(), 4);
  EXPECT_EQ(out.size(1), 3);
}

TEST(Manifold, GridPointsAndTiles) {
  EXPECT_EQ(manifold_points(-1.0, 1.0, 0.1), 21);
  EXPECT_EQ(manifold_points(0.0, 1.0, 0.5), 3);
  EXPECT_THROW(manifold_points(0, 1, 0), ConfigError);

  auto lat = LatentSpec::defaults_2d();
  lat.spatial = 1;
  auto b = ModelBundle::build(lat, ModelArchitectures::reduced(lat, 4), 2);
  b.train(false);
  auto grid = manifold_grid(b, -1.0, 1.0, 0.1, 77);
  EXPECT_EQ(grid.tiles.size(0), 21 * 21);
  EXPECT_EQ(grid.axis.size(), 21u);
  EXPECT_NEAR(grid.axis.back(), 1.0, 1e-12);
  // tile (i, j) is reproducible on its own
  torch::NoGradGuard ng;
  auto gen = make_generator(77);
  auto z = torch::tensor({grid.axis[3], grid.axis[17]}, torch::kFloat32).view({1, 2});
  auto tile = b.generator->generate(z, gen, GlobalSource::prior, 1);
  EXPECT_TRUE(torch::equal(tile[0], grid.tiles[3 * 21 + 17]));
  EXPECT_EQ(grid.sheet.size(1), 21 * 32 + 20 * 2);
}

TEST(Manifold, RequiresTwoGlobalDimensions) {
  auto lat = LatentSpec::defaults_2d();
  lat.d_global = 3;
  lat.spatial = 1;
  auto b = ModelBundle::build(lat, ModelArchitectures::reduced(lat, 4), 2);
  EXPECT_THROW(manifold_grid(b, 0, 1, 0.5, 1), ConfigError);
}

TEST(Sampling, ReconstructionAndPriorShapes) {
  auto b = small_bundle();
  auto gen = make_generator(1);
  auto x = torch::rand({3, 3, 64, 64}) * 2 - 1;
  EXPECT_EQ(reconstruct(b, x, gen).sizes(), x.sizes());
  ReconstructOptions o;
  o.zero_sigma = true;
  auto g1 = make_generator(4), g2 = make_generator(4);
  EXPECT_TRUE(torch::equal(reconstruct(b, x, g1, o), reconstruct(b, x, g2, o)));
  auto s = sample_images(b, 5, 96, gen, 2);
  EXPECT_EQ(s.sizes(), (std::vector<std::int64_t>{5, 3, 96, 96}));
}

TEST(Detection, PoolDefaultsToTrainingLatentSide) {
  auto b = small_bundle();
  DetectionConfig c;
  EXPECT_EQ(c.pool_for(b), 2);
  c.pool_kernel = 5;
  EXPECT_EQ(c.pool_for(b), 5);
  c.pool_kernel = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}
