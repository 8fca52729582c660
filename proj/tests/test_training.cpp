#include "mtgan/error.hpp"
#include "mtgan/training.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace mtgan;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  LatentSpec latent;
  ModelArchitectures arch;
  TextureDataset dataset;
  TrainingConfig config;
};

Fixture tiny(std::uint64_t seed = 3) {
  Fixture f;
  f.latent = LatentSpec::defaults_2d();
  f.latent.spatial = 2;
  f.arch = ModelArchitectures::reduced(f.latent, 4);
  HostRng rng(1);
  f.dataset = procedural_textures({TextureKind::checker(8), TextureKind::stripes(0, 6)}, 80, 1, rng);
  f.dataset.crop_size = 64;
  f.config = TrainingConfig::defaults(2);
  f.config.batch = 4;
  f.config.iterations = 3;
  f.config.seed = seed;
  return f;
}

std::vector<torch::Tensor> snapshot(ModelBundle& b) {
  std::vector<torch::Tensor> out;
  for (auto& [name, m] : b.modules()) {
    for (auto& p : m->parameters()) out.push_back(p.detach().clone());
    for (auto& p : m->buffers()) out.push_back(p.detach().clone());
  }
  return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!torch::equal(a[i], b[i])) return false;
  return true;
}

std::vector<torch::Tensor> params_of(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("mtgan_test_training_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Training, DefaultsPerDimension) {
  auto c2 = TrainingConfig::defaults(2), c3 = TrainingConfig::defaults(3);
  EXPECT_EQ(c2.batch, 64);
  EXPECT_EQ(c3.batch, 8);
  EXPECT_DOUBLE_EQ(c2.optimizer.lr, 2e-4);
  EXPECT_DOUBLE_EQ(c3.optimizer.lr, 1e-4);
  EXPECT_DOUBLE_EQ(c2.optimizer.beta1, 0.5);
  EXPECT_DOUBLE_EQ(c2.optimizer.weight_decay, 1e-4);
  auto bad = c2;
  bad.batch = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c2;
  bad.optimizer.lr = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Training, InitialLossesNearChance) {
  // with the small init every discriminator starts close to 1/2
  auto f = tiny();
  auto b = ModelBundle::build(f.latent, f.arch, 5);
  HostRng rng(2);
  auto batch = sample_pairs(f.dataset, 4, rng);
  auto gen = make_generator(1);
  auto l = compute_losses(b, batch.x, batch.x_bar, gen, f.config);
  EXPECT_NEAR(l.disc_texture.item<double>(), 3 * std::log(2.0), 0.1);
  EXPECT_NEAR(l.disc_pair.item<double>(), 2 * std::log(2.0), 0.1);
  EXPECT_NEAR(l.disc_latent.item<double>(), 2 * std::log(2.0), 0.1);
}

TEST(Training, StepsAreBitwiseDeterministic) {
  auto f = tiny();
  auto run = [&] {
    auto b = ModelBundle::build(f.latent, f.arch, 7);
    Trainer t(b, f.config);
    std::vector<LossRecord> recs;
    for (int i = 0; i < 3; ++i) recs.push_back(t.step(f.dataset));
    return std::make_pair(snapshot(b), recs);
  };
  auto [s1, r1] = run();
  auto [s2, r2] = run();
  EXPECT_TRUE(same(s1, s2));
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].disc_texture, r2[i].disc_texture);
    EXPECT_EQ(r1[i].generator, r2[i].generator);
    EXPECT_EQ(r1[i].encoder, r2[i].encoder);
  }
}

TEST(Training, DifferentSeedsDiffer) {
  auto f = tiny(1), g = tiny(2);
  auto b1 = ModelBundle::build(f.latent, f.arch, 7), b2 = ModelBundle::build(f.latent, f.arch, 7);
  Trainer t1(b1, f.config), t2(b2, g.config);
  t1.step(f.dataset);
  t2.step(g.dataset);
  EXPECT_FALSE(same(snapshot(b1), snapshot(b2)));
}

TEST(Training, StepUpdatesEveryNetwork) {
  auto f = tiny();
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  std::vector<std::vector<torch::Tensor>> before;
  for (auto& [n, m] : b.modules()) before.push_back(params_of(*m));
  Trainer t(b, f.config);
  t.step(f.dataset);
  auto mods = b.modules();
  for (std::size_t i = 0; i < mods.size(); ++i) EXPECT_FALSE(same(before[i], params_of(*mods[i].second))) << mods[i].first;
}

TEST(Training, PsganAblationLeavesEncoderSideUntouched) {
  auto f = tiny();
  f.config.ablation = Ablation::psgan;
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  auto enc = params_of(*b.encoder), dp = params_of(*b.disc_pair), dz = params_of(*b.disc_latent);
  auto gp = params_of(*b.generator), dx = params_of(*b.disc_texture);
  Trainer t(b, f.config);
  auto r = t.step(f.dataset);
  EXPECT_TRUE(same(enc, params_of(*b.encoder)));
  EXPECT_TRUE(same(dp, params_of(*b.disc_pair)));
  EXPECT_TRUE(same(dz, params_of(*b.disc_latent)));
  EXPECT_FALSE(same(gp, params_of(*b.generator)));
  EXPECT_FALSE(same(dx, params_of(*b.disc_texture)));
  EXPECT_EQ(r.disc_pair, 0.0);
  EXPECT_EQ(r.encoder, 0.0);
  EXPECT_EQ(r.disc_latent, 0.0);
}

TEST(Training, ExtraDiscriminatorSteps) {
  auto f = tiny();
  f.config.disc_steps_per_gen = 2;
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  Trainer t(b, f.config);
  auto r = t.step(f.dataset);
  EXPECT_TRUE(r.finite());
  EXPECT_EQ(t.iteration(), 1);
}

TEST(Training, NonFiniteLossThrowsWithoutUpdating) {
  auto f = tiny();
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  Trainer t(b, f.config);
  HostRng rng(3);
  auto batch = sample_pairs(f.dataset, 4, rng);
  batch.x[0][0][0][0] = std::numeric_limits<float>::quiet_NaN();
  auto before = snapshot(b);
  EXPECT_THROW(t.step(batch), NumericalError);
  // buffers (spectral-norm vectors) may have advanced; parameters must not
  std::vector<torch::Tensor> after_params, before_params;
  for (auto& [n, m] : b.modules())
    for (auto& p : m->parameters()) after_params.push_back(p.detach());
  EXPECT_EQ(t.iteration(), 0);
  std::size_t k = 0;
  for (auto& [n, m] : b.modules()) {
    const auto np = m->parameters().size();
    for (std::size_t i = 0; i < np; ++i) before_params.push_back(before[k + i]);
    k += np + m->buffers().size();
  }
  EXPECT_TRUE(same(before_params, after_params));
}

TEST(Training, CheckpointRoundTripIsExact) {
  auto f = tiny();
  auto dir = temp_dir("roundtrip");
  fs::create_directories(dir);
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  Trainer t(b, f.config);
  t.step(f.dataset);
  t.save(dir / "a.pt");
  auto info = read_checkpoint_info(dir / "a.pt");
  EXPECT_EQ(info.iteration, 1);
  EXPECT_EQ(info.latent, f.latent);
  EXPECT_EQ(info.config.batch, f.config.batch);
  auto loaded = load_bundle(dir / "a.pt");
  EXPECT_TRUE(same(snapshot(b), snapshot(loaded)));
  EXPECT_EQ(info.arch.generator.layers.size(), f.arch.generator.layers.size());

  std::ofstream(dir / "junk.pt") << "not a checkpoint";
  EXPECT_THROW(load_bundle(dir / "junk.pt"), DataError);
  EXPECT_THROW(load_bundle(dir / "missing.pt"), DataError);
}

TEST(Training, ResumeContinuesBitwise) {
  auto f = tiny();
  f.config.iterations = 4;
  f.config.checkpoint_every = 2;
  auto full_dir = temp_dir("full"), part_dir = temp_dir("part");
  auto b1 = ModelBundle::build(f.latent, f.arch, 7);
  auto res = train(b1, f.dataset, f.config, {full_dir, std::nullopt, nullptr});
  ASSERT_EQ(res.records.size(), 4u);
  EXPECT_TRUE(fs::exists(full_dir / "ckpt_000000.pt"));
  EXPECT_TRUE(fs::exists(full_dir / "ckpt_000002.pt"));
  EXPECT_TRUE(fs::exists(full_dir / "ckpt_000004.pt"));
  EXPECT_TRUE(fs::exists(full_dir / "metrics.csv"));

  auto b2 = ModelBundle::build(f.latent, f.arch, 99);  // weights come from the checkpoint
  auto res2 = train(b2, f.dataset, f.config, {part_dir, full_dir / "ckpt_000002.pt", nullptr});
  ASSERT_EQ(res2.records.size(), 2u);
  EXPECT_EQ(res2.records.back().iteration, 4);
  EXPECT_EQ(res2.records.back().generator, res.records.back().generator);
  EXPECT_TRUE(same(snapshot(b1), snapshot(b2)));
}

TEST(Training, ZeroIterationsWritesInitialCheckpointOnly) {
  auto f = tiny();
  f.config.iterations = 0;
  auto dir = temp_dir("zero");
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  auto before = snapshot(b);
  auto res = train(b, f.dataset, f.config, {dir, std::nullopt, nullptr});
  EXPECT_TRUE(res.records.empty());
  EXPECT_EQ(res.checkpoints.size(), 1u);
  EXPECT_TRUE(same(before, snapshot(b)));
}

TEST(Training, DatasetMismatchRejected) {
  auto f = tiny();
  f.dataset.crop_size = 65;
  auto b = ModelBundle::build(f.latent, f.arch, 7);
  EXPECT_THROW(train(b, f.dataset, f.config, {temp_dir("bad"), std::nullopt, nullptr}), ConfigError);
}

TEST(Training, SmoothedMovingAverage) {
  auto s = smoothed({1, 2, 3, 4, 5}, 2);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s.front(), 1.5);
  EXPECT_DOUBLE_EQ(s.back(), 4.5);
}
