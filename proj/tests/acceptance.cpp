// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path-to-cli> [work-dir]

#include "mtgan/analysis.hpp"
#include "mtgan/config.hpp"
#include "mtgan/evaluation.hpp"
#include "mtgan/losses.hpp"
#include "mtgan/morphology.hpp"
#include "mtgan/training.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

using namespace mtgan;
namespace fs = std::filesystem;

namespace {

// desk-scale setup
constexpr std::int64_t kDeskWidth = 16;
constexpr std::int64_t kDeskIterations = 2000;
constexpr std::int64_t kDeskBatch = 16;
constexpr std::int64_t kDeskCrop = 64;
constexpr std::int64_t kDeskTextureSide = 96;
constexpr std::int64_t kDeskPerKind = 1;
constexpr std::uint64_t kDeskSeed = 2024;
constexpr std::int64_t kReconstructionsPerClass = 16;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int g_failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body, double limit_seconds) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs <= limit_seconds, "runtime limit " + std::to_string(limit_seconds) + " s");
  if (!o.pass) ++g_failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << std::setw(2) << id << ": " << title << " ("
            << std::fixed << std::setprecision(1) << secs << " s)" << o.detail.str() << std::endl;
}

std::vector<torch::Tensor> state_of(ModelBundle& b) {
  std::vector<torch::Tensor> out;
  for (auto& [name, m] : b.modules()) {
    for (auto& p : m->parameters()) out.push_back(p.detach().clone());
    for (auto& p : m->buffers()) out.push_back(p.detach().clone());
  }
  return out;
}

bool bitwise_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!torch::equal(a[i], b[i])) return false;
  return true;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

void loss_constants(Outcome& o) {
  const double ln2 = std::log(2.0);
  // direct evaluation on probability maps of 1/2
  auto grid = torch::full({8, 1, 5, 5}, 0.5, torch::kFloat64);
  auto pair = torch::full({8, 1, 5, 10}, 0.5, torch::kFloat64);
  auto z = torch::full({8}, 0.5, torch::kFloat64);
  auto near = [&](double v, double ref) { return std::abs(v - ref) <= 1e-6; };
  o.check(near(loss_disc_texture(grid, grid, grid).item<double>(), 3 * ln2), "L_d^x direct");
  o.check(near(loss_generator(grid, grid, pair).item<double>(), 3 * ln2), "L_g direct");
  o.check(near(loss_disc_latent(z, z).item<double>(), 2 * ln2), "L_d^z direct");
  o.check(near(loss_disc_pair(pair, pair).item<double>(), 2 * ln2), "L_d^xx direct");
  o.check(near(loss_encoder(z, pair).item<double>(), 2 * ln2), "L_e direct");

  // full forward pass with all discriminator weights zero: every output is sigmoid(0) = 1/2
  auto lat = LatentSpec::defaults_2d();
  lat.spatial = 2;
  auto b = ModelBundle::build(lat, ModelArchitectures::reduced(lat, 8), 1);
  {
    torch::NoGradGuard ng;
    for (torch::nn::Module* m : {static_cast<torch::nn::Module*>(b.disc_texture.get()),
                                 static_cast<torch::nn::Module*>(b.disc_pair.get()),
                                 static_cast<torch::nn::Module*>(b.disc_latent.get())})
      for (auto& p : m->parameters()) p.zero_();
  }
  b.train(false);
  auto gen = make_generator(2);
  auto x = torch::rand({4, 3, 64, 64}, gen) * 2 - 1;
  auto l = compute_losses(b, x, x.flip(3), gen, TrainingConfig::defaults(2));
  o.detail << std::setprecision(6) << " network: " << l.disc_texture.item<double>() << " " << l.generator.item<double>() << " "
           << l.disc_latent.item<double>() << " " << l.disc_pair.item<double>() << " " << l.encoder.item<double>();
  o.check(near(l.disc_texture.item<double>(), 3 * ln2), "L_d^x network");
  o.check(near(l.generator.item<double>(), 3 * ln2), "L_g network");
  o.check(near(l.disc_latent.item<double>(), 2 * ln2), "L_d^z network");
  o.check(near(l.disc_pair.item<double>(), 2 * ln2), "L_d^xx network");
  o.check(near(l.encoder.item<double>(), 2 * ln2), "L_e network");
}

void gradient_fidelity(Outcome& o) {
  for (bool kl : {false, true}) {
    auto b = oracle::toy_bundle(11);
    b.to(torch::kFloat64);
    b.train(false);
    for (auto& [name, m] : b.modules())
      if (count_parameters(*m) > 50) o.check(false, name + " has more than 50 parameters");
    auto g = make_generator(12);
    auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    auto x = torch::rand({2, 3, 4, 4}, g, opts) * 2 - 1;
    auto xb = torch::rand({2, 3, 4, 4}, g, opts) * 2 - 1;
    auto cfg = TrainingConfig::defaults(2);
    cfg.kl_weight = kl ? 0.5 : 0.0;
    std::vector<torch::Tensor> params;
    for (auto& [name, m] : b.modules())
      for (auto& p : m->parameters()) params.push_back(p);

    const char* names[] = {"L_d^x", "L_d^xx", "L_d^z", "L_g", "L_e"};
    for (std::size_t k = 0; k < 5; ++k) {
      // fresh forward pass: the finite differences below perturb the parameters in place
      auto gen = make_generator(13);
      auto L = compute_losses(b, x, xb, gen, cfg);
      std::vector<torch::Tensor> losses{L.disc_texture, L.disc_pair, L.disc_latent, L.generator, L.encoder};
      auto analytic = torch::autograd::grad({losses[k]}, params, {}, true, false, true);
      for (std::size_t i = 0; i < analytic.size(); ++i)
        if (!analytic[i].defined()) analytic[i] = torch::zeros_like(params[i]);
      auto numeric = oracle::central_diff(
          [&] {
            auto gg = make_generator(13);
            auto l = compute_losses(b, x, xb, gg, cfg);
            std::vector<torch::Tensor> v{l.disc_texture, l.disc_pair, l.disc_latent, l.generator, l.encoder};
            return v[k].item<double>();
          },
          params);
      const double err = oracle::relative_error(analytic, numeric);
      o.check(err <= 1e-4, std::string(names[k]) + (kl ? " (with KL)" : "") + " rel err " + std::to_string(err));
    }
  }
}

void shape_laws(Outcome& o) {
  torch::NoGradGuard ng;
  auto lat2 = LatentSpec::defaults_2d();
  auto b2 = ModelBundle::build(lat2, ModelArchitectures::standard_2d(lat2), 1);
  b2.train(false);
  auto gen = make_generator(3);
  for (std::int64_t l = 5; l <= 10; ++l) {
    auto out = b2.generator->generate(torch::randn({1, lat2.d_global}, gen), gen, GlobalSource::prior, l);
    o.check(out.size(2) == generator_output_side(2, l) && out.size(3) == generator_output_side(2, l) &&
                generator_output_side(2, l) == 32 * l,
            "2D L=" + std::to_string(l));
  }
  o.check(generator_output_side(2, 5) == 160, "2D anchor 5 -> 160");

  auto lat3 = LatentSpec::defaults_3d();
  auto a3 = ModelArchitectures::standard_3d(lat3);
  auto b3 = ModelBundle::build(lat3, a3, 1);
  b3.train(false);
  for (std::int64_t l : {7, 9}) {
    auto out = b3.generator->generate(torch::randn({1, lat3.d_global}, gen), gen, GlobalSource::prior, l);
    const auto s = generator_output_side(3, l);
    o.check(s == 16 * (l + 3) && out.size(2) == s && out.size(3) == s && out.size(4) == s,
            "3D L=" + std::to_string(l));
  }
  o.check(generator_output_side(3, 7) == 160, "3D anchor 7 -> 160");
  // 448^3 is checked by kernel arithmetic only
  o.check(a3.generator.output_side(25) == 448 && generator_output_side(3, 25) == 448, "3D 25 -> 448");
}

void pair_symmetry(Outcome& o) {
  torch::NoGradGuard ng;
  auto lat = LatentSpec::defaults_2d();
  auto arch = ModelArchitectures::reduced(lat, 16);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    auto d = PairDiscriminator(arch.disc_pair);
    auto g = make_generator(1000 + t);
    init_parameters(*d, g, 0.02 + 0.3 * t / 100.0);
    d->eval();
    const auto side = 64 + 32 * (t % 3);
    auto x = torch::randn({2, 3, side, side}, g), y = torch::randn({2, 3, side, side}, g);
    auto xy = d->forward(x, y), yx = d->forward(y, x);
    const auto w = xy.size(3) / 2;
    exact += torch::equal(xy.narrow(3, 0, w), yx.narrow(3, w, w)) && torch::equal(xy.narrow(3, w, w), yx.narrow(3, 0, w));
  }
  o.check(exact == 100, std::to_string(exact) + "/100 exact in 2D");
  auto lat3 = LatentSpec::defaults_3d();
  auto arch3 = ModelArchitectures::reduced(lat3, 4);
  int exact3 = 0;
  for (int t = 0; t < 5; ++t) {
    auto d = PairDiscriminator(arch3.disc_pair);
    auto g = make_generator(2000 + t);
    init_parameters(*d, g, 0.1);
    d->eval();
    auto x = torch::randn({1, 1, 80, 80, 80}, g), y = torch::randn({1, 1, 80, 80, 80}, g);
    auto xy = d->forward(x, y), yx = d->forward(y, x);
    exact3 += torch::equal(xy.select(1, 0), yx.select(1, 1)) && torch::equal(xy.select(1, 1), yx.select(1, 0));
  }
  o.check(exact3 == 5, std::to_string(exact3) + "/5 exact in 3D");
}

void parameter_accounting(Outcome& o) {
  auto lat = LatentSpec::defaults_2d();
  auto b = ModelBundle::build(lat, ModelArchitectures::standard_2d(lat), 0);
  const auto n = count_parameters(*b.generator) + count_parameters(*b.encoder);
  const double target = 25600.0 * (26 + 336);
  const double rel = std::abs(static_cast<double>(n) - target) / target;
  o.detail << " count=" << n << " rel=" << std::setprecision(4) << rel;
  o.check(lat.channels() == 26, "d = 26");
  o.check(rel <= 0.05, "within 5% of 9,267,200");
  auto r = memory_report(26, 5000);
  o.detail << " ratio=" << r.ratio;
  o.check(r.ours == 9267200, "closed form");
  o.check(r.ratio >= 18 && r.ratio <= 20, "ratio in [18, 20]");
}

// ---------------------------------------------------------------------------
// desk-scale model shared by criteria 6, 10 and 11

struct DeskRun {
  RunConfig config;
  TextureDataset dataset;
  ModelBundle bundle;
  fs::path checkpoint;
  fs::path config_file;
  std::vector<double> disc_texture_losses;
  bool trained = false;
};

DeskRun g_desk;

RunConfig desk_config(const fs::path& out) {
  std::ostringstream s;
  s << "architecture = reduced\n"
    << "width = " << kDeskWidth << "\n"
    << "latent_spatial = " << kDeskCrop / 32 << "\n"
    << "batch = " << kDeskBatch << "\n"
    << "iterations = " << kDeskIterations << "\n"
    << "seed = " << kDeskSeed << "\n"
    << "dataset = procedural\n"
    << "procedural_size = " << kDeskTextureSide << "\n"
    << "procedural_count = " << kDeskPerKind << "\n"
    << "output_dir = " << out.string() << "\n";
  return parse_run_config(s.str());
}

void desk_training(Outcome& o, const fs::path& work) {
  auto& d = g_desk;
  d.config = desk_config(work / "desk");
  d.config_file = work / "desk.cfg";
  std::ofstream(d.config_file) << format_run_config(d.config);
  d.dataset = load_dataset(d.config, substream_seed(kDeskSeed, "procedural"));
  o.check(d.dataset.num_classes() == 8, "8 texture kinds");
  d.bundle = ModelBundle::build(d.config.latent, d.config.architectures(), substream_seed(kDeskSeed, "init"));
  TrainOptions opts;
  opts.output_dir = d.config.output_dir;
  opts.on_step = [&](const LossRecord& r) { d.disc_texture_losses.push_back(r.disc_texture); };
  auto res = train(d.bundle, d.dataset, d.config.training, opts);
  d.checkpoint = res.checkpoints.back();
  d.trained = true;
  d.bundle.train(false);

  // (a) smoothed texture-discriminator loss
  const auto& v = d.disc_texture_losses;
  const std::size_t w = 200;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < w; ++i) {
    first += v[i] / w;
    last += v[v.size() - w + i] / w;
  }
  o.detail << " L_dx first=" << std::setprecision(3) << first << " last=" << last;
  o.check(last < first, "(a) smoothed L_d^x decreases");

  // (b) classifier accuracy on conditional reconstructions
  ClassifierConfig cc;
  cc.seed = substream_seed(kDeskSeed, "classifier");
  auto cr = train_classifier(d.dataset, classifier_tower(d.bundle.arch.disc_texture, 8), cc);
  o.detail << " classifier=" << cr.train_accuracy << "@" << cr.steps;
  o.check(cr.reached_full_accuracy, "classifier reaches 100% train accuracy");
  HostRng rng(substream_seed(kDeskSeed, "crops"));
  std::vector<torch::Tensor> xs;
  std::vector<std::int64_t> ys;
  for (std::int64_t c = 0; c < 8; ++c) {
    auto idx = d.dataset.sources_with_label(c);
    for (std::int64_t i = 0; i < kReconstructionsPerClass; ++i) {
      xs.push_back(random_crop(d.dataset.sources[idx[static_cast<std::size_t>(i) % idx.size()]].data, kDeskCrop, rng));
      ys.push_back(c);
    }
  }
  auto gen = make_generator(substream_seed(kDeskSeed, "reconstruct"));
  auto rec = reconstruct(d.bundle, torch::stack(xs), gen);
  const double acc = accuracy(cr.classifier, rec, torch::tensor(ys));
  o.detail << " rec_acc=" << acc;
  o.check(acc >= 0.75, "(b) reconstruction accuracy >= 0.75");

  // (c) coverage
  auto cov = coverage_histogram(cr.classifier, rec);
  o.detail << " coverage=[";
  for (std::size_t i = 0; i < cov.counts.size(); ++i) o.detail << (i ? "," : "") << cov.counts[i];
  o.detail << "]";
  o.check(cov.empty_classes.empty(), "(c) no empty class");
}

void inception_identities(Outcome& o) {
  o.check(std::abs(inception_score(torch::full({16, 8}, 1.0 / 8, torch::kFloat64)) - 1.0) <= 1e-9, "uniform rows");
  for (std::int64_t c : {2, 8, 116})
    o.check(std::abs(inception_score(torch::eye(c, torch::kFloat64)) - double(c)) <= 1e-9,
            "one-hot C=" + std::to_string(c));
  auto p = torch::tensor({{0.8, 0.2}, {0.2, 0.8}}, torch::kFloat64);
  o.check(std::abs(inception_score(p) - std::exp(0.192745)) <= 1e-6, "hand case");
}

void kl_pipeline(Outcome& o) {
  StatisticSample a{"s", {0.3, 1.7, 2.2, 5.0, 5.5, 9.1}};
  o.check(histogram_kl(a, a) == 0.0, "KL(A, A) = 0");
  StatisticSample r{"s", {0, 0, 1, 1}}, s{"s", {0, 1, 1, 1}};
  o.check(std::abs(histogram_kl(r, s, 2) - 0.14384) <= 1e-5, "2-bin hand case");
  StatisticSample c{"s", {4, 4, 4, 4, 4}};
  o.check(bootstrap_std(c, c).std == 0.0, "constant samples std 0");
  o.check(kDefaultBins == 50 && kDefaultResamples == 1000, "defaults 50 bins / 1000 resamples");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n1(0, 1), n2(0.4, 1.3);
  StatisticSample x{"s", {}}, y{"s", {}};
  for (int i = 0; i < 300; ++i) {
    x.values.push_back(n1(rng));
    y.values.push_back(n2(rng));
  }
  auto b1 = bootstrap_std(x, y, kDefaultBins, kDefaultResamples, 7), b2 = bootstrap_std(x, y, kDefaultBins, kDefaultResamples, 7);
  o.check(b1.std == b2.std && b1.std > 0, "bootstrap deterministic under a seed");
}

void morphology_oracles(Outcome& o) {
  VoxelGrid one(1, 1, 1);
  one.data = {1};
  auto c = cell_counts(one);
  o.check(c.n0 == 8 && c.n1 == 12 && c.n2 == 6 && c.n3 == 1, "single voxel counts");
  o.check(minkowski(one).euler == 1, "single voxel euler");
  VoxelGrid cube(2, 2, 2);
  cube.data.assign(8, 1);
  o.check(minkowski(cube).surface_area == 24 && minkowski(cube).euler == 1, "2x2x2 cube");
  VoxelGrid hollow(3, 3, 3);
  hollow.data.assign(27, 1);
  hollow.at(1, 1, 1) = 0;
  o.check(minkowski(hollow).euler == 2, "3^3 minus center");
  for (std::int64_t p = 1; p <= 4; ++p)
    for (std::int64_t q = 1; q <= 4; ++q)
      for (std::int64_t r = 1; r <= 4; ++r) {
        VoxelGrid b(p, q, r);
        b.data.assign(static_cast<std::size_t>(p * q * r), 1);
        o.check(minkowski(b).surface_area == double(2 * (p * q + q * r + r * p)), "box surface");
      }
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> side(1, 12);
  std::uniform_real_distribution<double> u(0, 1);
  int agree = 0;
  for (int t = 0; t < 200; ++t) {
    VoxelGrid g(side(rng), side(rng), side(rng));
    const double fill = u(rng);
    for (auto& v : g.data) v = u(rng) < fill;
    agree += cell_counts(g) == cell_counts_bruteforce(g);
  }
  o.check(agree == 200, std::to_string(agree) + "/200 random grids agree with brute force");
}

void detection(Outcome& o) {
  auto field = torch::zeros({2, 1, 2}, torch::kFloat64);
  field[0][0][1] = 1.0;
  auto h = heatmap_from_embeddings(field, torch::zeros({2}, torch::kFloat64), 3.0);
  o.check(h[0][0].item<double>() == 1.0, "value 1 at zero distance");
  o.check(std::abs(h[0][1].item<double>() - std::exp(-3.0)) <= 1e-12, "e^-3 at distance 1");

  if (!g_desk.trained) {
    o.check(false, "desk-scale model unavailable");
    return;
  }
  // composite: left half first kind, right half last kind
  auto kinds = desk_texture_kinds();
  HostRng rng(substream_seed(kDeskSeed, "composite"));
  const std::int64_t H = 128, W = 256;
  auto left = render_texture(kinds.front(), H, rng);
  auto right = render_texture(kinds.back(), H, rng);
  auto image = torch::cat({left, right}, 2);
  o.check(image.size(2) == W, "composite width");
  auto inside_outside = [&](const PatchRect& patch, bool left_region) {
    auto r = detect(g_desk.bundle, image, patch, DetectionConfig{}, kDeskCrop);
    auto lh = r.heatmap.narrow(1, 0, W / 2).mean().item<double>();
    auto rh = r.heatmap.narrow(1, W / 2, W / 2).mean().item<double>();
    return left_region ? std::make_pair(lh, rh) : std::make_pair(rh, lh);
  };
  auto [in_l, out_l] = inside_outside({32, 32, 64, 64}, true);
  auto [in_r, out_r] = inside_outside({W / 2 + 32, 32, 64, 64}, false);
  o.detail << std::setprecision(3) << " left patch in/out=" << in_l << "/" << out_l << " right patch in/out=" << in_r
           << "/" << out_r;
  o.check(in_l > out_l, "left patch localizes its region");
  o.check(in_r > out_r, "right patch localizes its region");
}

void determinism(Outcome& o, const fs::path& cli, const fs::path& work) {
  // 10 training steps, twice
  auto lat = LatentSpec::defaults_2d();
  lat.spatial = 2;
  auto arch = ModelArchitectures::reduced(lat, 8);
  HostRng drng(1);
  auto ds = procedural_textures(desk_texture_kinds(), 80, 1, drng);
  ds.crop_size = 64;
  auto cfg = TrainingConfig::defaults(2);
  cfg.batch = 4;
  cfg.seed = 77;
  auto run = [&](std::vector<double>& losses) {
    auto b = ModelBundle::build(lat, arch, 5);
    Trainer t(b, cfg);
    for (int i = 0; i < 10; ++i) {
      auto r = t.step(ds);
      losses.insert(losses.end(), {r.disc_texture, r.disc_pair, r.disc_latent, r.generator, r.encoder});
    }
    return state_of(b);
  };
  std::vector<double> l1, l2;
  auto s1 = run(l1), s2 = run(l2);
  o.check(bitwise_equal(s1, s2) && l1 == l2, "10 training steps reproduce bitwise");

  // checkpoint round trip
  {
    auto b = ModelBundle::build(lat, arch, 5);
    Trainer t(b, cfg);
    for (int i = 0; i < 3; ++i) t.step(ds);
    fs::create_directories(work);
    t.save(work / "roundtrip.pt");
    auto loaded = load_bundle(work / "roundtrip.pt");
    o.check(bitwise_equal(state_of(b), state_of(loaded)), "checkpoint round trip exact");
    // resumed training continues identically
    auto b2 = ModelBundle::build(lat, arch, 99);
    Trainer t2(b2, cfg);
    t2.load(work / "roundtrip.pt");
    t.step(ds);
    t2.step(ds);
    o.check(bitwise_equal(state_of(b), state_of(b2)), "resume continues bitwise");
  }

  // CLI sampling outputs
  if (!g_desk.trained) {
    o.check(false, "desk-scale checkpoint unavailable for CLI runs");
    return;
  }
  auto input = work / "input.png";
  {
    HostRng r(3);
    write_png(random_crop(g_desk.dataset.sources[0].data, kDeskCrop, r), input);
    auto kinds = desk_texture_kinds();
    write_png(torch::cat({render_texture(kinds[1], 96, r), render_texture(kinds[4], 96, r)}, 2), work / "wide.png");
  }
  const std::string ck = g_desk.checkpoint.string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"sample --n 6", {"sample_0000.png", "sample_0005.png", "samples.png"}},
      {"reconstruct --input " + input.string(), {"reconstruction_0000.png"}},
      {"manifold --lo -1 --hi 1 --step 0.5", {"manifold.png"}},
      {"texturemap --image " + (work / "wide.png").string(), {"texturemap.png"}},
      {"detect --image " + (work / "wide.png").string() + " --patch 10,10,40,40", {"heatmap.png", "heatmap_grid.vox"}},
  };
  for (const auto& [args, files] : commands) {
    std::vector<fs::path> outs;
    for (int rep = 0; rep < 2; ++rep) {
      auto out = work / ("cli_" + std::to_string(&args - &commands[0].first) + "_" + std::to_string(rep));
      fs::remove_all(out);
      outs.push_back(out);
      const auto sub = args.substr(0, args.find(' '));
      const std::string cmd = cli.string() + " " + sub + " --checkpoint " + ck + " --seed 123 --out " + out.string() +
                              args.substr(sub.size()) + " > /dev/null";
      const int rc = std::system(cmd.c_str());
      o.check(rc == 0, "CLI exit code for `" + sub + "`");
    }
    for (const auto& f : files) {
      const auto a = read_bytes(outs[0] / f), b = read_bytes(outs[1] / f);
      o.check(!a.empty() && a == b, "CLI output " + f + " reproduces bitwise");
    }
    o.check(fs::exists(outs[0] / "run_manifest.json"), "run manifest written");
  }
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  if (argc < 2) {
    std::cerr << "usage: acceptance <cli-binary> [work-dir]\n";
    return 2;
  }
  const fs::path cli = fs::absolute(argv[1]);
  const fs::path work = fs::absolute(argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "mtgan_acceptance");
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "loss constants at D = 1/2", loss_constants, 1.0);
  report(2, "gradient fidelity on toy networks", gradient_fidelity, 30.0);
  report(3, "generator shape laws", shape_laws, 120.0);
  report(4, "pair-discriminator symmetry", pair_symmetry, 60.0);
  report(5, "parameter accounting and memory ratio", parameter_accounting, 5.0);
  report(6, "desk-scale training", [&](Outcome& o) { desk_training(o, work); }, 1800.0);
  report(7, "inception score identities", inception_identities, 1.0);
  report(8, "histogram KL and bootstrap", kl_pipeline, 10.0);
  report(9, "morphology oracles", morphology_oracles, 120.0);
  report(10, "detection heatmap", detection, 300.0);
  report(11, "determinism", [&](Outcome& o) { determinism(o, cli, work / "determinism"); }, 300.0);

  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
