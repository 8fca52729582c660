#include "mtgan/training.hpp"

#include "mtgan/error.hpp"
#include "mtgan/serialize.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mtgan {

TrainingConfig TrainingConfig::defaults(int ndim) {
  TrainingConfig c;
  if (ndim == 3) {
    c.batch = 8;
    c.optimizer.lr = 1e-4;
  }
  return c;
}

void TrainingConfig::validate() const {
  if (batch < 1) throw ConfigError("batch: must be >= 1");
  if (iterations < 0) throw ConfigError("iterations: must be >= 0");
  if (disc_steps_per_gen < 1) throw ConfigError("disc_steps_per_gen: must be >= 1");
  if (!(optimizer.lr > 0)) throw ConfigError("lr: must be > 0");
  if (!(optimizer.beta1 >= 0 && optimizer.beta1 < 1)) throw ConfigError("adam_beta1: must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0 && optimizer.beta2 < 1)) throw ConfigError("adam_beta2: must lie in [0, 1)");
  if (!(optimizer.weight_decay >= 0)) throw ConfigError("weight_decay: must be >= 0");
  for (auto [name, v] : {std::pair{"alpha1", weights.alpha1}, std::pair{"alpha2", weights.alpha2},
                         std::pair{"beta1", weights.beta1}, std::pair{"beta2", weights.beta2}})
    if (!(v >= 0)) throw ConfigError(std::string(name) + ": loss weights must be >= 0");
  if (!(kl_weight >= 0)) throw ConfigError("kl_weight: must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every: must be >= 0");
}

bool LossRecord::finite() const {
  for (double v : {disc_texture, disc_pair, disc_latent, generator, encoder, kl})
    if (!std::isfinite(v)) return false;
  return true;
}

StepLosses compute_losses(ModelBundle& bundle, const torch::Tensor& x, const torch::Tensor& x_bar, at::Generator& gen,
                          const TrainingConfig& config) {
  if (x.sizes() != x_bar.sizes()) throw DataError("pair batch members differ in shape");
  const auto& w = config.weights;
  const auto n = x.size(0);
  auto spec = bundle.latent;
  spec.spatial = bundle.latent_side_for(x.size(2));
  auto opts = x.options();
  auto& g = bundle.generator;
  auto coef = g->coef_fn();

  std::vector<std::int64_t> lshape{n, spec.d_local};
  lshape.insert(lshape.end(), static_cast<std::size_t>(spec.ndim), spec.spatial);

  // draw order: prior codes, local noise, phases, reparameterization noise
  auto z = torch::randn({n, spec.d_global}, gen, opts);
  torch::Tensor local, xi;
  if (spec.d_local > 0) local = torch::randn(lshape, gen, opts);
  if (spec.d_periodic > 0) xi = draw_phases(n, spec.d_periodic, gen, opts);
  auto x_prior = g->forward(compose_noise(z, local, xi, spec, coef));

  StepLosses L;
  auto zero = torch::zeros({}, opts);
  if (config.ablation == Ablation::psgan) {
    auto d = bundle.disc_texture->forward(torch::cat({x, x_prior})).chunk(2);
    L.disc_texture = loss_disc_texture(d[0], d[1], {});
    L.generator = w.alpha1 * loss_texture_adv(d[1], {});
    L.disc_pair = L.disc_latent = L.encoder = L.kl = zero;
    return L;
  }

  auto enc = bundle.encoder->forward(x);
  auto eps = torch::randn({n, spec.d_global}, gen, opts);
  ReparamOptions ro;
  ro.clamp_log_sigma = config.clamp_log_sigma;
  auto z_hat = reparameterize(enc.mu, enc.log_sigma, eps, ro);
  auto x_rec = g->forward(compose_noise(z_hat, local, xi, spec, coef));

  auto d = bundle.disc_texture->forward(torch::cat({x, x_prior, x_rec})).chunk(3);

  auto& dp = bundle.disc_pair;
  if (dp->is_training()) dp->power_iterate();
  auto e = dp->embed(torch::cat({x, x_bar, x_rec})).chunk(3);
  auto real_pair = dp->head(e[0], e[1]);
  auto fake_pair = dp->head(e[0], e[2]);

  auto q = bundle.disc_latent->forward(torch::cat({z, z_hat})).chunk(2);

  L.disc_texture = loss_disc_texture(d[0], d[1], d[2]);
  L.disc_pair = loss_disc_pair(real_pair, fake_pair);
  L.disc_latent = loss_disc_latent(q[0], q[1]);
  L.generator = loss_generator(d[1], d[2], fake_pair, w);
  L.kl = kl_regularizer(enc.mu, enc.log_sigma);
  L.encoder = loss_encoder(q[1], fake_pair, w);
  if (config.kl_weight > 0) L.encoder = L.encoder + config.kl_weight * L.kl;
  return L;
}

// ---------------------------------------------------------------------------
// trainer

namespace {

enum Net { kGenerator = 0, kEncoder = 1, kDiscTexture = 2, kDiscPair = 3, kDiscLatent = 4 };

std::vector<torch::Tensor> grads_for(const torch::Tensor& loss, const std::vector<torch::Tensor>& params) {
  auto g = torch::autograd::grad({loss}, params, {}, /*retain_graph=*/true, /*create_graph=*/false,
                                 /*allow_unused=*/true);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g[i].defined()) g[i] = torch::zeros_like(params[i]);
  return g;
}

}  // namespace

Trainer::Trainer(ModelBundle& bundle, TrainingConfig config)
    : bundle_(bundle),
      config_(std::move(config)),
      latent_gen_(make_generator(substream_seed(config_.seed, "latent"))),
      data_rng_(substream_seed(config_.seed, "data")) {
  config_.validate();
  const auto& o = config_.optimizer;
  for (auto& [name, m] : bundle_.modules())
    optims_.push_back(std::make_unique<torch::optim::Adam>(
        m->parameters(), torch::optim::AdamOptions(o.lr).betas({o.beta1, o.beta2}).weight_decay(o.weight_decay)));
}

LossRecord Trainer::step(const PairBatch& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  bundle_.train(true);
  auto mods = bundle_.modules();
  const bool full = config_.ablation == Ablation::full;

  auto update = [&](const std::vector<std::pair<int, torch::Tensor>>& jobs) {
    // every gradient is taken from the same forward pass before any parameter moves
    std::vector<std::vector<torch::Tensor>> grads;
    for (const auto& [net, loss] : jobs) grads.push_back(grads_for(loss, mods[static_cast<std::size_t>(net)].second->parameters()));
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto net = static_cast<std::size_t>(jobs[k].first);
      auto params = mods[net].second->parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i].mutable_grad() = grads[k][i];
      optims_[net]->step();
      for (auto& p : params) p.mutable_grad() = torch::Tensor();
    }
  };

  auto record_of = [&](const StepLosses& L) {
    LossRecord r;
    r.disc_texture = L.disc_texture.item<double>();
    r.disc_pair = L.disc_pair.item<double>();
    r.disc_latent = L.disc_latent.item<double>();
    r.generator = L.generator.item<double>();
    r.encoder = L.encoder.item<double>();
    r.kl = L.kl.item<double>();
    r.iteration = iteration_ + 1;
    if (!r.finite()) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << r.iteration << ": L_d^x=" << r.disc_texture
          << " L_d^xx=" << r.disc_pair << " L_d^z=" << r.disc_latent << " L_g=" << r.generator
          << " L_e=" << r.encoder;
      throw NumericalError(msg.str());
    }
    return r;
  };

  auto disc_jobs = [&](const StepLosses& L) {
    std::vector<std::pair<int, torch::Tensor>> jobs{{kDiscTexture, L.disc_texture}};
    if (full) {
      jobs.emplace_back(kDiscPair, L.disc_pair);
      jobs.emplace_back(kDiscLatent, L.disc_latent);
    }
    return jobs;
  };

  for (std::int64_t k = 1; k < config_.disc_steps_per_gen; ++k) {
    auto L = compute_losses(bundle_, batch.x, batch.x_bar, latent_gen_, config_);
    record_of(L);
    update(disc_jobs(L));
  }

  auto L = compute_losses(bundle_, batch.x, batch.x_bar, latent_gen_, config_);
  auto r = record_of(L);
  auto jobs = disc_jobs(L);
  jobs.emplace_back(kGenerator, L.generator);
  if (full) jobs.emplace_back(kEncoder, L.encoder);
  update(jobs);

  ++iteration_;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

LossRecord Trainer::step(const TextureDataset& dataset) {
  return step(sample_pairs(dataset, config_.batch, data_rng_));
}

void Trainer::save(const std::filesystem::path& path) const {
  torch::serialize::OutputArchive ar;
  Json meta{{"format", kCheckpointFormat},
            {"latent", bundle_.latent},
            {"arch", bundle_.arch},
            {"config", config_},
            {"iteration", iteration_}};
  ar.write("format", c10::IValue(std::string(kCheckpointFormat)));
  ar.write("metadata", c10::IValue(meta.dump()));
  auto mods = const_cast<ModelBundle&>(bundle_).modules();
  for (std::size_t i = 0; i < mods.size(); ++i) {
    torch::serialize::OutputArchive m, o;
    mods[i].second->save(m);
    optims_[i]->save(o);
    ar.write("model_" + mods[i].first, m);
    ar.write("optim_" + mods[i].first, o);
  }
  ar.write("latent_gen_state", latent_gen_.get_state(), /*is_buffer=*/true);
  std::ostringstream rng;
  rng << data_rng_;
  ar.write("data_rng", c10::IValue(rng.str()));
  ar.write("iteration", c10::IValue(iteration_));
  ar.save_to(path.string());
}

namespace {

torch::serialize::InputArchive open_checkpoint(const std::filesystem::path& path, Json& meta) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint " + path.string());
  }
  c10::IValue format, metadata;
  if (!ar.try_read("format", format) || !format.isString() || format.toStringRef() != kCheckpointFormat)
    throw DataError(path.string() + ": not a checkpoint of format " + kCheckpointFormat);
  ar.read("metadata", metadata);
  meta = Json::parse(metadata.toStringRef());
  return ar;
}

void load_modules(torch::serialize::InputArchive& ar, ModelBundle& bundle) {
  for (auto& [name, m] : bundle.modules()) {
    torch::serialize::InputArchive sub;
    ar.read("model_" + name, sub);
    m->load(sub);
  }
}

}  // namespace

void Trainer::load(const std::filesystem::path& path) {
  Json meta;
  auto ar = open_checkpoint(path, meta);
  if (meta.at("latent").get<LatentSpec>() != bundle_.latent)
    throw ConfigError("checkpoint latent spec differs from the bundle being trained");
  load_modules(ar, bundle_);
  auto mods = bundle_.modules();
  for (std::size_t i = 0; i < mods.size(); ++i) {
    torch::serialize::InputArchive o;
    ar.read("optim_" + mods[i].first, o);
    optims_[i]->load(o);
  }
  torch::Tensor state;
  ar.read("latent_gen_state", state, /*is_buffer=*/true);
  latent_gen_.set_state(state);
  c10::IValue rng, it;
  ar.read("data_rng", rng);
  std::istringstream rs(rng.toStringRef());
  rs >> data_rng_;
  ar.read("iteration", it);
  iteration_ = it.toInt();
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  Json meta;
  open_checkpoint(path, meta);
  CheckpointInfo info;
  info.latent = meta.at("latent").get<LatentSpec>();
  info.arch = meta.at("arch").get<ModelArchitectures>();
  info.config = meta.at("config").get<TrainingConfig>();
  info.iteration = meta.at("iteration").get<std::int64_t>();
  return info;
}

ModelBundle load_bundle(const std::filesystem::path& path, CheckpointInfo* info) {
  Json meta;
  auto ar = open_checkpoint(path, meta);
  CheckpointInfo ci;
  ci.latent = meta.at("latent").get<LatentSpec>();
  ci.arch = meta.at("arch").get<ModelArchitectures>();
  ci.config = meta.at("config").get<TrainingConfig>();
  ci.iteration = meta.at("iteration").get<std::int64_t>();
  auto bundle = ModelBundle::build(ci.latent, ci.arch, 0);
  load_modules(ar, bundle);
  bundle.train(false);
  if (info) *info = ci;
  return bundle;
}

// ---------------------------------------------------------------------------
// run loop

std::vector<double> smoothed(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || values.size() < window) return out;
  double s = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s += values[i];
    if (i >= window) s -= values[i - window];
    if (i + 1 >= window) out.push_back(s / static_cast<double>(window));
  }
  return out;
}

void write_metrics_header(const std::filesystem::path& csv) {
  std::ofstream f(csv);
  if (!f) throw DataError("cannot write " + csv.string());
  f << "iteration,disc_texture,disc_pair,disc_latent,generator,encoder,kl,seconds\n";
}

void append_metrics(const std::filesystem::path& csv, const LossRecord& r) {
  std::ofstream f(csv, std::ios::app);
  if (!f) throw DataError("cannot append to " + csv.string());
  f << std::setprecision(17) << r.iteration << ',' << r.disc_texture << ',' << r.disc_pair << ',' << r.disc_latent
    << ',' << r.generator << ',' << r.encoder << ',' << r.kl << ',' << r.seconds << '\n';
}

TrainResult train(ModelBundle& bundle, const TextureDataset& dataset, const TrainingConfig& config,
                  const TrainOptions& options) {
  config.validate();
  dataset.validate(dataset.mode == DatasetMode::raw ? default_window(dataset.crop_size) : 0);
  if (dataset.ndim() != bundle.latent.ndim) throw ConfigError("dataset dimensionality differs from the model");
  bundle.latent_side_for(dataset.crop_size);
  std::filesystem::create_directories(options.output_dir);
  const auto csv = options.output_dir / "metrics.csv";
  auto ckpt = [&](std::int64_t it) {
    std::ostringstream name;
    name << "ckpt_" << std::setw(6) << std::setfill('0') << it << ".pt";
    return options.output_dir / name.str();
  };

  TrainResult result;
  Trainer trainer(bundle, config);
  if (options.resume) {
    trainer.load(*options.resume);
    if (!std::filesystem::exists(csv)) write_metrics_header(csv);
  } else {
    write_metrics_header(csv);
    trainer.save(ckpt(0));
    result.checkpoints.push_back(ckpt(0));
  }
  std::int64_t last_saved = trainer.iteration();
  while (trainer.iteration() < config.iterations) {
    LossRecord r;
    try {
      r = trainer.step(dataset);
    } catch (const NumericalError&) {
      trainer.save(options.output_dir / "ckpt_last_good.pt");
      throw;
    }
    append_metrics(csv, r);
    result.records.push_back(r);
    if (options.on_step) options.on_step(r);
    if (config.checkpoint_every > 0 && trainer.iteration() % config.checkpoint_every == 0) {
      trainer.save(ckpt(trainer.iteration()));
      result.checkpoints.push_back(ckpt(trainer.iteration()));
      last_saved = trainer.iteration();
    }
  }
  if (trainer.iteration() != last_saved) {
    trainer.save(ckpt(trainer.iteration()));
    result.checkpoints.push_back(ckpt(trainer.iteration()));
  }
  return result;
}

}  // namespace mtgan
