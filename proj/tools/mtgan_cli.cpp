#include "mtgan/analysis.hpp"
#include "mtgan/config.hpp"
#include "mtgan/error.hpp"
#include "mtgan/evaluation.hpp"
#include "mtgan/io.hpp"
#include "mtgan/morphology.hpp"
#include "mtgan/serialize.hpp"
#include "mtgan/training.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef MTGAN_VERSION
#define MTGAN_VERSION "0.0.0"
#endif

using namespace mtgan;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read input " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

/// Provenance record written to `<out>/run_manifest.json` before any output.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  Json config = Json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::vector<std::string> substreams;

  void write(const fs::path& out_dir, const std::vector<std::string>& argv) const {
    fs::create_directories(out_dir);
    Json j;
    j["tool"] = "mtgan";
    j["version"] = MTGAN_VERSION;
    j["command"] = command;
    j["argv"] = argv;
    j["seed"] = seed;
    Json subs = Json::object();
    for (const auto& s : substreams) subs[s] = substream_seed(seed, s);
    j["substream_seeds"] = subs;
    j["config"] = config;
    Json ins = Json::array();
    for (const auto& p : inputs) ins.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    j["inputs"] = ins;
    Json outs = Json::array();
    for (const auto& p : outputs) outs.push_back(p.string());
    j["outputs"] = outs;
    std::ofstream f(out_dir / "run_manifest.json");
    if (!f) throw DataError("cannot write " + (out_dir / "run_manifest.json").string());
    f << j.dump(2) << "\n";
  }
};

std::vector<std::string> g_argv;

fs::path numbered(const fs::path& dir, const std::string& stem, std::int64_t i, const std::string& ext) {
  std::ostringstream s;
  s << stem << "_" << std::setw(4) << std::setfill('0') << i << ext;
  return dir / s.str();
}

void save_sample(const torch::Tensor& t, const fs::path& path) {
  if (t.dim() == 3)
    write_png(t, path);
  else
    write_voxels(tensor_to_voxels(t), path);
}

std::string sample_ext(int ndim) { return ndim == 2 ? ".png" : ".vox"; }

torch::Tensor load_input(const fs::path& p) {
  if (p.extension() == ".vox") return voxels_to_tensor(read_voxels(p));
  return read_png(p);
}

Json checkpoint_json(const CheckpointInfo& info) {
  return Json{{"latent", info.latent}, {"arch", info.arch}, {"training", info.config}, {"iteration", info.iteration}};
}

// ---------------------------------------------------------------------------
// subcommands

struct TrainArgs {
  fs::path config;
  std::vector<std::string> sets;
  std::optional<fs::path> resume;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<int> ndim;
};

int run_train(const TrainArgs& a) {
  std::map<std::string, std::string> overrides;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got `" + s + "`");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (a.seed) overrides["seed"] = std::to_string(*a.seed);
  if (a.ndim) overrides["ndim"] = std::to_string(*a.ndim);
  if (a.out) overrides["output_dir"] = a.out->string();
  auto cfg = read_run_config(a.config, overrides);
  const auto seed = cfg.training.seed;

  RunManifest m;
  m.command = "train";
  m.seed = seed;
  m.config = {{"text", format_run_config(cfg)}, {"training", cfg.training}, {"latent", cfg.latent}};
  m.substreams = {"init", "latent", "data", "procedural"};
  m.inputs.push_back(a.config);
  if (cfg.dataset != "procedural") m.inputs.push_back(cfg.dataset);
  if (a.resume) m.inputs.push_back(*a.resume);
  m.outputs = {cfg.output_dir / "metrics.csv", cfg.output_dir / "config.txt", cfg.output_dir / "ckpt_<iteration>.pt"};
  m.write(cfg.output_dir, g_argv);

  auto dataset = load_dataset(cfg, substream_seed(seed, "procedural"));
  auto bundle = ModelBundle::build(cfg.latent, cfg.architectures(), substream_seed(seed, "init"));
  std::ofstream(cfg.output_dir / "config.txt") << format_run_config(cfg);
  TrainOptions opts;
  opts.output_dir = cfg.output_dir;
  opts.resume = a.resume;
  opts.on_step = [](const LossRecord& r) {
    if (r.iteration % 100 == 0)
      std::cerr << "iter " << r.iteration << " L_dx " << r.disc_texture << " L_dxx " << r.disc_pair << " L_dz "
                << r.disc_latent << " L_g " << r.generator << " L_e " << r.encoder << "\n";
  };
  auto res = train(bundle, dataset, cfg.training, opts);
  std::cout << "trained " << res.records.size() << " iterations; last checkpoint "
            << (res.checkpoints.empty() ? std::string("-") : res.checkpoints.back().string()) << "\n";
  return kExitOk;
}

struct ModelArgs {
  fs::path checkpoint;
  std::uint64_t seed = 0;
  fs::path out = "out";
};

int run_sample(const ModelArgs& a, std::int64_t n, std::int64_t size) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  if (size <= 0) size = bundle.arch.generator.output_side(bundle.latent.spatial);
  bundle.latent_side_for(size);
  if (n < 1) throw ConfigError("--n must be >= 1");
  RunManifest m;
  m.command = "sample";
  m.seed = a.seed;
  m.config = {{"n", n}, {"size", size}, {"checkpoint", checkpoint_json(info)}};
  m.substreams = {"sample"};
  m.inputs = {a.checkpoint};
  const auto ext = sample_ext(bundle.latent.ndim);
  for (std::int64_t i = 0; i < n; ++i) m.outputs.push_back(numbered(a.out, "sample", i, ext));
  if (bundle.latent.ndim == 2) m.outputs.push_back(a.out / "samples.png");
  m.write(a.out, g_argv);

  auto gen = make_generator(substream_seed(a.seed, "sample"));
  auto s = sample_images(bundle, n, size, gen);
  for (std::int64_t i = 0; i < n; ++i) save_sample(s[i], numbered(a.out, "sample", i, ext));
  if (bundle.latent.ndim == 2)
    write_png(tile_images(s, std::min<std::int64_t>(n, 8)), a.out / "samples.png");
  std::cout << "wrote " << n << " samples to " << a.out << "\n";
  return kExitOk;
}

int run_reconstruct(const ModelArgs& a, const std::vector<fs::path>& inputs, bool zero_sigma) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  if (inputs.empty()) throw ConfigError("--input: at least one file is required");
  RunManifest m;
  m.command = "reconstruct";
  m.seed = a.seed;
  m.config = {{"zero_sigma", zero_sigma}, {"checkpoint", checkpoint_json(info)}};
  m.substreams = {"reconstruct"};
  m.inputs = {a.checkpoint};
  m.inputs.insert(m.inputs.end(), inputs.begin(), inputs.end());
  const auto ext = sample_ext(bundle.latent.ndim);
  for (std::size_t i = 0; i < inputs.size(); ++i) m.outputs.push_back(numbered(a.out, "reconstruction", i, ext));
  m.write(a.out, g_argv);

  auto gen = make_generator(substream_seed(a.seed, "reconstruct"));
  ReconstructOptions ro;
  ro.zero_sigma = zero_sigma;
  ro.clamp_log_sigma = info.config.clamp_log_sigma;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto x = load_input(inputs[i]);
    if (x.dim() - 1 != bundle.latent.ndim) throw DataError(inputs[i].string() + ": dimensionality differs from the model");
    bundle.latent_side_for(x.size(1));
    auto r = reconstruct(bundle, x.unsqueeze(0), gen, ro);
    save_sample(r[0], numbered(a.out, "reconstruction", static_cast<std::int64_t>(i), ext));
  }
  std::cout << "wrote " << inputs.size() << " reconstructions to " << a.out << "\n";
  return kExitOk;
}

int run_manifold(const ModelArgs& a, double lo, double hi, double step, std::int64_t size) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  if (bundle.latent.ndim != 2) throw ConfigError("manifold grids are defined for 2D models");
  const auto n = manifold_points(lo, hi, step);
  RunManifest m;
  m.command = "manifold";
  m.seed = a.seed;
  m.config = {{"lo", lo}, {"hi", hi}, {"step", step}, {"points", n}, {"size", size}, {"checkpoint", checkpoint_json(info)}};
  m.substreams = {"manifold"};
  m.inputs = {a.checkpoint};
  m.outputs = {a.out / "manifold.png", a.out / "manifold_axis.json"};
  m.write(a.out, g_argv);

  auto grid = manifold_grid(bundle, lo, hi, step, substream_seed(a.seed, "manifold"), size);
  write_png(grid.sheet, a.out / "manifold.png");
  std::ofstream(a.out / "manifold_axis.json") << Json(grid.axis).dump() << "\n";
  std::cout << "wrote " << n << "x" << n << " manifold grid to " << (a.out / "manifold.png") << "\n";
  return kExitOk;
}

PatchRect parse_patch(const std::string& s) {
  PatchRect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(s);
  if (!(in >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h) || c1 != ',' || c2 != ',' || c3 != ',' || !in.eof())
    throw ConfigError("--patch: expected x,y,w,h, got `" + s + "`");
  return r;
}

int run_detect(const ModelArgs& a, const fs::path& image_path, const std::string& patch, const DetectionConfig& dc,
               std::int64_t crop) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  if (bundle.latent.ndim != 2) throw ConfigError("detection is defined for 2D models");
  const auto rect = parse_patch(patch);
  dc.validate();
  if (crop <= 0) crop = bundle.arch.generator.output_side(bundle.latent.spatial);
  RunManifest m;
  m.command = "detect";
  m.seed = a.seed;
  m.config = {{"patch", {rect.x, rect.y, rect.w, rect.h}}, {"alpha", dc.alpha}, {"pool_kernel", dc.pool_for(bundle)},
              {"crop", crop}, {"checkpoint", checkpoint_json(info)}};
  m.inputs = {a.checkpoint, image_path};
  m.outputs = {a.out / "heatmap.png", a.out / "heatmap_grid.vox"};
  m.write(a.out, g_argv);

  auto image = read_png(image_path);
  auto r = detect(bundle, image, rect, dc, crop);
  write_png_gray01(r.heatmap, a.out / "heatmap.png");
  write_float_array(r.grid.to(torch::kFloat32), a.out / "heatmap_grid.vox");
  std::cout << "heatmap max " << r.grid.max().item<double>() << " written to " << (a.out / "heatmap.png") << "\n";
  return kExitOk;
}

int run_texturemap(const ModelArgs& a, const fs::path& image_path, const DetectionConfig& dc) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  if (bundle.latent.ndim != 2) throw ConfigError("texture maps are defined for 2D models");
  dc.validate();
  RunManifest m;
  m.command = "texturemap";
  m.seed = a.seed;
  m.config = {{"pool_kernel", dc.pool_for(bundle)}, {"checkpoint", checkpoint_json(info)}};
  m.substreams = {"texturemap"};
  m.inputs = {a.checkpoint, image_path};
  m.outputs = {a.out / "texturemap.png"};
  m.write(a.out, g_argv);

  auto image = read_png(image_path);
  auto gen = make_generator(substream_seed(a.seed, "texturemap"));
  auto out = texture_map(bundle, image, dc, gen);
  write_png(out[0], a.out / "texturemap.png");
  std::cout << "wrote " << (a.out / "texturemap.png") << "\n";
  return kExitOk;
}

int run_evaluate(const ModelArgs& a, const fs::path& config_path, std::int64_t n, std::int64_t per_class) {
  CheckpointInfo info;
  auto bundle = load_bundle(a.checkpoint, &info);
  auto cfg = read_run_config(config_path);
  if (cfg.latent != bundle.latent) throw ConfigError("config latent spec differs from the checkpoint");
  if (n < 1 || per_class < 1) throw ConfigError("--n and --per-class must be >= 1");
  RunManifest m;
  m.command = "evaluate";
  m.seed = a.seed;
  m.config = {{"n", n}, {"per_class", per_class}, {"run_config", format_run_config(cfg)},
              {"checkpoint", checkpoint_json(info)}};
  m.substreams = {"classifier", "evaluate", "crops", "procedural"};
  m.inputs = {a.checkpoint, config_path};
  if (cfg.dataset != "procedural") m.inputs.push_back(cfg.dataset);
  m.outputs = {a.out / "evaluation.json", a.out / "coverage_prior.png", a.out / "coverage_reconstruction.png"};
  m.write(a.out, g_argv);

  auto dataset = load_dataset(cfg, substream_seed(cfg.training.seed, "procedural"));
  if (dataset.mode != DatasetMode::labeled) throw DataError("evaluation needs a labeled dataset");
  ClassifierConfig cc;
  cc.seed = substream_seed(a.seed, "classifier");
  auto cr = train_classifier(dataset, classifier_tower(bundle.arch.disc_texture, dataset.num_classes()), cc);
  if (!cr.reached_full_accuracy)
    std::cerr << "warning: classifier reached " << cr.train_accuracy << " train accuracy after " << cr.steps
              << " steps\n";

  auto gen = make_generator(substream_seed(a.seed, "evaluate"));
  auto prior = sample_images(bundle, n, dataset.crop_size, gen);
  auto probs = predict_probs(cr.classifier, prior);
  const double is = inception_score(probs);
  auto cov_prior = coverage_from_labels(probs.argmax(1), dataset.num_classes());

  HostRng crops(substream_seed(a.seed, "crops"));
  std::vector<torch::Tensor> xs;
  std::vector<std::int64_t> ys;
  for (std::int64_t c = 0; c < dataset.num_classes(); ++c) {
    auto idx = dataset.sources_with_label(c);
    for (std::int64_t i = 0; i < per_class; ++i) {
      xs.push_back(random_crop(dataset.sources[idx[static_cast<std::size_t>(i) % idx.size()]].data, dataset.crop_size, crops));
      ys.push_back(c);
    }
  }
  auto rec = reconstruct(bundle, torch::stack(xs), gen);
  auto labels = torch::tensor(ys);
  const double rec_acc = accuracy(cr.classifier, rec, labels);
  auto cov_rec = coverage_histogram(cr.classifier, rec);

  Json j{{"inception_score", is},
         {"classifier_train_accuracy", cr.train_accuracy},
         {"classifier_steps", cr.steps},
         {"reconstruction_accuracy", rec_acc},
         {"coverage_prior", cov_prior.counts},
         {"empty_classes_prior", cov_prior.empty_classes},
         {"coverage_reconstruction", cov_rec.counts},
         {"empty_classes_reconstruction", cov_rec.empty_classes},
         {"class_names", dataset.class_names}};
  std::ofstream(a.out / "evaluation.json") << j.dump(2) << "\n";
  write_bar_chart(cov_prior.counts, a.out / "coverage_prior.png");
  write_bar_chart(cov_rec.counts, a.out / "coverage_reconstruction.png");
  std::cout << "IS " << is << " reconstruction accuracy " << rec_acc << "\n";
  return kExitOk;
}

std::map<std::string, std::vector<double>> read_columns(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(csv.string() + ": empty file");
  std::vector<std::string> names;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) names.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream r(line);
    std::string cell;
    for (const auto& name : names) {
      if (!std::getline(r, cell, ',')) throw DataError(csv.string() + ": short row " + std::to_string(row));
      try {
        cols[name].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(csv.string() + ": row " + std::to_string(row) + " column " + name + " is not a number");
      }
    }
  }
  return cols;
}

struct Analyze3dArgs {
  std::vector<fs::path> real;
  std::vector<fs::path> synth;
  std::vector<std::string> stats{"surface_area", "euler"};
  std::optional<fs::path> external_real;
  std::optional<fs::path> external_synth;
  std::int64_t bins = kDefaultBins;
  std::int64_t resamples = kDefaultResamples;
  std::uint64_t seed = 0;
  fs::path out = "out";
};

int run_analyze3d(const Analyze3dArgs& a) {
  if (a.real.size() < 2 || a.synth.size() < 2) throw ConfigError("analyze3d needs at least two real and two synthetic volumes");
  if (a.bins < 2 || a.resamples < 1) throw ConfigError("--bins must be >= 2 and --resamples >= 1");
  RunManifest m;
  m.command = "analyze3d";
  m.seed = a.seed;
  m.config = {{"stats", a.stats}, {"bins", a.bins}, {"resamples", a.resamples}};
  m.substreams = {"bootstrap"};
  m.inputs = a.real;
  m.inputs.insert(m.inputs.end(), a.synth.begin(), a.synth.end());
  if (a.external_real) m.inputs.push_back(*a.external_real);
  if (a.external_synth) m.inputs.push_back(*a.external_synth);
  m.outputs = {a.out / "morphology_real.csv", a.out / "morphology_synth.csv", a.out / "kl.json"};
  m.write(a.out, g_argv);

  auto measure = [](const std::vector<fs::path>& paths, std::vector<VoxelGrid>& grids) {
    std::vector<Minkowski> rows;
    for (const auto& p : paths) {
      grids.push_back(read_voxels(p));
      rows.push_back(minkowski(grids.back()));
    }
    return rows;
  };
  std::vector<VoxelGrid> real_grids, synth_grids;
  auto real_rows = measure(a.real, real_grids);
  auto synth_rows = measure(a.synth, synth_grids);
  std::map<std::string, std::vector<double>> ext_real, ext_synth;
  if (a.external_real) ext_real = read_columns(*a.external_real);
  if (a.external_synth) ext_synth = read_columns(*a.external_synth);
  auto str = [](const std::vector<fs::path>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.string());
    return out;
  };
  auto perm = [](const std::map<std::string, std::vector<double>>& e) {
    auto it = e.find("permeability");
    return it == e.end() ? std::vector<double>{} : it->second;
  };
  write_morphology_csv(str(a.real), real_rows, a.out / "morphology_real.csv", perm(ext_real));
  write_morphology_csv(str(a.synth), synth_rows, a.out / "morphology_synth.csv", perm(ext_synth));

  auto real_stats = batch_statistics(real_grids, a.stats, ext_real);
  auto synth_stats = batch_statistics(synth_grids, a.stats, ext_synth);
  Json j = Json::object();
  for (std::size_t i = 0; i < a.stats.size(); ++i) {
    auto r = bootstrap_std(real_stats[i], synth_stats[i], a.bins, a.resamples,
                           substream_seed(a.seed, "bootstrap") + i);
    j[a.stats[i]] = {{"kl", r.kl}, {"std", r.std}};
    std::cout << a.stats[i] << ": KL " << std::fixed << std::setprecision(2) << r.kl << " +- " << r.std << "\n";
  }
  std::ofstream(a.out / "kl.json") << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  g_argv.assign(argv, argv + argc);
  CLI::App app{"Multi-texture GAN: training, sampling and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MTGAN_VERSION);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train the five networks from a run config");
  train_cmd->add_option("--config", ta.config, "run config file (key = value)")->required();
  train_cmd->add_option("--set", ta.sets, "override a config key (key=value), repeatable");
  train_cmd->add_option("--resume", ta.resume, "continue from a checkpoint");
  train_cmd->add_option("--seed", ta.seed, "run seed (overrides the config)");
  train_cmd->add_option("--out", ta.out, "output directory (overrides the config)");
  train_cmd->add_option("--ndim", ta.ndim, "2 or 3 (overrides the config)");

  ModelArgs ma;
  auto add_model = [&](CLI::App* c) {
    c->add_option("--checkpoint", ma.checkpoint, "checkpoint file")->required();
    c->add_option("--seed", ma.seed, "seed; split into named substreams");
    c->add_option("--out", ma.out, "output directory");
  };

  std::int64_t n = 16, size = 0;
  auto* sample_cmd = app.add_subcommand("sample", "draw prior samples");
  add_model(sample_cmd);
  sample_cmd->add_option("--n", n, "number of samples");
  sample_cmd->add_option("--size", size, "output side (default: the training crop)");

  std::vector<fs::path> inputs;
  bool zero_sigma = false;
  auto* rec_cmd = app.add_subcommand("reconstruct", "encode textures and regenerate them");
  add_model(rec_cmd);
  rec_cmd->add_option("--input", inputs, "PNG or .vox inputs")->required();
  rec_cmd->add_flag("--zero-sigma", zero_sigma, "use the encoder mean instead of sampling");

  double lo = -1.0, hi = 1.0, step = 0.1;
  auto* man_cmd = app.add_subcommand("manifold", "texture manifold grid over a 2D global code");
  add_model(man_cmd);
  man_cmd->add_option("--lo", lo);
  man_cmd->add_option("--hi", hi);
  man_cmd->add_option("--step", step);
  man_cmd->add_option("--size", size, "tile side (default: the training crop)");

  fs::path image;
  std::string patch;
  DetectionConfig dc;
  std::int64_t crop = 0;
  auto* det_cmd = app.add_subcommand("detect", "heatmap of texture similarity to a patch");
  add_model(det_cmd);
  det_cmd->add_option("--image", image, "PNG image")->required();
  det_cmd->add_option("--patch", patch, "x,y,w,h")->required();
  det_cmd->add_option("--alpha", dc.alpha);
  det_cmd->add_option("--pool", dc.pool_kernel, "spatial pooling kernel (default: the training latent side)");
  det_cmd->add_option("--crop", crop, "encoder input side for padded patches (default: the training crop)");

  auto* tm_cmd = app.add_subcommand("texturemap", "re-synthesize an image through spatial embeddings");
  add_model(tm_cmd);
  tm_cmd->add_option("--image", image, "PNG image")->required();
  tm_cmd->add_option("--pool", dc.pool_kernel, "spatial pooling kernel (default: the training latent side)");

  fs::path eval_config;
  std::int64_t per_class = 16;
  auto* eval_cmd = app.add_subcommand("evaluate", "inception score and dataset coverage");
  add_model(eval_cmd);
  eval_cmd->add_option("--config", eval_config, "run config naming the dataset")->required();
  eval_cmd->add_option("--n", n, "number of prior samples");
  eval_cmd->add_option("--per-class", per_class, "reconstructions per class");

  Analyze3dArgs aa;
  auto* a3_cmd = app.add_subcommand("analyze3d", "Minkowski functionals and histogram KL of volumes");
  a3_cmd->add_option("--real", aa.real, ".vox volumes")->required();
  a3_cmd->add_option("--synth", aa.synth, ".vox volumes")->required();
  a3_cmd->add_option("--stats", aa.stats, "volume, surface_area, mean_breadth, euler, permeability")->delimiter(',');
  a3_cmd->add_option("--external-real", aa.external_real, "CSV of externally computed statistics for real volumes");
  a3_cmd->add_option("--external-synth", aa.external_synth, "CSV of externally computed statistics for synthetic volumes");
  a3_cmd->add_option("--bins", aa.bins);
  a3_cmd->add_option("--resamples", aa.resamples);
  a3_cmd->add_option("--seed", aa.seed);
  a3_cmd->add_option("--out", aa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*sample_cmd) return run_sample(ma, n, size);
    if (*rec_cmd) return run_reconstruct(ma, inputs, zero_sigma);
    if (*man_cmd) return run_manifold(ma, lo, hi, step, size);
    if (*det_cmd) return run_detect(ma, image, patch, dc, crop);
    if (*tm_cmd) return run_texturemap(ma, image, dc);
    if (*eval_cmd) return run_evaluate(ma, eval_config, n, per_class);
    if (*a3_cmd) return run_analyze3d(aa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
