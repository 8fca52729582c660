#include "mtgan/config.hpp"

#include "mtgan/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mtgan {

ModelArchitectures RunConfig::architectures() const {
  if (architecture == "standard") return latent.ndim == 3 ? ModelArchitectures::standard_3d(latent)
                                                       : ModelArchitectures::standard_2d(latent);
  if (architecture == "reduced") return ModelArchitectures::reduced(latent, width);
  throw ConfigError("architecture: expected `standard` or `reduced`, got `" + architecture + "`");
}

void RunConfig::validate() const {
  latent.validate();
  training.validate();
  if (crop_size < 1) throw ConfigError("crop_size: must be >= 1");
  if (width < 1) throw ConfigError("width: must be >= 1");
  if (procedural_count < 1) throw ConfigError("procedural_count: must be >= 1");
  if (procedural_size != 0 && procedural_size < crop_size) throw ConfigError("procedural_size: must be >= crop_size");
  const auto arch = architectures();
  arch.validate(latent);
  bool reachable = false;
  for (std::int64_t l = 1; l <= crop_size && !reachable; ++l) reachable = arch.generator.output_side(l) == crop_size;
  if (!reachable) throw ConfigError("crop_size: the generator produces no output of side " + std::to_string(crop_size));
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got `" + v + "`");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got `" + v + "`");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got `" + v + "`");
}

std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected `key = value`");
    auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

RunConfig from_pairs(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  int ndim = 2;
  if (auto it = kv.find("ndim"); it != kv.end()) ndim = static_cast<int>(to_int("ndim", it->second));
  if (ndim != 2 && ndim != 3) throw ConfigError("ndim: must be 2 or 3");
  c.latent = ndim == 3 ? LatentSpec::defaults_3d() : LatentSpec::defaults_2d();
  c.training = TrainingConfig::defaults(ndim);

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"ndim", [](auto&, auto&) {}},
      {"d_global", [&](auto& k, auto& v) { c.latent.d_global = to_int(k, v); }},
      {"d_local", [&](auto& k, auto& v) { c.latent.d_local = to_int(k, v); }},
      {"d_periodic", [&](auto& k, auto& v) { c.latent.d_periodic = to_int(k, v); }},
      {"latent_spatial", [&](auto& k, auto& v) { c.latent.spatial = to_int(k, v); }},
      {"architecture", [&](auto&, auto& v) { c.architecture = v; }},
      {"width", [&](auto& k, auto& v) { c.width = to_int(k, v); }},
      {"batch", [&](auto& k, auto& v) { c.training.batch = to_int(k, v); }},
      {"iterations", [&](auto& k, auto& v) { c.training.iterations = to_int(k, v); }},
      {"disc_steps_per_gen", [&](auto& k, auto& v) { c.training.disc_steps_per_gen = to_int(k, v); }},
      {"lr", [&](auto& k, auto& v) { c.training.optimizer.lr = to_double(k, v); }},
      {"adam_beta1", [&](auto& k, auto& v) { c.training.optimizer.beta1 = to_double(k, v); }},
      {"adam_beta2", [&](auto& k, auto& v) { c.training.optimizer.beta2 = to_double(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { c.training.optimizer.weight_decay = to_double(k, v); }},
      {"alpha1", [&](auto& k, auto& v) { c.training.weights.alpha1 = to_double(k, v); }},
      {"alpha2", [&](auto& k, auto& v) { c.training.weights.alpha2 = to_double(k, v); }},
      {"beta1", [&](auto& k, auto& v) { c.training.weights.beta1 = to_double(k, v); }},
      {"beta2", [&](auto& k, auto& v) { c.training.weights.beta2 = to_double(k, v); }},
      {"kl_weight", [&](auto& k, auto& v) { c.training.kl_weight = to_double(k, v); }},
      {"clamp_log_sigma", [&](auto& k, auto& v) { c.training.clamp_log_sigma = to_bool(k, v); }},
      {"ablation",
       [&](auto& k, auto& v) {
         if (v == "full") c.training.ablation = Ablation::full;
         else if (v == "psgan") c.training.ablation = Ablation::psgan;
         else throw ConfigError(k + ": expected `full` or `psgan`, got `" + v + "`");
       }},
      {"seed", [&](auto& k, auto& v) { c.training.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"checkpoint_every", [&](auto& k, auto& v) { c.training.checkpoint_every = to_int(k, v); }},
      {"dataset", [&](auto&, auto& v) { c.dataset = v; }},
      {"crop_size", [&](auto& k, auto& v) { c.crop_size = to_int(k, v); }},
      {"procedural_size", [&](auto& k, auto& v) { c.procedural_size = to_int(k, v); }},
      {"procedural_count", [&](auto& k, auto& v) { c.procedural_count = to_int(k, v); }},
      {"output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
  };
  for (const auto& [k, v] : kv) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError(k + ": unknown config key");
    it->second(k, v);
  }
  if (!kv.contains("crop_size")) c.crop_size = generator_output_side(ndim, c.latent.spatial);
  c.validate();
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) { return from_pairs(parse_pairs(text)); }

RunConfig read_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

RunConfig read_run_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  auto kv = parse_pairs(read_file(path));
  for (const auto& [k, v] : overrides) kv[k] = v;
  return from_pairs(kv);
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream s;
  s.precision(17);
  const auto& t = c.training;
  s << "ndim = " << c.latent.ndim << "\n"
    << "d_global = " << c.latent.d_global << "\n"
    << "d_local = " << c.latent.d_local << "\n"
    << "d_periodic = " << c.latent.d_periodic << "\n"
    << "latent_spatial = " << c.latent.spatial << "\n"
    << "architecture = " << c.architecture << "\n"
    << "width = " << c.width << "\n"
    << "batch = " << t.batch << "\n"
    << "iterations = " << t.iterations << "\n"
    << "disc_steps_per_gen = " << t.disc_steps_per_gen << "\n"
    << "lr = " << t.optimizer.lr << "\n"
    << "adam_beta1 = " << t.optimizer.beta1 << "\n"
    << "adam_beta2 = " << t.optimizer.beta2 << "\n"
    << "weight_decay = " << t.optimizer.weight_decay << "\n"
    << "alpha1 = " << t.weights.alpha1 << "\n"
    << "alpha2 = " << t.weights.alpha2 << "\n"
    << "beta1 = " << t.weights.beta1 << "\n"
    << "beta2 = " << t.weights.beta2 << "\n"
    << "kl_weight = " << t.kl_weight << "\n"
    << "clamp_log_sigma = " << (t.clamp_log_sigma ? "true" : "false") << "\n"
    << "ablation = " << (t.ablation == Ablation::psgan ? "psgan" : "full") << "\n"
    << "seed = " << t.seed << "\n"
    << "checkpoint_every = " << t.checkpoint_every << "\n"
    << "dataset = " << c.dataset << "\n"
    << "crop_size = " << c.crop_size << "\n"
    << "procedural_size = " << c.procedural_size << "\n"
    << "procedural_count = " << c.procedural_count << "\n"
    << "output_dir = " << c.output_dir.string() << "\n";
  return s.str();
}

TextureDataset load_dataset(const RunConfig& c, std::uint64_t seed) {
  if (c.dataset != "procedural") {
    auto ds = read_manifest(c.dataset, c.crop_size);
    if (ds.ndim() != c.latent.ndim) throw ConfigError("dataset: dimensionality differs from ndim");
    return ds;
  }
  const auto size = c.procedural_size > 0 ? c.procedural_size : c.crop_size + c.crop_size / 2;
  HostRng rng(seed);
  auto ds = c.latent.ndim == 3
                ? procedural_volumes({VolumeKind{3.0, 0.5}, VolumeKind{6.0, 0.65}}, size, c.procedural_count, rng)
                : procedural_textures(desk_texture_kinds(), size, c.procedural_count, rng);
  ds.crop_size = c.crop_size;
  return ds;
}

}  // namespace mtgan
