#include "mtgan/networks.hpp"

#include "mtgan/error.hpp"
#include "mtgan/rng.hpp"

#include <cmath>
#include <string>

namespace mtgan {

namespace F = torch::nn::functional;

// ---------------------------------------------------------------------------
// architecture description

std::int64_t latent_side_for_output(int ndim, std::int64_t side) {
  const std::int64_t l = ndim == 2 ? side / 32 : side / 16 - 3;
  if (l < 1 || generator_output_side(ndim, l) != side)
    throw ConfigError("no latent extent produces a " + std::to_string(ndim) + "D output of side " +
                      std::to_string(side) + (ndim == 2 ? " (needs a multiple of 32)" : " (needs 16 (L + 3))"));
  return l;
}

std::vector<std::int64_t> ArchitectureSpec::layer_sides(std::int64_t n) const {
  std::vector<std::int64_t> sides;
  for (const auto& l : layers) {
    n = transposed ? conv_transpose_output_side(n, l.kernel, l.stride, l.padding, l.output_padding)
                   : conv_output_side(n, l.kernel, l.stride, l.padding);
    sides.push_back(n);
  }
  return sides;
}

std::int64_t ArchitectureSpec::output_side(std::int64_t n) const {
  auto sides = layer_sides(n);
  return sides.empty() ? n : sides.back();
}

void ArchitectureSpec::validate() const {
  if (ndim != 2 && ndim != 3) throw ConfigError("architecture: ndim must be 2 or 3");
  if (in_channels < 1) throw ConfigError("architecture: in_channels must be >= 1");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto where = "architecture layer " + std::to_string(i) + ": ";
    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1 || l.padding < 0 || l.output_padding < 0)
      throw ConfigError(where + "channels, kernel and stride must be positive, paddings non-negative");
    if (l.output_padding > 0 && (!transposed || l.output_padding >= l.stride))
      throw ConfigError(where + "output_padding requires a transposed layer and must be smaller than stride");
    if (l.spectral_norm && transposed) throw ConfigError(where + "spectral norm is only supported on convolutions");
  }
  for (auto w : head)
    if (w < 1) throw ConfigError("architecture: head widths must be >= 1");
  if (ref_input_side > 0) {
    auto sides = layer_sides(ref_input_side);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (sides[i] < 1) throw ConfigError("architecture layer " + std::to_string(i) + ": spatial size collapses");
      if (layers[i].declared_side && *layers[i].declared_side != sides[i])
        throw ConfigError("architecture layer " + std::to_string(i) + ": declared output side " +
                          std::to_string(*layers[i].declared_side) + " but kernel arithmetic gives " +
                          std::to_string(sides[i]));
    }
  }
}

namespace {

LayerSpec layer(std::int64_t out, std::int64_t k, std::int64_t s, std::int64_t p, std::int64_t side) {
  LayerSpec l;
  l.out_channels = out;
  l.kernel = k;
  l.stride = s;
  l.padding = p;
  l.declared_side = side;
  return l;
}

LayerSpec with_bn(LayerSpec l) {
  l.batchnorm = true;
  l.bias = false;
  return l;
}

LayerSpec with_sn(LayerSpec l) {
  l.spectral_norm = true;
  return l;
}

LayerSpec up(std::int64_t out, std::int64_t k, std::int64_t s, std::int64_t p, std::int64_t op, std::int64_t side,
             bool bn) {
  auto l = layer(out, k, s, p, side);
  l.output_padding = op;
  l.bias = false;
  l.batchnorm = bn;
  return l;
}

}  // namespace

ModelArchitectures ModelArchitectures::standard_2d(const LatentSpec& latent) {
  ModelArchitectures a;
  const std::int64_t dg = latent.d_global;

  auto& g = a.generator;
  g.ndim = 2;
  g.in_channels = latent.channels();
  g.transposed = true;
  g.ref_input_side = 5;
  g.layers = {up(512, 5, 2, 2, 1, 10, true), up(256, 5, 2, 2, 1, 20, true), up(128, 5, 2, 2, 1, 40, true),
              up(64, 5, 2, 2, 1, 80, true), up(3, 5, 2, 2, 1, 160, false)};
  g.head = {40};

  auto& e = a.encoder;
  e.ndim = 2;
  e.in_channels = 3;
  e.ref_input_side = 160;
  e.layers = {layer(64, 5, 2, 2, 80), with_bn(layer(128, 5, 2, 2, 40)), with_bn(layer(256, 5, 2, 2, 20)),
              with_bn(layer(512, 5, 2, 2, 10)), layer(2 * dg, 5, 2, 2, 5)};

  auto& dx = a.disc_texture;
  dx.ndim = 2;
  dx.in_channels = 3;
  dx.ref_input_side = 160;
  dx.layers = {with_sn(layer(64, 5, 2, 2, 80)), with_sn(layer(128, 5, 2, 2, 40)), layer(256, 5, 2, 2, 20),
               with_sn(layer(512, 5, 2, 2, 10)), with_sn(layer(1, 5, 2, 2, 5))};

  auto& dp = a.disc_pair;
  dp = dx;
  dp.layers.back().out_channels = 96;
  dp.head = {48, 1};
  dp.head_spectral_norm = true;

  auto& dz = a.disc_latent;
  dz.ndim = 2;
  dz.in_channels = dg;
  dz.head = {512, 256, 1};
  return a;
}

ModelArchitectures ModelArchitectures::standard_3d(const LatentSpec& latent) {
  ModelArchitectures a;
  const std::int64_t dg = latent.d_global;
  const double slope = 0.01;

  auto& g = a.generator;
  g.ndim = 3;
  g.in_channels = latent.channels();
  g.transposed = true;
  g.slope = slope;
  g.ref_input_side = 7;
  g.layers = {up(512, 4, 1, 0, 0, 10, true), up(256, 4, 2, 1, 0, 20, true), up(128, 4, 2, 1, 0, 40, true),
              up(64, 4, 2, 1, 0, 80, true), up(1, 4, 2, 1, 0, 160, false)};
  g.head = {40};

  auto& e = a.encoder;
  e.ndim = 3;
  e.in_channels = 1;
  e.slope = slope;
  e.ref_input_side = 160;
  e.layers = {layer(16, 4, 2, 1, 80), with_bn(layer(32, 4, 2, 1, 40)), with_bn(layer(64, 4, 2, 1, 20)),
              with_bn(layer(72, 4, 2, 1, 10)), with_bn(layer(128, 4, 2, 1, 5)), layer(2 * dg, 1, 1, 0, 5)};

  auto& dx = a.disc_texture;
  dx.ndim = 3;
  dx.in_channels = 1;
  dx.slope = slope;
  dx.ref_input_side = 160;
  dx.layers = {with_sn(layer(64, 4, 2, 1, 80)), with_sn(layer(128, 4, 2, 1, 40)), layer(256, 4, 2, 1, 20),
               with_sn(layer(512, 4, 2, 1, 10)), with_sn(layer(1, 4, 1, 0, 7))};

  auto& dp = a.disc_pair;
  dp.ndim = 3;
  dp.in_channels = 1;
  dp.slope = slope;
  dp.ref_input_side = 160;
  dp.layers = {with_sn(layer(16, 4, 2, 1, 80)), with_sn(layer(32, 4, 2, 1, 40)), layer(64, 4, 2, 1, 20),
               with_sn(layer(73, 4, 2, 1, 10)), with_sn(layer(128, 4, 1, 0, 7))};
  dp.head = {128, 64, 1};
  dp.head_spectral_norm = true;

  auto& dz = a.disc_latent;
  dz.ndim = 3;
  dz.in_channels = dg;
  dz.slope = slope;
  dz.head = {512, 256, 1};
  return a;
}

ModelArchitectures ModelArchitectures::reduced(const LatentSpec& latent, std::int64_t width) {
  if (width < 1) throw ConfigError("architecture: reduced width must be >= 1");
  auto a = latent.ndim == 3 ? standard_3d(latent) : standard_2d(latent);
  auto scale = [width](std::int64_t c) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::lround(static_cast<double>(c) * width / 64.0)));
  };
  // inner layers only: image channels, 2 d^g and single-logit outputs keep their size
  auto scale_stack = [&](ArchitectureSpec& s) {
    for (std::size_t i = 0; i + 1 < s.layers.size(); ++i) s.layers[i].out_channels = scale(s.layers[i].out_channels);
  };
  scale_stack(a.generator);
  scale_stack(a.encoder);
  scale_stack(a.disc_texture);
  scale_stack(a.disc_pair);
  a.disc_pair.layers.back().out_channels = scale(a.disc_pair.layers.back().out_channels);
  for (std::size_t i = 0; i + 1 < a.disc_pair.head.size(); ++i) a.disc_pair.head[i] = scale(a.disc_pair.head[i]);
  for (std::size_t i = 0; i + 1 < a.disc_latent.head.size(); ++i) a.disc_latent.head[i] = scale(a.disc_latent.head[i]);
  return a;
}

void ModelArchitectures::validate(const LatentSpec& latent) const {
  latent.validate();
  for (const auto* s : {&generator, &encoder, &disc_texture, &disc_pair, &disc_latent}) {
    s->validate();
    if (s->ndim != latent.ndim) throw ConfigError("architecture: network ndim differs from the latent spec");
  }
  if (!generator.transposed) throw ConfigError("architecture: generator must be a transposed-convolution stack");
  if (generator.in_channels != latent.channels())
    throw ConfigError("architecture: generator input channels " + std::to_string(generator.in_channels) +
                      " != d_global + d_local + d_periodic = " + std::to_string(latent.channels()));
  const std::int64_t image_channels = latent.ndim == 2 ? 3 : 1;
  if (generator.out_channels() != image_channels) throw ConfigError("architecture: generator output channels");
  if (encoder.in_channels != image_channels || disc_texture.in_channels != image_channels ||
      disc_pair.in_channels != image_channels)
    throw ConfigError("architecture: image-input networks must take " + std::to_string(image_channels) + " channels");
  if (encoder.out_channels() != 2 * latent.d_global)
    throw ConfigError("architecture: encoder must output 2 * d_global channels");
  if (disc_texture.out_channels() != 1) throw ConfigError("architecture: texture discriminator must output 1 channel");
  if (disc_pair.head.empty() || disc_pair.head.back() != 1)
    throw ConfigError("architecture: pair discriminator head must end with width 1");
  if (!disc_latent.layers.empty() || disc_latent.in_channels != latent.d_global || disc_latent.head.empty() ||
      disc_latent.head.back() != 1)
    throw ConfigError("architecture: latent discriminator must map d_global -> ... -> 1");
}

// ---------------------------------------------------------------------------
// conv stack

ConvStackImpl::ConvStackImpl(const ArchitectureSpec& arch) : slope_(arch.slope) {
  std::int64_t in = arch.in_channels;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    ConvOptions o;
    o.ndim = arch.ndim;
    o.in_channels = in;
    o.out_channels = l.out_channels;
    o.kernel = l.kernel;
    o.stride = l.stride;
    o.padding = l.padding;
    o.output_padding = l.output_padding;
    o.transposed = arch.transposed;
    o.bias = l.bias;
    o.spectral_norm = l.spectral_norm;
    convs_.push_back(register_module("conv" + std::to_string(i), ConvLayer(o)));
    norms_.push_back(l.batchnorm ? register_module("bn" + std::to_string(i), BatchNorm(l.out_channels))
                                 : BatchNorm(nullptr));
    in = l.out_channels;
  }
}

torch::Tensor ConvStackImpl::forward(torch::Tensor x) {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i]->forward(x);
    if (norms_[i]) x = norms_[i]->forward(x);
    if (i + 1 < convs_.size()) x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(slope_));
  }
  return x;
}

void ConvStackImpl::power_iterate() {
  for (auto& c : convs_) c->power_iterate();
}

// ---------------------------------------------------------------------------
// generator

GeneratorImpl::GeneratorImpl(const LatentSpec& latent, const ArchitectureSpec& arch) : latent_(latent) {
  upsample_ = register_module("upsample", ConvStack(arch));
  if (latent.d_periodic > 0) {
    std::int64_t in = latent.d_global;
    std::vector<std::int64_t> widths = arch.head;
    widths.push_back(2 * latent.d_periodic);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      period_mlp_.push_back(register_module("period" + std::to_string(i), Dense(in, widths[i])));
      in = widths[i];
    }
  }
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& noise) { return torch::tanh(upsample_->forward(noise)); }

std::pair<torch::Tensor, torch::Tensor> GeneratorImpl::period_coefficients(const torch::Tensor& global) {
  TORCH_CHECK(!period_mlp_.empty(), "generator has no periodic channels");
  auto h = global;
  for (std::size_t i = 0; i < period_mlp_.size(); ++i) {
    h = period_mlp_[i]->forward(h);
    if (i + 1 < period_mlp_.size()) h = torch::relu(h);
  }
  auto parts = h.split(latent_.d_periodic, 1);
  return {parts[0], parts[1]};
}

std::pair<torch::Tensor, torch::Tensor> GeneratorImpl::period_coefficients_field(const torch::Tensor& field) {
  TORCH_CHECK(!period_mlp_.empty(), "generator has no periodic channels");
  TORCH_CHECK(field.dim() == 4, "period_coefficients_field: expected (B, d_global, H, W)");
  auto h = field;
  for (std::size_t i = 0; i < period_mlp_.size(); ++i) {
    const auto& w = period_mlp_[i]->effective_weight();
    h = torch::conv2d(h, w.view({w.size(0), w.size(1), 1, 1}), period_mlp_[i]->bias);
    if (i + 1 < period_mlp_.size()) h = torch::relu(h);
  }
  auto parts = h.split(latent_.d_periodic, 1);
  return {parts[0], parts[1]};
}

PeriodicCoefFn GeneratorImpl::coef_fn() {
  return [this](const torch::Tensor& g) { return period_coefficients(g); };
}

torch::Tensor GeneratorImpl::generate(const torch::Tensor& global, at::Generator& gen, GlobalSource source,
                                      std::int64_t latent_side) {
  auto spec = latent_;
  if (latent_side > 0) spec.spatial = latent_side;
  return forward(assemble_noise(global, spec, coef_fn(), gen, source).data);
}

// ---------------------------------------------------------------------------
// encoder

EncoderImpl::EncoderImpl(std::int64_t d_global, const ArchitectureSpec& arch) : d_global_(d_global), arch_(arch) {
  stack_ = register_module("stack", ConvStack(arch));
}

torch::Tensor EncoderImpl::features(const torch::Tensor& images) { return stack_->forward(images); }

EncoderOutput EncoderImpl::forward(const torch::Tensor& images) {
  auto f = features(images);
  auto pooled = f.flatten(2).mean(2);
  auto parts = pooled.split(d_global_, 1);
  return {parts[0], parts[1]};
}

EncoderOutput spatial_encode(Encoder& encoder, const torch::Tensor& images, std::int64_t pool_kernel) {
  TORCH_CHECK(pool_kernel >= 1, "spatial_encode: pool kernel must be >= 1");
  auto f = encoder->features(images);
  const auto nd = f.dim() - 2;
  std::vector<std::int64_t> kernel, stride(static_cast<std::size_t>(nd), 1);
  for (std::int64_t d = 0; d < nd; ++d) kernel.push_back(std::min(pool_kernel, f.size(2 + d)));
  auto pooled = nd == 2 ? torch::avg_pool2d(f, kernel, stride) : torch::avg_pool3d(f, kernel, stride);
  auto parts = pooled.split(encoder->d_global(), 1);
  return {parts[0], parts[1]};
}

// ---------------------------------------------------------------------------
// discriminators

TextureDiscriminatorImpl::TextureDiscriminatorImpl(const ArchitectureSpec& arch) {
  stack_ = register_module("stack", ConvStack(arch));
}

torch::Tensor TextureDiscriminatorImpl::logits(const torch::Tensor& images) {
  if (is_training()) power_iterate();
  return stack_->forward(images);
}

torch::Tensor TextureDiscriminatorImpl::forward(const torch::Tensor& images) { return torch::sigmoid(logits(images)); }

void TextureDiscriminatorImpl::power_iterate() { stack_->power_iterate(); }

PairDiscriminatorImpl::PairDiscriminatorImpl(const ArchitectureSpec& arch) : ndim_(arch.ndim), slope_(arch.slope) {
  tower_ = register_module("tower", ConvStack(arch));
  std::int64_t in = arch.out_channels();
  for (std::size_t i = 0; i < arch.head.size(); ++i) {
    mix_.push_back(register_module("mix" + std::to_string(i), Dense(in, arch.head[i], arch.head_spectral_norm)));
    in = arch.head[i];
  }
}

void PairDiscriminatorImpl::power_iterate() {
  tower_->power_iterate();
  for (auto& m : mix_) m->power_iterate();
}

torch::Tensor PairDiscriminatorImpl::embed(const torch::Tensor& images) { return tower_->forward(images); }

torch::Tensor PairDiscriminatorImpl::similarity(const torch::Tensor& ex, const torch::Tensor& ey) {
  std::vector<torch::Tensor> ws, bs;
  for (auto& m : mix_) {
    ws.push_back(m->effective_weight());
    bs.push_back(m->bias);
  }
  return pairwise_mix(ex.flatten(2), ey.flatten(2), ws, bs, slope_);
}

torch::Tensor PairDiscriminatorImpl::head(const torch::Tensor& ex, const torch::Tensor& ey) {
  TORCH_CHECK(ex.sizes() == ey.sizes(), "pair discriminator: embeddings of x and y differ in shape");
  auto m = similarity(ex, ey);
  // both averages reduce along the contiguous axis so that swapping inputs swaps them bit for bit
  auto rows = m.mean(2);
  auto cols = m.transpose(1, 2).contiguous().mean(2);
  auto grid = ex.sizes().slice(2).vec();
  std::vector<std::int64_t> shape{ex.size(0), 1};
  shape.insert(shape.end(), grid.begin(), grid.end());
  auto rx = rows.view(shape), cy = cols.view(shape);
  auto out = ndim_ == 2 ? torch::cat({rx, cy}, 3) : torch::cat({rx, cy}, 1);
  return torch::sigmoid(out);
}

torch::Tensor PairDiscriminatorImpl::forward(const torch::Tensor& x, const torch::Tensor& y) {
  if (x.sizes() != y.sizes())
    throw DataError("pair discriminator: x and y must have the same shape");
  if (is_training()) power_iterate();
  return head(embed(x), embed(y));
}

LatentDiscriminatorImpl::LatentDiscriminatorImpl(std::int64_t d_global, const ArchitectureSpec& arch)
    : slope_(arch.slope) {
  std::int64_t in = d_global;
  for (std::size_t i = 0; i < arch.head.size(); ++i) {
    layers_.push_back(register_module("fc" + std::to_string(i), Dense(in, arch.head[i], arch.head_spectral_norm)));
    in = arch.head[i];
  }
}

torch::Tensor LatentDiscriminatorImpl::forward(const torch::Tensor& z) {
  if (is_training()) power_iterate();
  auto h = z;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h);
    if (i + 1 < layers_.size()) h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(slope_));
  }
  return torch::sigmoid(h.squeeze(1));
}

void LatentDiscriminatorImpl::power_iterate() {
  for (auto& l : layers_) l->power_iterate();
}

// ---------------------------------------------------------------------------
// bundle utilities

std::int64_t count_parameters(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters())
    if (p.requires_grad()) n += p.numel();
  return n;
}

void init_parameters(torch::nn::Module& module, at::Generator& gen, double std) {
  torch::NoGradGuard no_grad;
  for (const auto& child : module.modules(/*include_self=*/true)) {
    if (auto* bn = child->as<BatchNormImpl>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
      bn->running_mean.zero_();
      bn->running_var.fill_(1.0);
      continue;
    }
    for (auto& p : child->named_parameters(/*recurse=*/false)) {
      if (p.key() == "bias")
        p.value().zero_();
      else
        p.value().normal_(0.0, std, gen);
    }
    for (auto& b : child->named_buffers(/*recurse=*/false)) {
      if (b.key() == "sn_u" || b.key() == "sn_v") {
        b.value().normal_(0.0, 1.0, gen);
        b.value().div_(b.value().norm().clamp_min(1e-12));
      }
    }
  }
}

ModelBundle ModelBundle::build(const LatentSpec& latent, const ModelArchitectures& arch, std::uint64_t seed) {
  arch.validate(latent);
  ModelBundle b;
  b.latent = latent;
  b.arch = arch;
  b.generator = Generator(latent, arch.generator);
  b.encoder = Encoder(latent.d_global, arch.encoder);
  b.disc_texture = TextureDiscriminator(arch.disc_texture);
  b.disc_pair = PairDiscriminator(arch.disc_pair);
  b.disc_latent = LatentDiscriminator(latent.d_global, arch.disc_latent);
  auto gen = make_generator(seed);
  for (auto& [name, m] : b.modules()) init_parameters(*m, gen);
  return b;
}

void ModelBundle::train(bool on) {
  for (auto& [name, m] : modules()) m->train(on);
}

std::int64_t ModelBundle::latent_side_for(std::int64_t side) const {
  for (std::int64_t l = 1; l <= side; ++l)
    if (arch.generator.output_side(l) == side) return l;
  throw ConfigError("the generator produces no output of side " + std::to_string(side));
}

void ModelBundle::to(torch::Dtype dtype) {
  for (auto& [name, m] : modules()) m->to(dtype);
}

std::vector<std::pair<std::string, torch::nn::Module*>> ModelBundle::modules() {
  return {{"generator", generator.get()},
          {"encoder", encoder.get()},
          {"disc_texture", disc_texture.get()},
          {"disc_pair", disc_pair.get()},
          {"disc_latent", disc_latent.get()}};
}

}  // namespace mtgan
