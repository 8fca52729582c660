#include "mtgan/evaluation.hpp"

#include "mtgan/error.hpp"
#include "mtgan/io.hpp"

#include <algorithm>
#include <cmath>

namespace mtgan {

ClassifierImpl::ClassifierImpl(const ArchitectureSpec& tower, std::int64_t num_classes) : num_classes_(num_classes) {
  if (tower.out_channels() != num_classes) throw ConfigError("classifier tower must output one map per class");
  stack_ = register_module("stack", ConvStack(tower));
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& images) { return stack_->forward(images).flatten(2).mean(2); }

ArchitectureSpec classifier_tower(const ArchitectureSpec& disc_texture, std::int64_t num_classes) {
  auto t = disc_texture;
  for (auto& l : t.layers) l.spectral_norm = false;
  t.layers.back().out_channels = num_classes;
  t.head.clear();
  return t;
}

namespace {

torch::Tensor eval_crops(const TextureDataset& dataset, std::int64_t per_class, HostRng& rng, torch::Tensor& labels) {
  std::vector<torch::Tensor> xs;
  std::vector<std::int64_t> ls;
  for (std::int64_t c = 0; c < dataset.num_classes(); ++c) {
    auto idx = dataset.sources_with_label(c);
    if (idx.empty()) continue;
    for (std::int64_t i = 0; i < per_class; ++i) {
      const auto& src = dataset.sources[idx[static_cast<std::size_t>(i) % idx.size()]].data;
      xs.push_back(random_crop(src, dataset.crop_size, rng));
      ls.push_back(c);
    }
  }
  labels = torch::tensor(ls, torch::kInt64);
  return torch::stack(xs);
}

}  // namespace

ClassifierResult train_classifier(const TextureDataset& dataset, const ArchitectureSpec& tower,
                                  const ClassifierConfig& config) {
  if (dataset.mode != DatasetMode::labeled) throw DataError("classifier training needs a labeled dataset");
  dataset.validate();
  ClassifierResult result;
  result.classifier = Classifier(tower, dataset.num_classes());
  auto gen = make_generator(substream_seed(config.seed, "classifier-init"));
  init_parameters(*result.classifier, gen);
  HostRng rng(substream_seed(config.seed, "classifier-data"));
  HostRng eval_rng(substream_seed(config.seed, "classifier-eval"));
  torch::Tensor eval_labels;
  auto eval_x = eval_crops(dataset, config.eval_crops_per_class, eval_rng, eval_labels);

  torch::optim::Adam opt(result.classifier->parameters(), torch::optim::AdamOptions(config.lr).betas({0.5, 0.999}));
  for (std::int64_t step = 1; step <= config.max_steps; ++step) {
    result.classifier->train();
    auto batch = sample_pair_labeled(dataset, config.batch, rng);
    auto loss = torch::nn::functional::cross_entropy(result.classifier->forward(batch.x), batch.labels);
    opt.zero_grad();
    loss.backward();
    opt.step();
    result.steps = step;
    if (step % config.check_every == 0 || step == config.max_steps) {
      result.train_accuracy = accuracy(result.classifier, eval_x, eval_labels);
      if (result.train_accuracy >= 1.0) {
        result.reached_full_accuracy = true;
        break;
      }
    }
  }
  result.classifier->eval();
  return result;
}

torch::Tensor predict_probs(Classifier& classifier, const torch::Tensor& images, std::int64_t batch) {
  torch::NoGradGuard ng;
  const bool was_training = classifier->is_training();
  classifier->eval();
  std::vector<torch::Tensor> out;
  for (std::int64_t i = 0; i < images.size(0); i += batch)
    out.push_back(torch::softmax(classifier->forward(images.narrow(0, i, std::min(batch, images.size(0) - i))), 1));
  classifier->train(was_training);
  if (out.empty()) return torch::zeros({0, classifier->num_classes()}, torch::kFloat64);
  return torch::cat(out).to(torch::kFloat64);
}

torch::Tensor predict_labels(Classifier& classifier, const torch::Tensor& images, std::int64_t batch) {
  return predict_probs(classifier, images, batch).argmax(1);
}

double accuracy(Classifier& classifier, const torch::Tensor& images, const torch::Tensor& labels) {
  if (images.size(0) == 0) return 0.0;
  return (predict_labels(classifier, images) == labels).to(torch::kFloat64).mean().item<double>();
}

double inception_score(const torch::Tensor& probs) {
  if (probs.dim() != 2 || probs.size(0) < 1) throw DataError("inception score needs an (n, C) probability table");
  auto p = probs.to(torch::kFloat64).contiguous();
  if ((p < 0).any().item<bool>()) throw DataError("label distribution has negative entries");
  if (((p.sum(1) - 1.0).abs() > 1e-6).any().item<bool>()) throw DataError("label distribution rows must sum to 1");
  const auto n = p.size(0), c = p.size(1);
  auto acc = p.accessor<double, 2>();
  std::vector<double> marginal(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < c; ++k) marginal[static_cast<std::size_t>(k)] += acc[i][k];
  for (auto& m : marginal) m /= static_cast<double>(n);
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double kl = 0.0;
    for (std::int64_t k = 0; k < c; ++k) {
      const double v = acc[i][k];
      if (v > 0) kl += v * (std::log(v) - std::log(marginal[static_cast<std::size_t>(k)]));
    }
    total += kl;
  }
  return std::exp(total / static_cast<double>(n));
}

namespace {

std::vector<double> histogram(const std::vector<double>& v, double lo, double hi, std::int64_t bins, double eps) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  for (double x : v) {
    auto idx = static_cast<std::int64_t>(std::floor((x - lo) / (hi - lo) * static_cast<double>(bins)));
    idx = std::clamp<std::int64_t>(idx, 0, bins - 1);
    h[static_cast<std::size_t>(idx)] += 1.0;
  }
  double total = 0.0;
  for (auto& c : h) {
    c = c / static_cast<double>(v.size()) + eps;
    total += c;
  }
  for (auto& c : h) c /= total;
  return h;
}

double kl_values(const std::vector<double>& real, const std::vector<double>& synth, std::int64_t bins, double eps) {
  double lo = real.front(), hi = real.front();
  for (const auto* v : {&real, &synth})
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (!(hi > lo)) return 0.0;
  auto p = histogram(real, lo, hi, bins, eps);
  auto q = histogram(synth, lo, hi, bins, eps);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

void check_samples(const StatisticSample& real, const StatisticSample& synth, std::int64_t bins) {
  if (real.name != synth.name)
    throw DataError("histogram KL compares different statistics: " + real.name + " vs " + synth.name);
  if (real.values.empty() || synth.values.empty()) throw DataError("histogram KL needs non-empty samples");
  if (bins < 2) throw ConfigError("histogram KL needs at least 2 bins");
  for (const auto* v : {&real.values, &synth.values})
    for (double x : *v)
      if (!std::isfinite(x)) throw DataError("statistic " + real.name + " has non-finite values");
}

}  // namespace

double histogram_kl(const StatisticSample& real, const StatisticSample& synth, std::int64_t bins, double eps) {
  check_samples(real, synth, bins);
  return kl_values(real.values, synth.values, bins, eps);
}

BootstrapResult bootstrap_std(const StatisticSample& real, const StatisticSample& synth, std::int64_t bins,
                              std::int64_t resamples, std::uint64_t seed, double eps) {
  check_samples(real, synth, bins);
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  BootstrapResult r;
  r.kl = kl_values(real.values, synth.values, bins, eps);
  HostRng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_r(0, real.values.size() - 1), pick_s(0, synth.values.size() - 1);
  std::vector<double> kls;
  std::vector<double> a(real.values.size()), b(synth.values.size());
  for (std::int64_t k = 0; k < resamples; ++k) {
    for (auto& x : a) x = real.values[pick_r(rng)];
    for (auto& x : b) x = synth.values[pick_s(rng)];
    kls.push_back(kl_values(a, b, bins, eps));
  }
  double mean = 0.0;
  for (double v : kls) mean += v;
  mean /= static_cast<double>(kls.size());
  double var = 0.0;
  for (double v : kls) var += (v - mean) * (v - mean);
  r.std = std::sqrt(var / static_cast<double>(kls.size()));
  return r;
}

CoverageReport coverage_from_labels(const torch::Tensor& predicted, std::int64_t num_classes) {
  CoverageReport rep;
  rep.counts.assign(static_cast<std::size_t>(num_classes), 0);
  auto p = predicted.to(torch::kInt64).contiguous();
  const auto* d = p.data_ptr<std::int64_t>();
  for (std::int64_t i = 0; i < p.numel(); ++i) {
    if (d[i] < 0 || d[i] >= num_classes) throw DataError("predicted label out of range");
    ++rep.counts[static_cast<std::size_t>(d[i])];
  }
  for (std::int64_t c = 0; c < num_classes; ++c)
    if (rep.counts[static_cast<std::size_t>(c)] == 0) rep.empty_classes.push_back(c);
  return rep;
}

CoverageReport coverage_histogram(Classifier& classifier, const torch::Tensor& samples) {
  if (samples.size(0) == 0) return coverage_from_labels(torch::zeros({0}, torch::kInt64), classifier->num_classes());
  return coverage_from_labels(predict_labels(classifier, samples), classifier->num_classes());
}

MemoryReport memory_report(std::int64_t d, std::int64_t n) {
  if (d < 1 || n < 1) throw ConfigError("memory report needs d >= 1 and N >= 1");
  MemoryReport r;
  r.ours = ours_param_estimate(d);
  r.dts = dts_param_estimate(n);
  r.ratio = static_cast<double>(r.dts) / static_cast<double>(r.ours);
  return r;
}

void write_bar_chart(const std::vector<std::int64_t>& counts, const std::filesystem::path& path, std::int64_t bar_width,
                     std::int64_t height) {
  const auto n = static_cast<std::int64_t>(counts.size());
  const std::int64_t gap = 2, margin = 4;
  const std::int64_t width = std::max<std::int64_t>(1, n * (bar_width + gap) - gap + 2 * margin);
  auto img = torch::ones({3, height + 2 * margin, width});
  std::int64_t peak = 1;
  for (auto c : counts) peak = std::max(peak, c);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto h = counts[static_cast<std::size_t>(i)] * height / peak;
    if (h == 0) continue;
    auto bar = img.narrow(1, margin + height - h, h).narrow(2, margin + i * (bar_width + gap), bar_width);
    bar[0].fill_(-0.6);
    bar[1].fill_(-0.2);
    bar[2].fill_(0.6);
  }
  img.narrow(1, margin + height, 1).fill_(-1.0);
  write_png(img, path);
}

}  // namespace mtgan
