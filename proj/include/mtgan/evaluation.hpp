#pragma once

#include "mtgan/data.hpp"
#include "mtgan/networks.hpp"
#include "mtgan/rng.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mtgan {

inline constexpr std::int64_t kDefaultBins = 50;
inline constexpr std::int64_t kDefaultResamples = 1000;
inline constexpr double kHistogramEps = 1e-10;

/// Named scalar statistic over a set of objects.
struct StatisticSample {
  std::string name;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// texture classifier

/// Texture-discriminator-shaped tower with one logit map per class, averaged over space.
class ClassifierImpl : public torch::nn::Module {
 public:
  ClassifierImpl(const ArchitectureSpec& tower, std::int64_t num_classes);
  /// (B, C) logits.
  torch::Tensor forward(const torch::Tensor& images);
  std::int64_t num_classes() const { return num_classes_; }

 private:
  std::int64_t num_classes_;
  ConvStack stack_{nullptr};
};
TORCH_MODULE(Classifier);

/// Tower for a classifier matching the texture discriminator of `arch` without spectral norm.
ArchitectureSpec classifier_tower(const ArchitectureSpec& disc_texture, std::int64_t num_classes);

struct ClassifierConfig {
  std::int64_t max_steps = 500;
  std::int64_t batch = 32;
  double lr = 1e-3;
  std::int64_t check_every = 25;
  std::int64_t eval_crops_per_class = 16;
  std::uint64_t seed = 0;
};

struct ClassifierResult {
  Classifier classifier{nullptr};
  double train_accuracy = 0.0;
  std::int64_t steps = 0;
  bool reached_full_accuracy = false;  // false means the step cap was hit first
};

/// Cross-entropy training on random crops of a labeled dataset until the accuracy on a fixed
/// set of training crops reaches 1 or `max_steps` is hit.
ClassifierResult train_classifier(const TextureDataset& dataset, const ArchitectureSpec& tower,
                                  const ClassifierConfig& config);

/// Softmax rows (n, C) as double, evaluated in batches in eval mode.
torch::Tensor predict_probs(Classifier& classifier, const torch::Tensor& images, std::int64_t batch = 64);
torch::Tensor predict_labels(Classifier& classifier, const torch::Tensor& images, std::int64_t batch = 64);

/// Fraction of `images` classified as `labels`.
double accuracy(Classifier& classifier, const torch::Tensor& images, const torch::Tensor& labels);

// ---------------------------------------------------------------------------
// scores

/// exp(mean_i KL(p(t|x_i) || p(t))) with p(t) the row mean and 0 log 0 = 0.
/// Throws DataError if rows are negative or do not sum to 1 within 1e-6.
double inception_score(const torch::Tensor& probs);

/// KL(real || synth) in nats between histograms on shared equal-width bins over the union range,
/// each smoothed by `eps` and renormalized. Returns 0 when all values coincide.
double histogram_kl(const StatisticSample& real, const StatisticSample& synth, std::int64_t bins = kDefaultBins,
                    double eps = kHistogramEps);

struct BootstrapResult {
  double kl = 0.0;   // estimate on the original samples
  double std = 0.0;  // population std over resampled estimates
};

/// Resamples both samples independently with replacement `resamples` times.
BootstrapResult bootstrap_std(const StatisticSample& real, const StatisticSample& synth,
                              std::int64_t bins = kDefaultBins, std::int64_t resamples = kDefaultResamples,
                              std::uint64_t seed = 0, double eps = kHistogramEps);

struct CoverageReport {
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> empty_classes;
};

CoverageReport coverage_from_labels(const torch::Tensor& predicted, std::int64_t num_classes);
CoverageReport coverage_histogram(Classifier& classifier, const torch::Tensor& samples);

struct MemoryReport {
  std::int64_t ours = 0;
  std::int64_t dts = 0;
  double ratio = 0.0;
};

MemoryReport memory_report(std::int64_t d, std::int64_t n);

/// Bar chart of counts (one bar per class) as a PNG.
void write_bar_chart(const std::vector<std::int64_t>& counts, const std::filesystem::path& path,
                     std::int64_t bar_width = 8, std::int64_t height = 120);

}  // namespace mtgan
