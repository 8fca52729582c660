#pragma once

#include "mtgan/data.hpp"
#include "mtgan/losses.hpp"
#include "mtgan/networks.hpp"
#include "mtgan/rng.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mtgan {

enum class Ablation { full, psgan };

struct OptimizerConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
};

struct TrainingConfig {
  std::int64_t batch = 64;
  std::int64_t iterations = 1000;
  std::int64_t disc_steps_per_gen = 1;
  OptimizerConfig optimizer;
  LossWeights weights;
  std::uint64_t seed = 0;
  double kl_weight = 0.0;  // 0 disables the KL regularizer
  bool clamp_log_sigma = false;
  Ablation ablation = Ablation::full;
  std::int64_t checkpoint_every = 0;  // 0: initial and final checkpoints only

  /// batch 64 / 8 and learning rate 2e-4 / 1e-4 for 2D / 3D.
  static TrainingConfig defaults(int ndim);
  void validate() const;
};

/// Losses of one step; networks absent from the ablation report 0.
struct LossRecord {
  std::int64_t iteration = 0;
  double disc_texture = 0.0;  // L_d^x
  double disc_pair = 0.0;     // L_d^xx
  double disc_latent = 0.0;   // L_d^z
  double generator = 0.0;     // L_g
  double encoder = 0.0;       // L_e (including the KL term when enabled)
  double kl = 0.0;
  double seconds = 0.0;

  bool finite() const;
};

/// Loss tensors of one forward pass over a pair batch, with graphs attached.
struct StepLosses {
  torch::Tensor disc_texture;
  torch::Tensor disc_pair;
  torch::Tensor disc_latent;
  torch::Tensor generator;
  torch::Tensor encoder;
  torch::Tensor kl;
};

/// One forward pass of the training objective: prior codes and encoder codes are generated with
/// shared per-element local noise and phases, the texture discriminator sees [real, prior, recon]
/// in one batch, the pair discriminator embeds [x, x_bar, recon] once and scores (x, x_bar) and
/// (x, recon). Training-mode spectral-norm updates happen once per discriminator.
StepLosses compute_losses(ModelBundle& bundle, const torch::Tensor& x, const torch::Tensor& x_bar, at::Generator& gen,
                          const TrainingConfig& config);

/// Optimizers and random state of a training run over a bundle.
class Trainer {
 public:
  Trainer(ModelBundle& bundle, TrainingConfig config);

  /// One update; throws NumericalError (leaving parameters untouched) if a loss is not finite.
  LossRecord step(const PairBatch& batch);
  /// Samples a batch from `dataset` with the run's data stream, then steps.
  LossRecord step(const TextureDataset& dataset);

  std::int64_t iteration() const { return iteration_; }
  const TrainingConfig& config() const { return config_; }
  ModelBundle& bundle() { return bundle_; }
  at::Generator& latent_generator() { return latent_gen_; }
  HostRng& data_rng() { return data_rng_; }

  void save(const std::filesystem::path& path) const;
  /// Restores parameters, buffers, optimizer state, iteration and random state.
  void load(const std::filesystem::path& path);

 private:
  void apply(torch::optim::Optimizer& opt, torch::nn::Module& module, const torch::Tensor& loss, bool retain);

  ModelBundle& bundle_;
  TrainingConfig config_;
  std::vector<std::unique_ptr<torch::optim::Adam>> optims_;  // bundle.modules() order
  at::Generator latent_gen_;
  HostRng data_rng_;
  std::int64_t iteration_ = 0;
};

struct TrainOptions {
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> resume;
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  std::vector<LossRecord> records;
  std::vector<std::filesystem::path> checkpoints;
};

/// Runs `config.iterations` steps (continuing from `resume` if given). Writes `metrics.csv` and
/// checkpoints `ckpt_<iteration>.pt` to the output directory: one before the first step, every
/// `checkpoint_every` steps, and after the last step. On a numerical failure the last good state
/// is saved as `ckpt_last_good.pt` and the error is rethrown.
TrainResult train(ModelBundle& bundle, const TextureDataset& dataset, const TrainingConfig& config,
                  const TrainOptions& options);

/// Moving average with the given window of a loss column.
std::vector<double> smoothed(const std::vector<double>& values, std::size_t window);

void write_metrics_header(const std::filesystem::path& csv);
void append_metrics(const std::filesystem::path& csv, const LossRecord& r);

// ---------------------------------------------------------------------------
// checkpoints

inline constexpr const char* kCheckpointFormat = "mtgan-checkpoint-v1";

struct CheckpointInfo {
  LatentSpec latent;
  ModelArchitectures arch;
  TrainingConfig config;
  std::int64_t iteration = 0;
};

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
/// Rebuilds the bundle stored in a checkpoint (parameters and buffers; optimizer state ignored).
ModelBundle load_bundle(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace mtgan
