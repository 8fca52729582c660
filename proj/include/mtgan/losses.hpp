#pragma once

#include <torch/torch.h>

namespace mtgan {

/// Probability clamp applied before every log.
inline constexpr double kProbEps = 1e-7;

struct LossWeights {
  double alpha1 = 1.0;  // generator: texture term
  double alpha2 = 1.0;  // generator: pair term
  double beta1 = 1.0;   // encoder: latent term
  double beta2 = 1.0;   // encoder: pair term
};

/// mean over the batch of the per-element grid mean of log(p), p clamped to [eps, 1 - eps].
torch::Tensor mean_log(const torch::Tensor& probs);
/// Same for log(1 - p).
torch::Tensor mean_log1m(const torch::Tensor& probs);

/// -mean log D(real) - mean log(1 - D(prior)) - mean log(1 - D(recon)).
/// An undefined `recon` drops the last term (prior-only training).
torch::Tensor loss_disc_texture(const torch::Tensor& real, const torch::Tensor& prior, const torch::Tensor& recon);

/// -mean log D(real pair) - mean log(1 - D(fake pair)).
torch::Tensor loss_disc_pair(const torch::Tensor& real_pair, const torch::Tensor& fake_pair);

/// -mean log D(prior z) - mean log(1 - D(encoder z)).
torch::Tensor loss_disc_latent(const torch::Tensor& prior, const torch::Tensor& encoded);

/// Texture part of the generator objective: -mean log D(prior) - mean log D(recon).
torch::Tensor loss_texture_adv(const torch::Tensor& prior, const torch::Tensor& recon);
/// Pair part shared by generator and encoder: -mean log D(x, reconstruction).
torch::Tensor loss_pair_adv(const torch::Tensor& fake_pair);
/// Latent part of the encoder objective: -mean log D(encoder z).
torch::Tensor loss_latent_adv(const torch::Tensor& encoded);

/// alpha1 * L_x + alpha2 * L_xx. An undefined `fake_pair` drops the pair term.
torch::Tensor loss_generator(const torch::Tensor& prior, const torch::Tensor& recon, const torch::Tensor& fake_pair,
                             const LossWeights& w = {});

/// beta1 * L_z + beta2 * L_xx.
torch::Tensor loss_encoder(const torch::Tensor& encoded, const torch::Tensor& fake_pair, const LossWeights& w = {});

/// Batch mean of KL(N(mu, sigma^2) || N(0, I)) = 1/2 sum_k (mu^2 + sigma^2 - 1 - 2 log sigma).
torch::Tensor kl_regularizer(const torch::Tensor& mu, const torch::Tensor& log_sigma);

}  // namespace mtgan
