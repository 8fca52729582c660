#include "mtgan/losses.hpp"

namespace mtgan {

namespace {

// grid mean first, then batch mean
torch::Tensor grid_then_batch_mean(const torch::Tensor& v) {
  if (v.dim() <= 1) return v.mean();
  return v.flatten(1).mean(1).mean(0);
}

}  // namespace

torch::Tensor mean_log(const torch::Tensor& probs) {
  return grid_then_batch_mean(torch::log(probs.clamp(kProbEps, 1.0 - kProbEps)));
}

torch::Tensor mean_log1m(const torch::Tensor& probs) {
  return grid_then_batch_mean(torch::log1p(-probs.clamp(kProbEps, 1.0 - kProbEps)));
}

torch::Tensor loss_disc_texture(const torch::Tensor& real, const torch::Tensor& prior, const torch::Tensor& recon) {
  auto loss = -mean_log(real) - mean_log1m(prior);
  if (recon.defined()) loss = loss - mean_log1m(recon);
  return loss;
}

torch::Tensor loss_disc_pair(const torch::Tensor& real_pair, const torch::Tensor& fake_pair) {
  return -mean_log(real_pair) - mean_log1m(fake_pair);
}

torch::Tensor loss_disc_latent(const torch::Tensor& prior, const torch::Tensor& encoded) {
  return -mean_log(prior) - mean_log1m(encoded);
}

torch::Tensor loss_texture_adv(const torch::Tensor& prior, const torch::Tensor& recon) {
  auto loss = -mean_log(prior);
  if (recon.defined()) loss = loss - mean_log(recon);
  return loss;
}

torch::Tensor loss_pair_adv(const torch::Tensor& fake_pair) { return -mean_log(fake_pair); }

torch::Tensor loss_latent_adv(const torch::Tensor& encoded) { return -mean_log(encoded); }

torch::Tensor loss_generator(const torch::Tensor& prior, const torch::Tensor& recon, const torch::Tensor& fake_pair,
                             const LossWeights& w) {
  auto loss = w.alpha1 * loss_texture_adv(prior, recon);
  if (fake_pair.defined()) loss = loss + w.alpha2 * loss_pair_adv(fake_pair);
  return loss;
}

torch::Tensor loss_encoder(const torch::Tensor& encoded, const torch::Tensor& fake_pair, const LossWeights& w) {
  return w.beta1 * loss_latent_adv(encoded) + w.beta2 * loss_pair_adv(fake_pair);
}

torch::Tensor kl_regularizer(const torch::Tensor& mu, const torch::Tensor& log_sigma) {
  auto per = 0.5 * (mu.square() + torch::exp(2.0 * log_sigma) - 1.0 - 2.0 * log_sigma);
  return per.flatten(1).sum(1).mean(0);
}

}  // namespace mtgan
