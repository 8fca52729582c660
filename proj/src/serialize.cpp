#include "mtgan/serialize.hpp"

namespace mtgan {

void to_json(Json& j, const LatentSpec& s) {
  j = Json{{"d_global", s.d_global}, {"d_local", s.d_local}, {"d_periodic", s.d_periodic},
           {"spatial", s.spatial},   {"ndim", s.ndim}};
}

void from_json(const Json& j, LatentSpec& s) {
  j.at("d_global").get_to(s.d_global);
  j.at("d_local").get_to(s.d_local);
  j.at("d_periodic").get_to(s.d_periodic);
  j.at("spatial").get_to(s.spatial);
  j.at("ndim").get_to(s.ndim);
}

void to_json(Json& j, const LayerSpec& s) {
  j = Json{{"out_channels", s.out_channels}, {"kernel", s.kernel},       {"stride", s.stride},
           {"padding", s.padding},           {"output_padding", s.output_padding}, {"batchnorm", s.batchnorm},
           {"spectral_norm", s.spectral_norm}, {"bias", s.bias}};
  if (s.declared_side) j["declared_side"] = *s.declared_side;
}

void from_json(const Json& j, LayerSpec& s) {
  j.at("out_channels").get_to(s.out_channels);
  j.at("kernel").get_to(s.kernel);
  j.at("stride").get_to(s.stride);
  j.at("padding").get_to(s.padding);
  j.at("output_padding").get_to(s.output_padding);
  j.at("batchnorm").get_to(s.batchnorm);
  j.at("spectral_norm").get_to(s.spectral_norm);
  j.at("bias").get_to(s.bias);
  if (j.contains("declared_side")) s.declared_side = j.at("declared_side").get<std::int64_t>();
}

void to_json(Json& j, const ArchitectureSpec& s) {
  j = Json{{"ndim", s.ndim},
           {"in_channels", s.in_channels},
           {"transposed", s.transposed},
           {"layers", s.layers},
           {"head", s.head},
           {"head_spectral_norm", s.head_spectral_norm},
           {"slope", s.slope},
           {"ref_input_side", s.ref_input_side}};
}

void from_json(const Json& j, ArchitectureSpec& s) {
  j.at("ndim").get_to(s.ndim);
  j.at("in_channels").get_to(s.in_channels);
  j.at("transposed").get_to(s.transposed);
  j.at("layers").get_to(s.layers);
  j.at("head").get_to(s.head);
  j.at("head_spectral_norm").get_to(s.head_spectral_norm);
  j.at("slope").get_to(s.slope);
  j.at("ref_input_side").get_to(s.ref_input_side);
}

void to_json(Json& j, const ModelArchitectures& s) {
  j = Json{{"generator", s.generator},
           {"encoder", s.encoder},
           {"disc_texture", s.disc_texture},
           {"disc_pair", s.disc_pair},
           {"disc_latent", s.disc_latent}};
}

void from_json(const Json& j, ModelArchitectures& s) {
  j.at("generator").get_to(s.generator);
  j.at("encoder").get_to(s.encoder);
  j.at("disc_texture").get_to(s.disc_texture);
  j.at("disc_pair").get_to(s.disc_pair);
  j.at("disc_latent").get_to(s.disc_latent);
}

void to_json(Json& j, const TrainingConfig& s) {
  j = Json{{"batch", s.batch},
           {"iterations", s.iterations},
           {"disc_steps_per_gen", s.disc_steps_per_gen},
           {"lr", s.optimizer.lr},
           {"adam_beta1", s.optimizer.beta1},
           {"adam_beta2", s.optimizer.beta2},
           {"weight_decay", s.optimizer.weight_decay},
           {"alpha1", s.weights.alpha1},
           {"alpha2", s.weights.alpha2},
           {"beta1", s.weights.beta1},
           {"beta2", s.weights.beta2},
           {"seed", s.seed},
           {"kl_weight", s.kl_weight},
           {"clamp_log_sigma", s.clamp_log_sigma},
           {"ablation", s.ablation == Ablation::psgan ? "psgan" : "full"},
           {"checkpoint_every", s.checkpoint_every}};
}

void from_json(const Json& j, TrainingConfig& s) {
  j.at("batch").get_to(s.batch);
  j.at("iterations").get_to(s.iterations);
  j.at("disc_steps_per_gen").get_to(s.disc_steps_per_gen);
  j.at("lr").get_to(s.optimizer.lr);
  j.at("adam_beta1").get_to(s.optimizer.beta1);
  j.at("adam_beta2").get_to(s.optimizer.beta2);
  j.at("weight_decay").get_to(s.optimizer.weight_decay);
  j.at("alpha1").get_to(s.weights.alpha1);
  j.at("alpha2").get_to(s.weights.alpha2);
  j.at("beta1").get_to(s.weights.beta1);
  j.at("beta2").get_to(s.weights.beta2);
  j.at("seed").get_to(s.seed);
  j.at("kl_weight").get_to(s.kl_weight);
  j.at("clamp_log_sigma").get_to(s.clamp_log_sigma);
  s.ablation = j.at("ablation").get<std::string>() == "psgan" ? Ablation::psgan : Ablation::full;
  j.at("checkpoint_every").get_to(s.checkpoint_every);
}

void to_json(Json& j, const LossRecord& r) {
  j = Json{{"iteration", r.iteration},     {"disc_texture", r.disc_texture}, {"disc_pair", r.disc_pair},
           {"disc_latent", r.disc_latent}, {"generator", r.generator},       {"encoder", r.encoder},
           {"kl", r.kl},                   {"seconds", r.seconds}};
}

}  // namespace mtgan
