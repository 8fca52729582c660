#pragma once

#include "mtgan/latent.hpp"
#include "mtgan/networks.hpp"
#include "mtgan/training.hpp"

#include <json.hpp>

namespace mtgan {

using Json = nlohmann::json;

void to_json(Json& j, const LatentSpec& s);
void from_json(const Json& j, LatentSpec& s);
void to_json(Json& j, const LayerSpec& s);
void from_json(const Json& j, LayerSpec& s);
void to_json(Json& j, const ArchitectureSpec& s);
void from_json(const Json& j, ArchitectureSpec& s);
void to_json(Json& j, const ModelArchitectures& s);
void from_json(const Json& j, ModelArchitectures& s);
void to_json(Json& j, const TrainingConfig& s);
void from_json(const Json& j, TrainingConfig& s);
void to_json(Json& j, const LossRecord& r);

}  // namespace mtgan
