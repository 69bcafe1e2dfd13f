#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "tumorcast/nnet.hpp"

namespace tumorcast {

/// Frozen training state: architecture, weights, optimizer momentum, and
/// the training mean patch (subtracted identically at predict time).
struct Checkpoint {
    nlohmann::json model;  // PatchClassifier spec json
    int epoch = 0;
    std::uint32_t seed = 0;
    std::vector<std::vector<float>> weights;   // one blob per parameter tensor
    std::vector<std::vector<float>> momentum;  // same shapes
    std::vector<float> mean_patch;
};

Checkpoint snapshot_model(PatchClassifier<float>& model, int epoch, std::uint32_t seed,
                          const std::vector<float>& mean_patch);

/// Rebuilds the architecture and installs weights/momentum.
std::unique_ptr<PatchClassifier<float>> model_from_checkpoint(const Checkpoint& ckpt);

/// Writes `<stem>.ckpt.json` + `<stem>.ckpt.raw` (little-endian float32:
/// weights in parameter order, then momentum, then mean patch).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

}  // namespace tumorcast
