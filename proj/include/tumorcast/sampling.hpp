#pragma once

#include <cstdint>
#include <vector>

#include "tumorcast/motion.hpp"
#include "tumorcast/nnet.hpp"
#include "tumorcast/preprocess.hpp"
#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Co-registered input channels a patch is cut from (3, 4 or 7 volumes).
struct SampleChannels {
    std::vector<Volume3D> channels;

    void validate() const;  // nonempty, shared dims
};

SampleChannels invasion_channels(const InvasionImage& img);
SampleChannels expansion_channels(const ExpansionImage& img);
/// Channel stacking (early fusion): a followed by b.
SampleChannels concat_channels(const SampleChannels& a, const SampleChannels& b);

/// Labeled patch set; patch data is HWC float, one row per sample.
struct PatchDataset {
    int patch = 17;
    int channels = 0;
    std::vector<float> data;           // count * patch * patch * channels
    std::vector<std::uint8_t> labels;  // {0,1}
    std::vector<Vec3i> centers;

    std::size_t count() const { return labels.size(); }
    std::size_t patch_size() const { return std::size_t(patch) * patch * channels; }
};

/// Tumor bounding box expanded by n voxels per axis, clipped to the grid.
Box3 growth_zone(const TumorMask& mask, Vec3i n = {3, 3, 3});

/// Axial in-plane crop centered at `center`; out-of-volume voxels are
/// zero-padded. Throws if the center itself is outside the volume.
std::vector<float> extract_patch(const SampleChannels& channels, Vec3i center, int patch = 17);

/// Candidate centers are every voxel of the +-halfspan box around the
/// rounded current-mask centroid (clipped to the grid); the label is the
/// next-timepoint mask at the center. All positives are kept; negatives
/// are under-sampled (seeded, uniform) to negative_ratio * positives.
PatchDataset sample_training_patches(const SampleChannels& channels, const TumorMask& current_mask,
                                     const TumorMask& next_mask, double negative_ratio,
                                     std::uint32_t seed, int patch = 17,
                                     Vec3i halfspan = {15, 15, 15});

/// Per-element mean over all patches. Throws on an empty set.
std::vector<float> compute_mean_patch(const PatchDataset& ds);

void subtract_mean(std::vector<float>& patch, const std::vector<float>& mean);

/// Mean-centered mini-batch tensor for the given sample indices.
Tensor4<float> make_batch(const PatchDataset& ds, const std::vector<std::size_t>& indices,
                          const std::vector<float>& mean, std::vector<int>& labels_out);

}  // namespace tumorcast
