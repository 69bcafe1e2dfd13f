#include "tumorcast/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tumorcast {

void SampleChannels::validate() const {
    if (channels.empty()) throw std::invalid_argument("SampleChannels: no channels");
    for (const auto& c : channels) {
        c.validate();
        if (!c.same_grid(channels.front()))
            throw std::invalid_argument("SampleChannels: dims mismatch");
    }
}

SampleChannels invasion_channels(const InvasionImage& img) {
    return {{img.channels[0], img.channels[1], img.channels[2]}};
}

SampleChannels expansion_channels(const ExpansionImage& img) {
    return {{img.channels[0], img.channels[1], img.channels[2], img.channels[3]}};
}

SampleChannels concat_channels(const SampleChannels& a, const SampleChannels& b) {
    SampleChannels out = a;
    out.channels.insert(out.channels.end(), b.channels.begin(), b.channels.end());
    out.validate();
    return out;
}

Box3 growth_zone(const TumorMask& mask, Vec3i n) {
    Box3 box = bounding_box(mask);
    const auto& d = mask.volume.dims;
    return {{std::max(0, box.lo[0] - n.x), std::max(0, box.lo[1] - n.y),
             std::max(0, box.lo[2] - n.z)},
            {std::min(d[0] - 1, box.hi[0] + n.x), std::min(d[1] - 1, box.hi[1] + n.y),
             std::min(d[2] - 1, box.hi[2] + n.z)}};
}

std::vector<float> extract_patch(const SampleChannels& channels, Vec3i center, int patch) {
    const Volume3D& ref = channels.channels.front();
    if (!ref.contains(center.x, center.y, center.z))
        throw std::invalid_argument("extract_patch: center outside volume");
    const int half = patch / 2;
    const int nc = int(channels.channels.size());
    std::vector<float> out(std::size_t(patch) * patch * nc, 0.0f);
    for (int dy = -half; dy <= half; ++dy) {
        int y = center.y + dy;
        for (int dx = -half; dx <= half; ++dx) {
            int x = center.x + dx;
            if (!ref.contains(x, y, center.z)) continue;
            std::size_t base = (std::size_t(dy + half) * patch + (dx + half)) * nc;
            for (int c = 0; c < nc; ++c)
                out[base + c] = channels.channels[c].at(x, y, center.z);
        }
    }
    return out;
}

PatchDataset sample_training_patches(const SampleChannels& channels, const TumorMask& current_mask,
                                     const TumorMask& next_mask, double negative_ratio,
                                     std::uint32_t seed, int patch, Vec3i halfspan) {
    channels.validate();
    if (!channels.channels.front().same_grid(next_mask.volume) ||
        !current_mask.volume.same_grid(next_mask.volume))
        throw std::invalid_argument("sample_training_patches: dims mismatch");
    if (negative_ratio < 0) throw std::invalid_argument("sample_training_patches: ratio < 0");

    auto c = mask_centroid(current_mask);
    Vec3i anchor{int(std::lround(c[0])), int(std::lround(c[1])), int(std::lround(c[2]))};
    const auto& d = current_mask.volume.dims;
    int x0 = std::max(0, anchor.x - halfspan.x), x1 = std::min(d[0] - 1, anchor.x + halfspan.x);
    int y0 = std::max(0, anchor.y - halfspan.y), y1 = std::min(d[1] - 1, anchor.y + halfspan.y);
    int z0 = std::max(0, anchor.z - halfspan.z), z1 = std::min(d[2] - 1, anchor.z + halfspan.z);

    std::vector<Vec3i> positives, negatives;
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                (next_mask.foreground(x, y, z) ? positives : negatives).push_back({x, y, z});
    if (positives.empty())
        throw std::runtime_error("sample_training_patches: no positive candidates");

    // Seeded uniform under-sampling of the negatives; canonical scan
    // order is restored afterwards so the draw, not the shuffle, is the
    // only source of randomness in the output.
    std::size_t keep = std::min(negatives.size(),
                                std::size_t(std::llround(negative_ratio * positives.size())));
    std::mt19937 rng(seed);
    std::shuffle(negatives.begin(), negatives.end(), rng);
    negatives.resize(keep);
    std::sort(negatives.begin(), negatives.end(), [&](const Vec3i& a, const Vec3i& b) {
        return current_mask.volume.index(a.x, a.y, a.z) < current_mask.volume.index(b.x, b.y, b.z);
    });

    PatchDataset ds;
    ds.patch = patch;
    ds.channels = int(channels.channels.size());
    auto add = [&](const Vec3i& p, std::uint8_t label) {
        auto v = extract_patch(channels, p, patch);
        ds.data.insert(ds.data.end(), v.begin(), v.end());
        ds.labels.push_back(label);
        ds.centers.push_back(p);
    };
    for (const auto& p : positives) add(p, 1);
    for (const auto& p : negatives) add(p, 0);
    return ds;
}

std::vector<float> compute_mean_patch(const PatchDataset& ds) {
    if (ds.count() == 0) throw std::invalid_argument("compute_mean_patch: empty dataset");
    std::vector<double> acc(ds.patch_size(), 0.0);
    for (std::size_t s = 0; s < ds.count(); ++s) {
        const float* p = &ds.data[s * ds.patch_size()];
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
    }
    std::vector<float> mean(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = float(acc[i] / double(ds.count()));
    return mean;
}

void subtract_mean(std::vector<float>& patch, const std::vector<float>& mean) {
    if (patch.size() != mean.size()) throw std::invalid_argument("subtract_mean: size mismatch");
    for (std::size_t i = 0; i < patch.size(); ++i) patch[i] -= mean[i];
}

Tensor4<float> make_batch(const PatchDataset& ds, const std::vector<std::size_t>& indices,
                          const std::vector<float>& mean, std::vector<int>& labels_out) {
    if (mean.size() != ds.patch_size()) throw std::invalid_argument("make_batch: mean size");
    Tensor4<float> batch = Tensor4<float>::zeros(int(indices.size()), ds.patch, ds.patch,
                                                 ds.channels);
    labels_out.resize(indices.size());
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const float* src = &ds.data[indices[b] * ds.patch_size()];
        float* dst = &batch.data[b * ds.patch_size()];
        for (std::size_t i = 0; i < ds.patch_size(); ++i) dst[i] = src[i] - mean[i];
        labels_out[b] = ds.labels[indices[b]];
    }
    return batch;
}

}  // namespace tumorcast
