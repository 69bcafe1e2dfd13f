#include "tumorcast/motion.hpp"

#include <stdexcept>

#include "tumorcast/flowcolor.hpp"

namespace tumorcast {

void ExpansionImage::validate() const {
    for (const auto& ch : channels) ch.validate();
    for (int c = 1; c < 4; ++c)
        if (!channels[0].same_grid(channels[c]))
            throw std::invalid_argument("ExpansionImage: channel dims mismatch");
    for (int c = 0; c < 3; ++c)
        for (float v : channels[c].data)
            if (v < 0.0f || v > 255.0f)
                throw std::invalid_argument("ExpansionImage: flow channel outside [0,255]");
    for (float v : channels[3].data)
        if (v != 0.0f && v != 85.0f && v != 170.0f && v != 255.0f)
            throw std::invalid_argument("ExpansionImage: growth map value outside {0,85,170,255}");
}

Volume3D build_growth_map(const TumorMask& mask_t1, const TumorMask& mask_t2) {
    if (!mask_t1.volume.same_grid(mask_t2.volume))
        throw std::invalid_argument("build_growth_map: dims mismatch");
    const auto& a = mask_t1.volume;
    const auto& b = mask_t2.volume;
    Volume3D out = Volume3D::zeros(a.dims[0], a.dims[1], a.dims[2], a.spacing);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        bool in1 = a.data[i] != 0.0f, in2 = b.data[i] != 0.0f;
        out.data[i] = in1 && in2 ? 255.0f : (!in1 && in2 ? 170.0f : (in1 ? 85.0f : 0.0f));
    }
    return out;
}

ExpansionImage assemble_expansion_channels(const TumorMask& mask_t1, const TumorMask& mask_t2,
                                           const FlowParams& params,
                                           std::optional<float> max_magnitude) {
    mask_t1.validate();
    mask_t2.validate();
    FlowField2D flow = estimate_flow(mask_t1, mask_t2, params);

    float maxmag = max_magnitude.value_or(flow_percentile_magnitude(flow, 0.99));
    if (maxmag <= 0.0f) maxmag = 1.0f;  // identity pair: any scale keeps zero flow white

    const auto& d = mask_t1.volume.dims;
    ExpansionImage img;
    img.max_magnitude = maxmag;
    for (int c = 0; c < 3; ++c)
        img.channels[c] = Volume3D::zeros(d[0], d[1], d[2], mask_t1.volume.spacing);
    for (int z = 0; z < d[2]; ++z) {
        auto planes = encode_flow_color(flow.slices[z], maxmag);
        std::size_t base = std::size_t(z) * d[0] * d[1];
        for (int c = 0; c < 3; ++c)
            std::copy(planes[c].begin(), planes[c].end(), img.channels[c].data.begin() + base);
    }
    img.channels[3] = build_growth_map(mask_t1, mask_t2);
    img.validate();
    return img;
}

}  // namespace tumorcast
