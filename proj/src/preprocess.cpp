#include "tumorcast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tumorcast {

void InvasionImage::validate() const {
    for (const auto& ch : channels) ch.validate();
    if (!channels[0].same_grid(channels[1]) || !channels[0].same_grid(channels[2]))
        throw std::invalid_argument("InvasionImage: channel dims mismatch");
    for (float v : channels[0].data)
        if (v < 0.0f || v > 255.0f)
            throw std::invalid_argument("InvasionImage: SUV channel outside [0,255]");
    for (float v : channels[1].data)
        if (v < 0.0f || v > 100.0f)
            throw std::invalid_argument("InvasionImage: ICVF channel outside [0,100]");
    for (float v : channels[2].data)
        if (v != 0.0f && v != 255.0f)
            throw std::invalid_argument("InvasionImage: mask channel not binary");
}

Volume3D map_suv(const Volume3D& suv) {
    suv.validate();
    Volume3D out = suv;
    for (float& v : out.data) {
        if (!std::isfinite(v) || v < 0.0f)
            throw std::invalid_argument("map_suv: negative or non-finite SUV value");
        float w = std::clamp(100.0f * v, 100.0f, 2600.0f);
        v = (w - 100.0f) / 2500.0f * 255.0f;
    }
    return out;
}

Volume3D compute_icvf(const Volume3D& ct_post, const Volume3D& ct_pre,
                      double blood_post_mean, double blood_pre_mean, double hct,
                      const TumorMask& mask) {
    ct_post.validate();
    ct_pre.validate();
    mask.validate();
    if (!ct_post.same_grid(ct_pre) || !ct_post.same_grid(mask.volume))
        throw std::invalid_argument("compute_icvf: dims mismatch");
    double blood_delta = blood_post_mean - blood_pre_mean;
    if (blood_delta <= 0.0)
        throw std::invalid_argument("compute_icvf: degenerate blood pool (post <= pre)");
    if (!(hct > 0.0 && hct < 1.0))
        throw std::invalid_argument("compute_icvf: hct outside (0,1)");

    Volume3D out = Volume3D::zeros(ct_post.dims[0], ct_post.dims[1], ct_post.dims[2],
                                   ct_post.spacing);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (mask.volume.data[i] == 0.0f) continue;
        double icvf = 1.0 - (ct_post.data[i] - ct_pre.data[i]) / blood_delta * (1.0 - hct);
        out.data[i] = static_cast<float>(100.0 * std::clamp(icvf, 0.0, 1.0));
    }
    return out;
}

Volume3D encode_mask(const TumorMask& mask) {
    mask.validate();
    return mask.volume;
}

InvasionImage assemble_invasion_channels(const StudyTimepoint& tp, double blood_pre_mean,
                                         double blood_post_mean, double hct) {
    tp.validate();
    InvasionImage img{{map_suv(tp.suv),
                       compute_icvf(tp.ct_post, tp.ct_pre, blood_post_mean, blood_pre_mean, hct,
                                    tp.mask),
                       encode_mask(tp.mask)}};
    img.validate();
    return img;
}

}  // namespace tumorcast
