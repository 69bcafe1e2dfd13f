#pragma once

#include <array>

#include "tumorcast/case.hpp"
#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Invasion-stream input: scaled SUV in [0,255], scaled ICVF in [0,100],
/// binary mask in {0,255}, in that fixed channel order.
struct InvasionImage {
    std::array<Volume3D, 3> channels;

    void validate() const;  // dims equal + per-channel range checks
};

/// SUV -> ConvNet range: v' = clamp(100*v, 100, 2600) mapped affinely to [0,255].
Volume3D map_suv(const Volume3D& suv);

/// ICVF from dual-phase CT enhancement relative to the blood pool,
/// clamped to [0,1] and scaled by 100 inside the mask; 0 outside.
Volume3D compute_icvf(const Volume3D& ct_post, const Volume3D& ct_pre,
                      double blood_post_mean, double blood_pre_mean, double hct,
                      const TumorMask& mask);

/// Validated pass-through of the {0,255} mask channel.
Volume3D encode_mask(const TumorMask& mask);

InvasionImage assemble_invasion_channels(const StudyTimepoint& tp, double blood_pre_mean,
                                         double blood_post_mean, double hct);

}  // namespace tumorcast
