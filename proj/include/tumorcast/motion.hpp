#pragma once

#include <array>
#include <optional>

#include "tumorcast/flow.hpp"
#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Expansion-stream input: color-coded flow (R,G,B in [0,255]) plus the
/// 4-level growth map, in that fixed channel order.
struct ExpansionImage {
    std::array<Volume3D, 4> channels;
    float max_magnitude = 0.0f;  // normalization used for the color coding

    void validate() const;
};

/// Two-timepoint set classification: overlap 255, newly grown 170,
/// shrink 85, background 0.
Volume3D build_growth_map(const TumorMask& mask_t1, const TumorMask& mask_t2);

/// Flow t1->t2, color coded (max_magnitude defaults to the case's 99th
/// percentile flow magnitude), stacked with the growth map from the
/// unsmoothed masks.
ExpansionImage assemble_expansion_channels(const TumorMask& mask_t1, const TumorMask& mask_t2,
                                           const FlowParams& params = {},
                                           std::optional<float> max_magnitude = {});

}  // namespace tumorcast
