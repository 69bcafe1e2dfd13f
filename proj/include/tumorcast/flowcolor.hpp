#pragma once

#include <array>
#include <vector>

#include "tumorcast/flow.hpp"

namespace tumorcast {

/// Middlebury-style color wheel: 55 hue anchors, each an RGB triple in [0,1].
std::vector<std::array<float, 3>> make_color_wheel();

/// Encode one displacement as an RGB triple in [0,255]. Hue encodes
/// orientation, saturation encodes magnitude/max_magnitude (clamped to 1);
/// zero flow is white.
std::array<float, 3> flow_to_color(float u, float v, float max_magnitude);

/// Per-pixel color planes (R,G,B), each w*h floats in [0,255].
std::array<std::vector<float>, 3> encode_flow_color(const FlowSlice& flow, float max_magnitude);

}  // namespace tumorcast
