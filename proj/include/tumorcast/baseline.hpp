#pragma once

#include <array>
#include <vector>

#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Per-slice star-convex boundary model: radii at K uniform angles about
/// the slice centroid. Radii are voxel-center distances (the half-voxel
/// rasterization inflation is removed).
struct RadialProfile {
    std::array<double, 2> centroid{0, 0};
    std::vector<double> radii;
    bool empty = true;
};

RadialProfile radial_profile(const Volume3D& mask, int z, int rays = 72);

/// Linear growth extrapolation: per slice present at t2,
/// r3(theta) = max(0, 2*r2(theta) - r1(theta)) about the t2 centroid
/// (r1 = 0 where t1 has no tumor on that slice), rasterized back to a
/// binary mask.
TumorMask linear_predict(const TumorMask& mask_t1, const TumorMask& mask_t2, int rays = 72);

}  // namespace tumorcast
