#pragma once

#include <vector>

#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Simple 2-D float image, row-major.
struct Image2D {
    int w = 0, h = 0;
    std::vector<float> pix;

    static Image2D zeros(int w, int h) { return {w, h, std::vector<float>(std::size_t(w) * h, 0.0f)}; }
    float& at(int x, int y) { return pix[std::size_t(y) * w + x]; }
    float at(int x, int y) const { return pix[std::size_t(y) * w + x]; }
};

/// Dense displacement field for one axial slice: I1(p) ~ I2(p + (u,v)(p)).
struct FlowSlice {
    int w = 0, h = 0;
    std::vector<float> u, v;
};

/// Per-slice flow for a whole volume (one entry per z).
struct FlowField2D {
    std::vector<FlowSlice> slices;
};

struct FlowParams {
    double pyramid_factor = 0.5;
    int warps_per_level = 5;
    double alpha = 10.0;            // smoothness weight
    int fixed_point_iters = 20;
    int solver_sweeps = 5;          // SOR sweeps per fixed-point iteration
    double sor_omega = 1.9;
    double data_eps = 0.1;          // Charbonnier eps, intensity units (0..255 scale)
    double smooth_eps = 0.05;       // Charbonnier eps, voxels of flow gradient
    int min_pyramid_size = 16;
    double presmooth_sigma = 1.0;   // applied to the binary masks
};

Image2D gaussian_blur(const Image2D& img, double sigma);

/// Coarse-to-fine warping variational flow between two single-slice images.
FlowSlice estimate_flow_slice(const Image2D& from, const Image2D& to, const FlowParams& params);

/// Per-axial-slice flow between two aligned mask volumes (t1 -> t2).
/// Masks are Gaussian-smoothed internally before estimation.
FlowField2D estimate_flow(const TumorMask& mask_t1, const TumorMask& mask_t2,
                          const FlowParams& params = {});

/// q-th percentile (q in [0,1]) of flow magnitude over all slices.
float flow_percentile_magnitude(const FlowField2D& flow, double q = 0.99);

}  // namespace tumorcast
