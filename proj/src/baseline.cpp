#include "tumorcast/baseline.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tumorcast {

namespace {

float sample_slice(const Volume3D& v, double x, double y, int z) {
    if (x < 0 || y < 0 || x > v.dims[0] - 1 || y > v.dims[1] - 1) return 0.0f;
    int x0 = int(x), y0 = int(y);
    int x1 = std::min(x0 + 1, v.dims[0] - 1), y1 = std::min(y0 + 1, v.dims[1] - 1);
    double fx = x - x0, fy = y - y0;
    return float((1 - fy) * ((1 - fx) * v.at(x0, y0, z) + fx * v.at(x1, y0, z)) +
                 fy * ((1 - fx) * v.at(x0, y1, z) + fx * v.at(x1, y1, z)));
}

}  // namespace

RadialProfile radial_profile(const Volume3D& mask, int z, int rays) {
    RadialProfile prof;
    prof.radii.assign(std::size_t(rays), 0.0);

    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (int y = 0; y < mask.dims[1]; ++y)
        for (int x = 0; x < mask.dims[0]; ++x)
            if (mask.at(x, y, z) != 0.0f) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) return prof;
    prof.empty = false;
    prof.centroid = {sx / double(n), sy / double(n)};

    const double max_r = std::hypot(double(mask.dims[0]), double(mask.dims[1]));
    const double step = 0.05;
    for (int k = 0; k < rays; ++k) {
        double th = 2.0 * std::numbers::pi * k / rays;
        double cx = std::cos(th), cy = std::sin(th);
        double prev = sample_slice(mask, prof.centroid[0], prof.centroid[1], z);
        if (prev < 127.5f) continue;  // centroid outside (non-star shape): radius 0
        double crossing = 0.0;
        for (double s = step; s <= max_r; s += step) {
            double cur = sample_slice(mask, prof.centroid[0] + s * cx, prof.centroid[1] + s * cy, z);
            if (cur < 127.5) {
                // linear interpolation of the 50% crossing inside the step
                crossing = s - step + step * (prev - 127.5) / (prev - cur);
                break;
            }
            prev = cur;
        }
        // The bilinear 50% crossing of a rasterized solid tracks the
        // continuous boundary closely (footprint inflation and bilinear
        // smoothing cancel), so the crossing is used as-is.
        prof.radii[std::size_t(k)] = crossing;
    }
    return prof;
}

TumorMask linear_predict(const TumorMask& mask_t1, const TumorMask& mask_t2, int rays) {
    if (!mask_t1.volume.same_grid(mask_t2.volume))
        throw std::invalid_argument("linear_predict: dims mismatch");
    if (foreground_count(mask_t2) == 0) throw std::invalid_argument("linear_predict: empty t2");

    const auto& d = mask_t2.volume.dims;
    TumorMask out{Volume3D::zeros(d[0], d[1], d[2], mask_t2.volume.spacing)};

    for (int z = 0; z < d[2]; ++z) {
        RadialProfile p2 = radial_profile(mask_t2.volume, z, rays);
        if (p2.empty) continue;  // slices absent at t2 stay empty
        RadialProfile p1 = radial_profile(mask_t1.volume, z, rays);

        std::vector<double> r3(std::size_t(rays), 0.0);
        for (int k = 0; k < rays; ++k) {
            double r1 = p1.empty ? 0.0 : p1.radii[std::size_t(k)];
            double r2 = p2.radii[std::size_t(k)];
            r3[std::size_t(k)] = std::max(0.0, 2.0 * r2 - r1);
        }

        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                double dx = x - p2.centroid[0], dy = y - p2.centroid[1];
                double r = std::hypot(dx, dy);
                double th = std::atan2(dy, dx);
                if (th < 0) th += 2.0 * std::numbers::pi;
                double fk = th / (2.0 * std::numbers::pi) * rays;
                int k0 = int(fk) % rays;
                int k1 = (k0 + 1) % rays;
                double f = fk - int(fk);
                double rpred = (1.0 - f) * r3[std::size_t(k0)] + f * r3[std::size_t(k1)];
                if (r <= rpred + 1e-9) out.volume.at(x, y, z) = 255.0f;
            }
    }
    return out;
}

}  // namespace tumorcast
