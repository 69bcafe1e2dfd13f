#include "tumorcast/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tumorcast/parallel.hpp"

namespace tumorcast {

namespace {

float sample_bilinear(const Image2D& img, float x, float y) {
    x = std::clamp(x, 0.0f, float(img.w - 1));
    y = std::clamp(y, 0.0f, float(img.h - 1));
    int x0 = std::min(int(x), img.w - 2 >= 0 ? img.w - 2 : 0);
    int y0 = std::min(int(y), img.h - 2 >= 0 ? img.h - 2 : 0);
    if (img.w == 1) x0 = 0;
    if (img.h == 1) y0 = 0;
    int x1 = std::min(x0 + 1, img.w - 1);
    int y1 = std::min(y0 + 1, img.h - 1);
    float fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
           fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

Image2D resize_bilinear(const Image2D& img, int nw, int nh) {
    Image2D out = Image2D::zeros(nw, nh);
    float sx = float(img.w) / nw, sy = float(img.h) / nh;
    for (int y = 0; y < nh; ++y)
        for (int x = 0; x < nw; ++x)
            out.at(x, y) = sample_bilinear(img, (x + 0.5f) * sx - 0.5f, (y + 0.5f) * sy - 0.5f);
    return out;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// One coarse-to-fine level: incremental Charbonnier-robust estimation
// with lagged nonlinearity and Gauss-Seidel sweeps.
void solve_level(const Image2D& i1, const Image2D& i2, std::vector<float>& u,
                 std::vector<float>& v, const FlowParams& p) {
    const int w = i1.w, h = i1.h;
    const std::size_t npix = std::size_t(w) * h;
    const float deps2 = float(p.data_eps * p.data_eps);
    const float seps2 = float(p.smooth_eps * p.smooth_eps);
    const float alpha = float(p.alpha);
    const float omega = float(p.sor_omega);

    std::vector<float> ix(npix), iy(npix), it(npix), du(npix), dv(npix), psi_d(npix), psi_s(npix);
    Image2D i2w = Image2D::zeros(w, h);

    auto idx = [&](int x, int y) { return std::size_t(y) * w + x; };

    for (int warp = 0; warp < p.warps_per_level; ++warp) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                i2w.at(x, y) = sample_bilinear(i2, x + u[idx(x, y)], y + v[idx(x, y)]);

        // Derivatives: average of the two frames, central differences.
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
                int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
                float gx1 = 0.5f * (i1.at(xp, y) - i1.at(xm, y));
                float gx2 = 0.5f * (i2w.at(xp, y) - i2w.at(xm, y));
                float gy1 = 0.5f * (i1.at(x, yp) - i1.at(x, ym));
                float gy2 = 0.5f * (i2w.at(x, yp) - i2w.at(x, ym));
                ix[idx(x, y)] = 0.5f * (gx1 + gx2);
                iy[idx(x, y)] = 0.5f * (gy1 + gy2);
                it[idx(x, y)] = i2w.at(x, y) - i1.at(x, y);
            }

        std::fill(du.begin(), du.end(), 0.0f);
        std::fill(dv.begin(), dv.end(), 0.0f);

        for (int fp = 0; fp < p.fixed_point_iters; ++fp) {
            for (std::size_t i = 0; i < npix; ++i) {
                float r = it[i] + ix[i] * du[i] + iy[i] * dv[i];
                psi_d[i] = 1.0f / std::sqrt(r * r + deps2);
            }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
                    int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
                    auto tu = [&](int xx, int yy) { return u[idx(xx, yy)] + du[idx(xx, yy)]; };
                    auto tv = [&](int xx, int yy) { return v[idx(xx, yy)] + dv[idx(xx, yy)]; };
                    float ux = 0.5f * (tu(xp, y) - tu(xm, y)), uy = 0.5f * (tu(x, yp) - tu(x, ym));
                    float vx = 0.5f * (tv(xp, y) - tv(xm, y)), vy = 0.5f * (tv(x, yp) - tv(x, ym));
                    psi_s[idx(x, y)] =
                        1.0f / std::sqrt(ux * ux + uy * uy + vx * vx + vy * vy + seps2);
                }

            for (int sweep = 0; sweep < p.solver_sweeps; ++sweep) {
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        std::size_t i = idx(x, y);
                        float sum_w = 0.0f, sum_u = 0.0f, sum_v = 0.0f;
                        const int nx[4] = {x - 1, x + 1, x, x};
                        const int ny[4] = {y, y, y - 1, y + 1};
                        for (int k = 0; k < 4; ++k) {
                            if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                            std::size_t j = idx(nx[k], ny[k]);
                            float wij = alpha * 0.5f * (psi_s[i] + psi_s[j]);
                            sum_w += wij;
                            sum_u += wij * (u[j] + du[j] - u[i]);
                            sum_v += wij * (v[j] + dv[j] - v[i]);
                        }
                        float pd = psi_d[i];
                        float a11 = pd * ix[i] * ix[i] + sum_w;
                        float a22 = pd * iy[i] * iy[i] + sum_w;
                        float a12 = pd * ix[i] * iy[i];
                        float b1 = -pd * ix[i] * it[i] + sum_u;
                        float b2 = -pd * iy[i] * it[i] + sum_v;
                        // 2x2 solve for (du, dv) jointly at this pixel.
                        float det = a11 * a22 - a12 * a12;
                        if (std::abs(det) > 1e-12f) {
                            float nu = (b1 * a22 - a12 * b2) / det;
                            float nv = (a11 * b2 - a12 * b1) / det;
                            du[i] += omega * (nu - du[i]);
                            dv[i] += omega * (nv - dv[i]);
                        }
                    }
            }
        }
        for (std::size_t i = 0; i < npix; ++i) {
            u[i] += du[i];
            v[i] += dv[i];
        }
    }
}

}  // namespace

Image2D gaussian_blur(const Image2D& img, double sigma) {
    if (sigma <= 0.0) return img;
    int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    float sum = 0.0f;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(float(-0.5 * i * i / (sigma * sigma)));
        sum += kernel[i + radius];
    }
    for (float& k : kernel) k /= sum;

    Image2D tmp = Image2D::zeros(img.w, img.h);
    Image2D out = Image2D::zeros(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at(clampi(x + i, 0, img.w - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(x, clampi(y + i, 0, img.h - 1));
            out.at(x, y) = acc;
        }
    return out;
}

FlowSlice estimate_flow_slice(const Image2D& from, const Image2D& to, const FlowParams& p) {
    if (from.w != to.w || from.h != to.h)
        throw std::invalid_argument("estimate_flow_slice: dims mismatch");
    for (float v : from.pix)
        if (!std::isfinite(v)) throw std::invalid_argument("estimate_flow_slice: non-finite input");

    // Build the pyramid (level 0 = finest).
    std::vector<Image2D> pyr1{from}, pyr2{to};
    while (true) {
        const Image2D& prev = pyr1.back();
        int nw = int(std::lround(prev.w * p.pyramid_factor));
        int nh = int(std::lround(prev.h * p.pyramid_factor));
        if (std::min(nw, nh) < p.min_pyramid_size) break;
        double s = 0.5 / p.pyramid_factor;  // anti-alias before decimation
        pyr1.push_back(resize_bilinear(gaussian_blur(pyr1.back(), s), nw, nh));
        pyr2.push_back(resize_bilinear(gaussian_blur(pyr2.back(), s), nw, nh));
    }

    std::vector<float> u, v;
    for (int level = int(pyr1.size()) - 1; level >= 0; --level) {
        const Image2D& i1 = pyr1[level];
        const Image2D& i2 = pyr2[level];
        std::size_t npix = std::size_t(i1.w) * i1.h;
        if (level == int(pyr1.size()) - 1) {
            u.assign(npix, 0.0f);
            v.assign(npix, 0.0f);
        } else {
            const Image2D& prev = pyr1[level + 1];
            Image2D pu{prev.w, prev.h, u}, pv{prev.w, prev.h, v};
            float su = float(i1.w) / prev.w, sv = float(i1.h) / prev.h;
            Image2D ru = resize_bilinear(pu, i1.w, i1.h), rv = resize_bilinear(pv, i1.w, i1.h);
            u.resize(npix);
            v.resize(npix);
            for (std::size_t i = 0; i < npix; ++i) {
                u[i] = ru.pix[i] * su;
                v[i] = rv.pix[i] * sv;
            }
        }
        solve_level(i1, i2, u, v, p);
    }
    return {from.w, from.h, std::move(u), std::move(v)};
}

FlowField2D estimate_flow(const TumorMask& mask_t1, const TumorMask& mask_t2,
                          const FlowParams& params) {
    if (!mask_t1.volume.same_grid(mask_t2.volume))
        throw std::invalid_argument("estimate_flow: dims mismatch");
    const auto& d = mask_t1.volume.dims;
    FlowField2D out;
    out.slices.resize(d[2]);
    parallel_for(d[2], [&](int z0, int z1, int) {
        for (int z = z0; z < z1; ++z) {
            Image2D a = Image2D::zeros(d[0], d[1]);
            Image2D b = Image2D::zeros(d[0], d[1]);
            for (int y = 0; y < d[1]; ++y)
                for (int x = 0; x < d[0]; ++x) {
                    a.at(x, y) = mask_t1.volume.at(x, y, z);
                    b.at(x, y) = mask_t2.volume.at(x, y, z);
                }
            a = gaussian_blur(a, params.presmooth_sigma);
            b = gaussian_blur(b, params.presmooth_sigma);
            out.slices[z] = estimate_flow_slice(a, b, params);
        }
    });
    return out;
}

float flow_percentile_magnitude(const FlowField2D& flow, double q) {
    std::vector<float> mags;
    for (const auto& s : flow.slices)
        for (std::size_t i = 0; i < s.u.size(); ++i)
            mags.push_back(std::sqrt(s.u[i] * s.u[i] + s.v[i] * s.v[i]));
    if (mags.empty()) return 0.0f;
    std::size_t k = std::min(mags.size() - 1, std::size_t(q * (mags.size() - 1) + 0.5));
    std::nth_element(mags.begin(), mags.begin() + k, mags.end());
    return mags[k];
}

}  // namespace tumorcast
