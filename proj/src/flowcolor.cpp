#include "tumorcast/flowcolor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tumorcast {

std::vector<std::array<float, 3>> make_color_wheel() {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<float, 3>> wheel;
    wheel.reserve(RY + YG + GC + CB + BM + MR);
    for (int i = 0; i < RY; ++i) wheel.push_back({1.0f, float(i) / RY, 0.0f});
    for (int i = 0; i < YG; ++i) wheel.push_back({1.0f - float(i) / YG, 1.0f, 0.0f});
    for (int i = 0; i < GC; ++i) wheel.push_back({0.0f, 1.0f, float(i) / GC});
    for (int i = 0; i < CB; ++i) wheel.push_back({0.0f, 1.0f - float(i) / CB, 1.0f});
    for (int i = 0; i < BM; ++i) wheel.push_back({float(i) / BM, 0.0f, 1.0f});
    for (int i = 0; i < MR; ++i) wheel.push_back({1.0f, 0.0f, 1.0f - float(i) / MR});
    return wheel;
}

std::array<float, 3> flow_to_color(float u, float v, float max_magnitude) {
    if (!std::isfinite(u) || !std::isfinite(v))
        throw std::invalid_argument("flow_to_color: non-finite flow");
    if (max_magnitude <= 0.0f)
        throw std::invalid_argument("flow_to_color: max_magnitude must be > 0");
    static const auto wheel = make_color_wheel();
    const int ncols = int(wheel.size());

    float rad = std::sqrt(u * u + v * v) / max_magnitude;
    rad = std::min(rad, 1.0f);  // saturate
    float a = std::atan2(-v, -u) / std::numbers::pi_v<float>;  // [-1, 1]
    float fk = (a + 1.0f) / 2.0f * (ncols - 1);
    int k0 = int(fk) % ncols;
    int k1 = (k0 + 1) % ncols;
    float f = fk - std::floor(fk);

    std::array<float, 3> rgb;
    for (int c = 0; c < 3; ++c) {
        float col = (1.0f - f) * wheel[k0][c] + f * wheel[k1][c];
        col = 1.0f - rad * (1.0f - col);  // zero magnitude -> white
        rgb[c] = std::round(255.0f * col);
    }
    return rgb;
}

std::array<std::vector<float>, 3> encode_flow_color(const FlowSlice& flow, float max_magnitude) {
    std::array<std::vector<float>, 3> planes;
    std::size_t npix = std::size_t(flow.w) * flow.h;
    for (auto& p : planes) p.resize(npix);
    for (std::size_t i = 0; i < npix; ++i) {
        auto rgb = flow_to_color(flow.u[i], flow.v[i], max_magnitude);
        for (int c = 0; c < 3; ++c) planes[c][i] = rgb[c];
    }
    return planes;
}

}  // namespace tumorcast
