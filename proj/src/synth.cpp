#include "tumorcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tumorcast {

void PhantomParams::validate() const {
    if (g12 <= 0 || g23 <= 0) throw std::invalid_argument("PhantomParams: growth factors");
    if (hematocrit <= 0 || hematocrit >= 1) throw std::invalid_argument("PhantomParams: hct");
    if (blood_hu_post <= blood_hu_pre) throw std::invalid_argument("PhantomParams: blood pool");
    for (double r : base_radius)
        if (r <= 0) throw std::invalid_argument("PhantomParams: radius");

    const double factors[3] = {1.0, g12, g12 * g23};
    for (int t = 0; t < 3; ++t) {
        std::array<double, 3> c = center;
        if (t >= 1)
            for (int a = 0; a < 3; ++a) c[a] += drift12[a];
        if (t >= 2)
            for (int a = 0; a < 3; ++a) c[a] += drift23[a];
        for (int a = 0; a < 3; ++a) {
            double r = base_radius[a] * factors[t];
            if (c[a] - r < 1.0 || c[a] + r > dims[a] - 2.0)
                throw std::invalid_argument("PhantomParams: tumor exceeds grid at timepoint " +
                                            std::to_string(t + 1));
        }
    }
}

LongitudinalCase generate_case(const PhantomParams& p) {
    p.validate();
    std::mt19937 rng(p.seed);
    std::normal_distribution<double> noise(0.0, p.noise_std > 0 ? p.noise_std : 1.0);
    auto jitter = [&]() { return p.noise_std > 0 ? noise(rng) : 0.0; };

    LongitudinalCase c;
    c.patient_id = p.patient_id;
    c.hematocrit = p.hematocrit;
    c.blood_hu_pre_mean = p.blood_hu_pre;
    c.blood_hu_post_mean = p.blood_hu_post;

    const double factors[3] = {1.0, p.g12, p.g12 * p.g23};
    const double blood_delta = p.blood_hu_post - p.blood_hu_pre;
    const int days[3] = {0, 180, 360};

    for (int t = 0; t < 3; ++t) {
        std::array<double, 3> ctr = p.center;
        if (t >= 1)
            for (int a = 0; a < 3; ++a) ctr[a] += p.drift12[a];
        if (t >= 2)
            for (int a = 0; a < 3; ++a) ctr[a] += p.drift23[a];
        std::array<double, 3> rad;
        for (int a = 0; a < 3; ++a) rad[a] = p.base_radius[a] * factors[t];

        StudyTimepoint& tp = c.timepoints[std::size_t(t)];
        tp.acquisition_day = days[t];
        tp.ct_pre = Volume3D::zeros(p.dims[0], p.dims[1], p.dims[2]);
        tp.ct_post = Volume3D::zeros(p.dims[0], p.dims[1], p.dims[2]);
        tp.suv = Volume3D::zeros(p.dims[0], p.dims[1], p.dims[2]);
        tp.mask.volume = Volume3D::zeros(p.dims[0], p.dims[1], p.dims[2]);

        for (int z = 0; z < p.dims[2]; ++z)
            for (int y = 0; y < p.dims[1]; ++y)
                for (int x = 0; x < p.dims[0]; ++x) {
                    double dx = (x - ctr[0]) / rad[0];
                    double dy = (y - ctr[1]) / rad[1];
                    double dz = (z - ctr[2]) / rad[2];
                    double rho2 = dx * dx + dy * dy + dz * dz;
                    bool inside = rho2 <= 1.0;
                    double rho = std::sqrt(std::min(rho2, 1.0));

                    double hu_pre = p.tissue_hu_pre + jitter();
                    double icvf = inside
                                      ? p.icvf_center + (p.icvf_edge - p.icvf_center) * rho
                                      : 0.0;
                    // Invert the ICVF relation so preprocessing recovers
                    // the prescribed field from the HU pair.
                    double enhancement = inside
                                             ? blood_delta * (1.0 - icvf) / (1.0 - p.hematocrit)
                                             : 5.0;
                    double hu_post = p.tissue_hu_pre + enhancement + jitter();
                    double suv = p.suv_background +
                                 (inside ? (p.suv_peak - p.suv_background) *
                                               std::exp(-2.0 * rho2)
                                         : 0.0) +
                                 jitter() * 0.05;

                    tp.ct_pre.at(x, y, z) = float(hu_pre);
                    tp.ct_post.at(x, y, z) = float(hu_post);
                    tp.suv.at(x, y, z) = float(std::max(0.0, suv));
                    if (inside) tp.mask.volume.at(x, y, z) = 255.0f;
                }
        tp.validate();
    }
    c.validate();
    return c;
}

std::vector<LongitudinalCase> generate_cohort(int n, const CohortMix& mix, std::uint32_t seed,
                                              const CohortScale& scale) {
    if (n < 2) throw std::invalid_argument("generate_cohort: n < 2");
    if (mix.nonlinear + mix.stable + mix.shrinking != n)
        throw std::invalid_argument("generate_cohort: mix does not sum to n");
    if (scale.radius_scale <= 0) throw std::invalid_argument("generate_cohort: radius scale");

    std::vector<LongitudinalCase> cohort;
    for (int i = 0; i < n; ++i) {
        std::mt19937 rng(seed ^ (std::uint32_t(i) * 2654435761u + 17u));
        auto uni = [&](double lo, double hi) {
            return std::uniform_real_distribution<double>(lo, hi)(rng);
        };

        PhantomParams p;
        p.seed = seed * 1000u + std::uint32_t(i);
        p.patient_id = "phantom" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
        p.noise_std = 1.0;
        p.dims = scale.dims;
        p.center = {scale.dims[0] / 2.0 + uni(-1.5, 1.5), scale.dims[1] / 2.0 + uni(-1.5, 1.5),
                    scale.dims[2] / 2.0 + uni(-1.5, 1.5)};
        p.drift12 = {uni(-0.5, 0.5), uni(-0.5, 0.5), 0.0};
        p.drift23 = {uni(-0.5, 0.5), uni(-0.5, 0.5), 0.0};

        if (i < mix.nonlinear) {
            // fast growth that decelerates; hot on PET, dense ICVF core
            double r = uni(3.2, 4.0) * scale.radius_scale;
            p.base_radius = {r * uni(0.95, 1.1), r * uni(0.95, 1.1), r * uni(0.85, 1.0)};
            p.g12 = uni(1.35, 1.5);
            p.g23 = uni(1.05, 1.12);
            p.suv_peak = uni(7.0, 9.0);
            p.icvf_center = 0.85;
            p.icvf_edge = 0.60;
        } else if (i < mix.nonlinear + mix.stable) {
            // stationary; metabolically quiet
            double r = uni(3.5, 4.5) * scale.radius_scale;
            p.base_radius = {r * uni(0.95, 1.05), r * uni(0.95, 1.05), r * uni(0.9, 1.0)};
            p.g12 = uni(0.98, 1.02);
            p.g23 = uni(0.98, 1.02);
            p.suv_peak = uni(2.5, 3.5);
            p.icvf_center = 0.60;
            p.icvf_edge = 0.50;
        } else {
            // shrinks, then stabilizes; intermediate PET uptake
            double r = uni(4.5, 5.5) * scale.radius_scale;
            p.base_radius = {r * uni(0.95, 1.05), r * uni(0.95, 1.05), r * uni(0.9, 1.0)};
            p.g12 = uni(0.80, 0.88);
            p.g23 = uni(0.97, 1.03);
            p.suv_peak = uni(4.5, 5.5);
            p.icvf_center = 0.72;
            p.icvf_edge = 0.55;
        }
        cohort.push_back(generate_case(p));
    }
    return cohort;
}

}  // namespace tumorcast
