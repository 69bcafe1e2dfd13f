#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tumorcast/case.hpp"

namespace tumorcast {

/// Ellipsoidal longitudinal phantom: three timepoints grown by g12 and
/// g23 (radial factors), with HU channels constructed so compute_icvf
/// recovers the prescribed ICVF field.
struct PhantomParams {
    std::array<int, 3> dims{64, 64, 64};
    std::array<double, 3> center{32, 32, 32};
    std::array<double, 3> base_radius{5, 5, 4};  // semi-axes at timepoint 1
    double g12 = 1.2, g23 = 1.1;                 // per-interval radial growth factors
    std::array<double, 3> drift12{0, 0, 0};      // center drift per interval (voxels)
    std::array<double, 3> drift23{0, 0, 0};
    double suv_peak = 8.0;       // SUV at the tumor center
    double suv_background = 0.5;
    double icvf_center = 0.80;   // prescribed ICVF fraction at the center
    double icvf_edge = 0.55;     // ... falling off linearly to the rim
    double tissue_hu_pre = 50.0;
    double noise_std = 0.0;      // additive Gaussian on HU and SUV
    double hematocrit = 0.45;
    double blood_hu_pre = 100.0;
    double blood_hu_post = 200.0;
    std::uint32_t seed = 1;
    std::string patient_id = "phantom";

    void validate() const;  // tumor must fit the grid at every timepoint
};

LongitudinalCase generate_case(const PhantomParams& params);

/// Growth-regime mix of the cohort; counts must sum to the cohort size.
struct CohortMix {
    int nonlinear = 6;
    int stable = 2;
    int shrinking = 2;
};

/// Grid and tumor-size scaling of a generated cohort; the default is the
/// full desk-scale setting, smaller values trade realism for runtime.
struct CohortScale {
    std::array<int, 3> dims{64, 64, 64};
    double radius_scale = 1.0;
};

/// Seeded cohort with the declared regime mix. Appearance (SUV level,
/// ICVF gradient) co-varies with the growth regime so the regime is
/// learnable from the imaging channels.
std::vector<LongitudinalCase> generate_cohort(int n, const CohortMix& mix, std::uint32_t seed,
                                              const CohortScale& scale = {});

}  // namespace tumorcast
