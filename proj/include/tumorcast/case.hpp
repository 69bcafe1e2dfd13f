#pragma once

#include <array>
#include <string>

#include "tumorcast/volume.hpp"

namespace tumorcast {

/// One imaging session: dual-phase CT, SUV map and tumor mask on a
/// common grid, plus days since the first scan.
struct StudyTimepoint {
    Volume3D ct_pre;
    Volume3D ct_post;
    Volume3D suv;
    TumorMask mask;
    int acquisition_day = 0;

    void validate() const;  // all channels share dims
};

struct LongitudinalCase {
    std::string patient_id;
    std::array<StudyTimepoint, 3> timepoints;
    double hematocrit = 0.0;        // fraction in (0,1)
    double blood_hu_pre_mean = 0.0;
    double blood_hu_post_mean = 0.0;

    // Provenance: integer translation applied per timepoint by
    // align_to_tumor_center ({0,0,0} before alignment).
    std::array<Vec3i, 3> alignment_translation{};

    void validate() const;
};

/// Translate every channel of timepoints 2 and 3 so their rounded mask
/// centroids coincide with timepoint 1's. Idempotent; records the
/// applied translation in alignment_translation.
LongitudinalCase align_to_tumor_center(const LongitudinalCase& c);

/// case.json manifest + per-channel .vol.json files in one directory.
void save_case(const LongitudinalCase& c, const std::string& case_dir);
LongitudinalCase load_case(const std::string& case_dir);

}  // namespace tumorcast
