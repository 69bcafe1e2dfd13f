#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tumorcast/volume.hpp"

namespace tumorcast {

struct MetricEntry {
    std::string patient_id;
    std::string kind;
    std::size_t tpv_vox = 0, vpred_vox = 0, vgt_vox = 0;
    double tpv_mm3 = 0, vpred_mm3 = 0, vgt_mm3 = 0;
    double recall = 0, precision = 0, dice = 0, rvd = 0;
    bool empty_prediction = false;  // precision reported as 0 in this case
    double tau = 0.5;
    int epochs = 0;
};

/// Dice = 2*TPV/(Vpred+Vgt), recall = TPV/Vgt, precision = TPV/Vpred,
/// RVD = (Vpred-Vgt)/Vgt. Throws on dims mismatch or empty ground truth.
MetricEntry compute_metrics(const TumorMask& pred, const TumorMask& gt);

struct Aggregate {
    double mean = 0, stddev = 0, min = 0, max = 0;
    std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

}  // namespace tumorcast
