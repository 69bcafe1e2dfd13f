#include "tumorcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tumorcast {

MetricEntry compute_metrics(const TumorMask& pred, const TumorMask& gt) {
    if (!pred.volume.same_grid(gt.volume))
        throw std::invalid_argument("compute_metrics: dims mismatch");
    MetricEntry e;
    for (std::size_t i = 0; i < gt.volume.data.size(); ++i) {
        bool p = pred.volume.data[i] != 0.0f;
        bool g = gt.volume.data[i] != 0.0f;
        e.tpv_vox += p && g;
        e.vpred_vox += p;
        e.vgt_vox += g;
    }
    if (e.vgt_vox == 0) throw std::invalid_argument("compute_metrics: empty ground truth");

    const double voxel_mm3 =
        gt.volume.spacing[0] * gt.volume.spacing[1] * gt.volume.spacing[2];
    e.tpv_mm3 = double(e.tpv_vox) * voxel_mm3;
    e.vpred_mm3 = double(e.vpred_vox) * voxel_mm3;
    e.vgt_mm3 = double(e.vgt_vox) * voxel_mm3;

    e.recall = double(e.tpv_vox) / double(e.vgt_vox);
    e.empty_prediction = e.vpred_vox == 0;
    e.precision = e.empty_prediction ? 0.0 : double(e.tpv_vox) / double(e.vpred_vox);
    e.dice = 2.0 * double(e.tpv_vox) / double(e.vpred_vox + e.vgt_vox);
    e.rvd = (double(e.vpred_vox) - double(e.vgt_vox)) / double(e.vgt_vox);
    return e;
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    a.n = values.size();
    if (values.empty()) return a;
    double sum = 0;
    a.min = values.front();
    a.max = values.front();
    for (double v : values) {
        sum += v;
        a.min = std::min(a.min, v);
        a.max = std::max(a.max, v);
    }
    a.mean = sum / double(a.n);
    double ss = 0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / double(a.n));
    return a;
}

}  // namespace tumorcast
