#pragma once

#include <string>
#include <vector>

#include "tumorcast/metrics.hpp"
#include "tumorcast/models.hpp"
#include "tumorcast/synth.hpp"

namespace tumorcast {

struct LoocvOptions {
    TrainOptions train;  // seed, arch widths, flow params, sampling
    // Subset of {invasion, expansion, early, late, end2end, linear}.
    std::vector<std::string> kinds{"invasion", "expansion", "early", "late", "end2end", "linear"};
    int invasion_epochs = 30;
    int other_epochs = 20;
    // Additionally score every learned kind with the final-epoch
    // snapshot and a fixed tau of 0.5 (rows tagged "<kind>+fixed").
    bool include_fixed_variant = false;
    // Optional directory for per-fold probability volumes and overlays.
    std::string artifact_dir;
};

/// Leave-one-out over patients: train on the rest, personalize on the
/// held-out first interval, predict t3, score against the t3 mask.
/// Entries are ordered by (patient, kind list order) and deterministic
/// for a fixed seed and thread configuration.
std::vector<MetricEntry> run_loocv(const std::vector<LongitudinalCase>& cohort,
                                   const LoocvOptions& opt);

}  // namespace tumorcast
