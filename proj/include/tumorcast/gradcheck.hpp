#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tumorcast/nnet.hpp"

namespace tumorcast {

struct LayerCheckResult {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<LayerCheckResult> results;
    double tolerance = 1e-3;
    bool pass() const {
        for (const auto& r : results)
            if (!(r.max_rel_err < tolerance)) return false;
        return true;
    }
};

/// Max relative error of one layer's analytic gradients (input + params)
/// against central finite differences, under a random linear readout loss.
double layer_max_rel_error(Layer<double>& layer, int h, int w, int c, std::uint64_t seed,
                           bool train = false);

/// Same check for softmax + cross entropy logits gradient.
double softmax_max_rel_error(std::uint64_t seed);

/// Sampled parameter-gradient check of a whole classifier through the
/// softmax loss (dropout masks frozen).
double classifier_max_rel_error(PatchClassifier<double>& model, int h, int w, int in_c,
                                std::uint64_t seed, int samples_per_param = 6);

/// Every layer type in isolation plus the full patch-classifier
/// architecture on a 9x9 toy input, all in double precision.
GradCheckReport gradient_check(double tolerance = 1e-3, std::uint64_t seed = 1);

}  // namespace tumorcast
