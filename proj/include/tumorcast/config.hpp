#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tumorcast/loocv.hpp"
#include "tumorcast/models.hpp"

namespace tumorcast {

/// Every tunable of the pipeline with its production default, loadable
/// from a JSON file and overridable per flag.
struct RunConfig {
    TrainConfig train;  // lr schedule, momentum, weight decay, batch
    ArchParams arch;    // stream widths and dropout rate
    FlowParams flow;
    std::uint32_t seed = 1;
    int patch = 17;
    double negative_ratio = 1.15;
    Vec3i sample_halfspan{15, 15, 15};
    Vec3i zone_margin{3, 3, 3};
    int invasion_epochs = 30;
    int other_epochs = 20;
    int threads = 0;  // 0: TUMORCAST_THREADS env var, else 1

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

TrainOptions train_options(const RunConfig& c);
LoocvOptions loocv_options(const RunConfig& c);

/// FNV-1a hash of the canonical JSON dump; embedded in provenance
/// records so artifacts identify the exact configuration.
std::string config_hash(const RunConfig& c);

/// `<output>.provenance.json` next to an artifact: full config, its
/// hash, and command-specific details.
void write_provenance(const std::filesystem::path& artifact, const RunConfig& c,
                      const nlohmann::json& details);

/// Worker count resolution: explicit config value, else TUMORCAST_THREADS,
/// else 1 (the determinism baseline).
int resolve_threads(const RunConfig& c);

}  // namespace tumorcast
