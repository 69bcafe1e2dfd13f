#include "tumorcast/config.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace tumorcast {

namespace {

nlohmann::json vec3i_to_json(Vec3i v) { return {v.x, v.y, v.z}; }

Vec3i vec3i_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x,y,z]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
    train.validate();
    if (patch < 3 || patch % 2 == 0) throw std::invalid_argument("RunConfig: patch must be odd >= 3");
    if (negative_ratio <= 0) throw std::invalid_argument("RunConfig: negative_ratio");
    if (invasion_epochs < 1 || other_epochs < 1) throw std::invalid_argument("RunConfig: epochs");
    if (threads < 0) throw std::invalid_argument("RunConfig: threads");
    if (arch.conv1 < 1 || arch.conv2 < 1 || arch.conv3 < 1 || arch.conv4 < 1 || arch.fc < 1 ||
        arch.fuse < 1)
        throw std::invalid_argument("RunConfig: layer widths");
    if (arch.dropout_rate < 0 || arch.dropout_rate >= 1)
        throw std::invalid_argument("RunConfig: dropout rate");
    if (arch.init_std <= 0) throw std::invalid_argument("RunConfig: init_std");
    if (flow.pyramid_factor <= 0 || flow.pyramid_factor >= 1)
        throw std::invalid_argument("RunConfig: pyramid factor");
    for (int v : {sample_halfspan.x, sample_halfspan.y, sample_halfspan.z, zone_margin.x,
                  zone_margin.y, zone_margin.z})
        if (v < 0) throw std::invalid_argument("RunConfig: negative extent");
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    return {
        {"train",
         {{"lr0", c.train.lr0},
          {"lr_decay_factor", c.train.lr_decay_factor},
          {"lr_decay_every", c.train.lr_decay_every},
          {"momentum", c.train.momentum},
          {"weight_decay", c.train.weight_decay},
          {"batch", c.train.batch}}},
        {"arch",
         {{"conv1", c.arch.conv1},
          {"conv2", c.arch.conv2},
          {"conv3", c.arch.conv3},
          {"conv4", c.arch.conv4},
          {"fc", c.arch.fc},
          {"fuse", c.arch.fuse},
          {"dropout_rate", c.arch.dropout_rate},
          {"init_std", c.arch.init_std}}},
        {"flow",
         {{"pyramid_factor", c.flow.pyramid_factor},
          {"warps_per_level", c.flow.warps_per_level},
          {"alpha", c.flow.alpha},
          {"fixed_point_iters", c.flow.fixed_point_iters},
          {"solver_sweeps", c.flow.solver_sweeps},
          {"sor_omega", c.flow.sor_omega},
          {"data_eps", c.flow.data_eps},
          {"smooth_eps", c.flow.smooth_eps},
          {"min_pyramid_size", c.flow.min_pyramid_size},
          {"presmooth_sigma", c.flow.presmooth_sigma}}},
        {"seed", c.seed},
        {"patch", c.patch},
        {"negative_ratio", c.negative_ratio},
        {"sample_halfspan", vec3i_to_json(c.sample_halfspan)},
        {"zone_margin", vec3i_to_json(c.zone_margin)},
        {"invasion_epochs", c.invasion_epochs},
        {"other_epochs", c.other_epochs},
        {"threads", c.threads},
    };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("train")) {
        const auto& t = j.at("train");
        maybe(t, "lr0", c.train.lr0);
        maybe(t, "lr_decay_factor", c.train.lr_decay_factor);
        maybe(t, "lr_decay_every", c.train.lr_decay_every);
        maybe(t, "momentum", c.train.momentum);
        maybe(t, "weight_decay", c.train.weight_decay);
        maybe(t, "batch", c.train.batch);
    }
    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        maybe(a, "conv1", c.arch.conv1);
        maybe(a, "conv2", c.arch.conv2);
        maybe(a, "conv3", c.arch.conv3);
        maybe(a, "conv4", c.arch.conv4);
        maybe(a, "fc", c.arch.fc);
        maybe(a, "fuse", c.arch.fuse);
        maybe(a, "dropout_rate", c.arch.dropout_rate);
        maybe(a, "init_std", c.arch.init_std);
    }
    if (j.contains("flow")) {
        const auto& f = j.at("flow");
        maybe(f, "pyramid_factor", c.flow.pyramid_factor);
        maybe(f, "warps_per_level", c.flow.warps_per_level);
        maybe(f, "alpha", c.flow.alpha);
        maybe(f, "fixed_point_iters", c.flow.fixed_point_iters);
        maybe(f, "solver_sweeps", c.flow.solver_sweeps);
        maybe(f, "sor_omega", c.flow.sor_omega);
        maybe(f, "data_eps", c.flow.data_eps);
        maybe(f, "smooth_eps", c.flow.smooth_eps);
        maybe(f, "min_pyramid_size", c.flow.min_pyramid_size);
        maybe(f, "presmooth_sigma", c.flow.presmooth_sigma);
    }
    maybe(j, "seed", c.seed);
    maybe(j, "patch", c.patch);
    maybe(j, "negative_ratio", c.negative_ratio);
    if (j.contains("sample_halfspan")) c.sample_halfspan = vec3i_from_json(j.at("sample_halfspan"));
    if (j.contains("zone_margin")) c.zone_margin = vec3i_from_json(j.at("zone_margin"));
    maybe(j, "invasion_epochs", c.invasion_epochs);
    maybe(j, "other_epochs", c.other_epochs);
    maybe(j, "threads", c.threads);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config " + path.string());
    nlohmann::json j;
    f >> j;
    return run_config_from_json(j);
}

TrainOptions train_options(const RunConfig& c) {
    TrainOptions o;
    o.config = c.train;
    o.arch = c.arch;
    o.flow = c.flow;
    o.seed = c.seed;
    o.patch = c.patch;
    o.negative_ratio = c.negative_ratio;
    o.sample_halfspan = c.sample_halfspan;
    o.zone_margin = c.zone_margin;
    return o;
}

LoocvOptions loocv_options(const RunConfig& c) {
    LoocvOptions o;
    o.train = train_options(c);
    o.invasion_epochs = c.invasion_epochs;
    o.other_epochs = c.other_epochs;
    return o;
}

std::string config_hash(const RunConfig& c) {
    std::string dump = run_config_to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_provenance(const std::filesystem::path& artifact, const RunConfig& c,
                      const nlohmann::json& details) {
    nlohmann::json j{
        {"config", run_config_to_json(c)},
        {"config_hash", config_hash(c)},
        {"threads", resolve_threads(c)},
        {"details", details},
    };
    std::filesystem::path path = artifact;
    path += ".provenance.json";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

int resolve_threads(const RunConfig& c) {
    if (c.threads > 0) return c.threads;
    if (const char* env = std::getenv("TUMORCAST_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace tumorcast
