#include "tumorcast/nnet.hpp"

namespace tumorcast {

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::lrn: return "lrn";
        case LayerKind::fc: return "fc";
        case LayerKind::dropout: return "dropout";
    }
    throw std::logic_error("unknown layer kind");
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "relu") return LayerKind::relu;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "lrn") return LayerKind::lrn;
    if (s == "fc") return LayerKind::fc;
    if (s == "dropout") return LayerKind::dropout;
    throw std::invalid_argument("unknown layer kind: " + s);
}

}  // namespace

nlohmann::json layer_spec_to_json(const LayerSpec& s) {
    nlohmann::json j{{"kind", kind_name(s.kind)}};
    switch (s.kind) {
        case LayerKind::conv:
            j["out_channels"] = s.out_channels;
            j["kernel"] = s.kernel;
            break;
        case LayerKind::maxpool:
            j["kernel"] = s.kernel;
            j["stride"] = s.stride;
            break;
        case LayerKind::lrn:
            j["local_size"] = s.local_size;
            j["alpha"] = s.alpha;
            j["beta"] = s.beta;
            j["k"] = s.k;
            break;
        case LayerKind::fc:
            j["out_channels"] = s.out_channels;
            break;
        case LayerKind::dropout:
            j["rate"] = s.rate;
            break;
        case LayerKind::relu:
            break;
    }
    return j;
}

LayerSpec layer_spec_from_json(const nlohmann::json& j) {
    LayerSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("out_channels")) s.out_channels = j["out_channels"].get<int>();
    if (j.contains("kernel")) s.kernel = j["kernel"].get<int>();
    if (j.contains("stride")) s.stride = j["stride"].get<int>();
    if (j.contains("rate")) s.rate = j["rate"].get<double>();
    if (j.contains("local_size")) s.local_size = j["local_size"].get<int>();
    if (j.contains("alpha")) s.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) s.beta = j["beta"].get<double>();
    if (j.contains("k")) s.k = j["k"].get<double>();
    return s;
}

nlohmann::json network_spec_to_json(const NetworkSpec& s) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : s.layers) layers.push_back(layer_spec_to_json(l));
    return {{"in_h", s.in_h},
            {"in_w", s.in_w},
            {"in_c", s.in_c},
            {"init_std", s.init_std},
            {"layers", layers}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
    NetworkSpec s;
    s.in_h = j.at("in_h").get<int>();
    s.in_w = j.at("in_w").get<int>();
    s.in_c = j.at("in_c").get<int>();
    s.init_std = j.value("init_std", 0.01);
    for (const auto& l : j.at("layers")) s.layers.push_back(layer_spec_from_json(l));
    return s;
}

void TrainConfig::validate() const {
    if (lr0 <= 0 || lr_decay_factor <= 0 || lr_decay_every <= 0)
        throw std::invalid_argument("TrainConfig: learning-rate schedule not positive");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("TrainConfig: momentum");
    if (weight_decay < 0) throw std::invalid_argument("TrainConfig: weight_decay");
    if (batch <= 0 || max_epochs <= 0) throw std::invalid_argument("TrainConfig: batch/epochs");
}

}  // namespace tumorcast
