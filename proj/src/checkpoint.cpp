#include "tumorcast/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace tumorcast {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian float32");

Checkpoint snapshot_model(PatchClassifier<float>& model, int epoch, std::uint32_t seed,
                          const std::vector<float>& mean_patch) {
    Checkpoint ckpt;
    ckpt.model = model.spec_json();
    ckpt.epoch = epoch;
    ckpt.seed = seed;
    ckpt.mean_patch = mean_patch;
    for (auto* p : model.params()) {
        ckpt.weights.push_back(p->w);
        ckpt.momentum.push_back(p->mom);
    }
    return ckpt;
}

std::unique_ptr<PatchClassifier<float>> model_from_checkpoint(const Checkpoint& ckpt) {
    auto model = classifier_from_spec_json<float>(ckpt.model, ckpt.seed);
    auto params = model->params();
    if (params.size() != ckpt.weights.size() || params.size() != ckpt.momentum.size())
        throw std::runtime_error("checkpoint: parameter tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->w.size() != ckpt.weights[i].size())
            throw std::runtime_error("checkpoint: parameter shape mismatch");
        params[i]->w = ckpt.weights[i];
        params[i]->mom = ckpt.momentum[i];
    }
    return model;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem) {
    std::filesystem::path json_path = stem;
    json_path += ".ckpt.json";
    std::filesystem::path raw_path = stem;
    raw_path += ".ckpt.raw";

    nlohmann::json j;
    j["version"] = 1;
    j["model"] = ckpt.model;
    j["epoch"] = ckpt.epoch;
    j["seed"] = ckpt.seed;
    j["blob"] = raw_path.filename().string();
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& w : ckpt.weights) shapes.push_back(w.size());
    j["param_sizes"] = shapes;
    j["mean_size"] = ckpt.mean_patch.size();

    std::ofstream jf(json_path);
    if (!jf) throw std::runtime_error("cannot write " + json_path.string());
    jf << j.dump(2) << "\n";

    std::ofstream rf(raw_path, std::ios::binary);
    if (!rf) throw std::runtime_error("cannot write " + raw_path.string());
    auto write_blob = [&](const std::vector<float>& v) {
        rf.write(reinterpret_cast<const char*>(v.data()),
                 std::streamsize(v.size() * sizeof(float)));
    };
    for (const auto& w : ckpt.weights) write_blob(w);
    for (const auto& m : ckpt.momentum) write_blob(m);
    write_blob(ckpt.mean_patch);
    if (!rf) throw std::runtime_error("write failure: " + raw_path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
    std::filesystem::path json_path = stem;
    json_path += ".ckpt.json";
    std::ifstream jf(json_path);
    if (!jf) throw std::runtime_error("missing checkpoint: " + json_path.string());
    nlohmann::json j = nlohmann::json::parse(jf);
    if (j.at("version").get<int>() != 1) throw std::runtime_error("checkpoint: unknown version");

    Checkpoint ckpt;
    ckpt.model = j.at("model");
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.seed = j.at("seed").get<std::uint32_t>();
    std::vector<std::size_t> sizes = j.at("param_sizes").get<std::vector<std::size_t>>();
    std::size_t mean_size = j.at("mean_size").get<std::size_t>();

    std::filesystem::path raw_path = json_path.parent_path() / j.at("blob").get<std::string>();
    std::ifstream rf(raw_path, std::ios::binary);
    if (!rf) throw std::runtime_error("missing checkpoint blob: " + raw_path.string());
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    std::size_t expect_bytes = (2 * total + mean_size) * sizeof(float);
    rf.seekg(0, std::ios::end);
    if (std::size_t(rf.tellg()) != expect_bytes)
        throw std::runtime_error("checkpoint blob length mismatch: " + raw_path.string());
    rf.seekg(0);

    auto read_blob = [&](std::size_t n) {
        std::vector<float> v(n);
        rf.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(float)));
        return v;
    };
    for (auto s : sizes) ckpt.weights.push_back(read_blob(s));
    for (auto s : sizes) ckpt.momentum.push_back(read_blob(s));
    ckpt.mean_patch = read_blob(mean_size);
    if (!rf) throw std::runtime_error("read failure: " + raw_path.string());
    return ckpt;
}

}  // namespace tumorcast
