#include "tumorcast/case.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tumorcast {

void StudyTimepoint::validate() const {
    ct_pre.validate();
    ct_post.validate();
    suv.validate();
    mask.validate();
    if (!ct_pre.same_grid(ct_post) || !ct_pre.same_grid(suv) || !ct_pre.same_grid(mask.volume))
        throw std::invalid_argument("StudyTimepoint: channel dims mismatch");
}

void LongitudinalCase::validate() const {
    if (patient_id.empty()) throw std::invalid_argument("LongitudinalCase: empty patient_id");
    if (!(hematocrit > 0.0 && hematocrit < 1.0))
        throw std::invalid_argument("LongitudinalCase: hematocrit outside (0,1)");
    for (const auto& tp : timepoints) tp.validate();
    if (!(timepoints[0].acquisition_day < timepoints[1].acquisition_day &&
          timepoints[1].acquisition_day < timepoints[2].acquisition_day))
        throw std::invalid_argument("LongitudinalCase: acquisition_day not strictly increasing");
}

static Vec3i rounded_centroid(const TumorMask& m) {
    auto c = mask_centroid(m);
    return {static_cast<int>(std::lround(c[0])), static_cast<int>(std::lround(c[1])),
            static_cast<int>(std::lround(c[2]))};
}

LongitudinalCase align_to_tumor_center(const LongitudinalCase& c) {
    LongitudinalCase out = c;
    Vec3i ref = rounded_centroid(c.timepoints[0].mask);
    for (int t = 1; t < 3; ++t) {
        Vec3i ct = rounded_centroid(c.timepoints[t].mask);
        Vec3i shift{ref.x - ct.x, ref.y - ct.y, ref.z - ct.z};
        auto& tp = out.timepoints[t];
        if (shift != Vec3i{0, 0, 0}) {
            tp.ct_pre = translate_volume(tp.ct_pre, shift);
            tp.ct_post = translate_volume(tp.ct_post, shift);
            tp.suv = translate_volume(tp.suv, shift);
            tp.mask.volume = translate_volume(tp.mask.volume, shift);
        }
        // Compose with any previous alignment so re-running stays idempotent.
        out.alignment_translation[t].x += shift.x;
        out.alignment_translation[t].y += shift.y;
        out.alignment_translation[t].z += shift.z;
    }
    return out;
}

static const char* kChannelNames[] = {"ct_pre", "ct_post", "suv", "mask"};

void save_case(const LongitudinalCase& c, const std::string& case_dir) {
    c.validate();
    fs::create_directories(case_dir);
    json manifest;
    manifest["patient_id"] = c.patient_id;
    manifest["hematocrit"] = c.hematocrit;
    manifest["blood_hu_pre_mean"] = c.blood_hu_pre_mean;
    manifest["blood_hu_post_mean"] = c.blood_hu_post_mean;
    manifest["alignment_translation"] = json::array();
    for (const auto& t : c.alignment_translation)
        manifest["alignment_translation"].push_back({t.x, t.y, t.z});

    manifest["timepoints"] = json::array();
    for (int t = 0; t < 3; ++t) {
        const auto& tp = c.timepoints[t];
        const Volume3D* vols[] = {&tp.ct_pre, &tp.ct_post, &tp.suv, &tp.mask.volume};
        json entry;
        entry["acquisition_day"] = tp.acquisition_day;
        for (int ch = 0; ch < 4; ++ch) {
            std::string name = "t" + std::to_string(t + 1) + "_" + kChannelNames[ch] + ".vol.json";
            save_volume(*vols[ch], (fs::path(case_dir) / name).string());
            entry[kChannelNames[ch]] = name;
        }
        manifest["timepoints"].push_back(entry);
    }
    std::ofstream f(fs::path(case_dir) / "case.json");
    if (!f) throw std::runtime_error("save_case: cannot write manifest in " + case_dir);
    f << manifest.dump(2) << "\n";
}

LongitudinalCase load_case(const std::string& case_dir) {
    fs::path mpath = fs::path(case_dir) / "case.json";
    std::ifstream f(mpath);
    if (!f) throw std::runtime_error("load_case: missing manifest " + mpath.string());
    json manifest = json::parse(f);

    LongitudinalCase c;
    c.patient_id = manifest.at("patient_id").get<std::string>();
    c.hematocrit = manifest.at("hematocrit").get<double>();
    c.blood_hu_pre_mean = manifest.at("blood_hu_pre_mean").get<double>();
    c.blood_hu_post_mean = manifest.at("blood_hu_post_mean").get<double>();
    if (manifest.contains("alignment_translation")) {
        auto arr = manifest["alignment_translation"];
        for (int t = 0; t < 3; ++t)
            c.alignment_translation[t] = {arr[t][0].get<int>(), arr[t][1].get<int>(),
                                          arr[t][2].get<int>()};
    }
    auto tps = manifest.at("timepoints");
    if (tps.size() != 3) throw std::runtime_error("load_case: expected exactly 3 timepoints");
    for (int t = 0; t < 3; ++t) {
        auto& tp = c.timepoints[t];
        tp.acquisition_day = tps[t].at("acquisition_day").get<int>();
        auto path_of = [&](const char* key) {
            return (fs::path(case_dir) / tps[t].at(key).get<std::string>()).string();
        };
        tp.ct_pre = load_volume(path_of("ct_pre"));
        tp.ct_post = load_volume(path_of("ct_post"));
        tp.suv = load_volume(path_of("suv"));
        tp.mask.volume = load_volume(path_of("mask"));
    }
    c.validate();
    return c;
}

}  // namespace tumorcast
