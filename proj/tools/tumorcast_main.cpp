#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tumorcast/baseline.hpp"
#include "tumorcast/config.hpp"
#include "tumorcast/flowcolor.hpp"
#include "tumorcast/gradcheck.hpp"
#include "tumorcast/loocv.hpp"
#include "tumorcast/report.hpp"
#include "tumorcast/synth.hpp"

namespace fs = std::filesystem;
using namespace tumorcast;

namespace {

struct CliState {
    RunConfig cfg;
    std::string config_path;
    int threads_flag = -1;
    std::int64_t seed_flag = -1;

    void finalize() {
        if (!config_path.empty()) cfg = load_run_config(config_path);
        if (threads_flag >= 0) cfg.threads = threads_flag;
        if (seed_flag >= 0) cfg.seed = std::uint32_t(seed_flag);
        cfg.validate();
        set_worker_count(resolve_threads(cfg));
    }
};

std::vector<LongitudinalCase> load_cohort(const fs::path& dir) {
    std::vector<fs::path> case_dirs;
    for (const auto& ent : fs::directory_iterator(dir))
        if (ent.is_directory() && fs::exists(ent.path() / "case.json"))
            case_dirs.push_back(ent.path());
    std::sort(case_dirs.begin(), case_dirs.end());
    if (case_dirs.empty()) throw std::runtime_error("no case.json found under " + dir.string());
    std::vector<LongitudinalCase> cohort;
    for (const auto& d : case_dirs) cohort.push_back(load_case(d.string()));
    return cohort;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

/// Per-epoch snapshots written by `train`, reloaded by `personalize`.
void save_stream(const TrainedStream& ts, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t e = 0; e < ts.snapshots.size(); ++e) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03zu", e + 1);
        save_checkpoint(ts.snapshots[e], dir / name);
    }
    nlohmann::json j{{"train_loss", ts.train_loss}};
    std::ofstream f(dir / "training.json");
    f << j.dump(2) << "\n";
}

TrainedStream load_stream(const fs::path& dir) {
    TrainedStream ts;
    std::vector<fs::path> stems;
    for (const auto& ent : fs::directory_iterator(dir)) {
        std::string n = ent.path().filename().string();
        if (n.rfind("epoch_", 0) == 0 && n.size() > 10 && n.substr(n.size() - 10) == ".ckpt.json")
            stems.push_back(dir / n.substr(0, n.size() - 10));
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw std::runtime_error("no checkpoints under " + dir.string());
    for (const auto& s : stems) ts.snapshots.push_back(load_checkpoint(s));
    std::ifstream f(dir / "training.json");
    if (f) {
        nlohmann::json j;
        f >> j;
        ts.train_loss = j.value("train_loss", std::vector<double>{});
    }
    return ts;
}

void save_personalized(const PersonalizedModel& pm, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t s = 0; s < pm.checkpoints.size(); ++s)
        save_checkpoint(pm.checkpoints[s], dir / ("stream" + std::to_string(s)));
    nlohmann::json j{{"kind", kind_name(pm.kind)},
                     {"tau", pm.tau},
                     {"chosen_epoch", pm.chosen_epoch},
                     {"validation_curve", pm.validation_curve},
                     {"tau_default_fallback", pm.tau_default_fallback},
                     {"tau_degenerate", pm.tau_degenerate}};
    std::ofstream f(dir / "personalized.json");
    f << j.dump(2) << "\n";
}

PersonalizedModel load_personalized(const fs::path& dir) {
    std::ifstream f(dir / "personalized.json");
    if (!f) throw std::runtime_error("missing personalized.json in " + dir.string());
    nlohmann::json j;
    f >> j;
    PersonalizedModel pm;
    pm.kind = kind_from_name(j.at("kind").get<std::string>());
    pm.tau = j.at("tau").get<double>();
    pm.chosen_epoch = j.value("chosen_epoch", 0);
    pm.validation_curve = j.value("validation_curve", std::vector<double>{});
    pm.tau_default_fallback = j.value("tau_default_fallback", false);
    pm.tau_degenerate = j.value("tau_degenerate", false);
    for (int s = 0; s < stream_count(pm.kind); ++s)
        pm.checkpoints.push_back(load_checkpoint(dir / ("stream" + std::to_string(s))));
    return pm;
}

// ---------------------------------------------------------------------------

int cmd_synth(CliState& st, int n, const std::string& mix_str, const std::string& out) {
    auto parts = split_csv(mix_str);
    if (parts.size() != 3) throw std::runtime_error("--mix expects three counts, e.g. 6,2,2");
    CohortMix mix{std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])};
    auto cohort = generate_cohort(n, mix, st.cfg.seed);
    fs::create_directories(out);
    for (const auto& c : cohort) {
        fs::path dir = fs::path(out) / c.patient_id;
        fs::create_directories(dir);
        save_case(c, dir.string());
    }
    write_provenance(fs::path(out) / "cohort", st.cfg,
                     {{"command", "synth"}, {"n", n}, {"mix", mix_str}});
    std::printf("wrote %d cases to %s\n", n, out.c_str());
    return 0;
}

int cmd_preprocess(CliState& st, const std::string& case_dir, int tp, const std::string& out) {
    if (tp < 1 || tp > 3) throw std::runtime_error("--tp must be 1, 2 or 3");
    LongitudinalCase c = load_case(case_dir);
    InvasionImage img =
        assemble_invasion_channels(c.timepoints[std::size_t(tp - 1)], c.blood_hu_pre_mean,
                                   c.blood_hu_post_mean, c.hematocrit);
    fs::create_directories(out);
    save_volume(img.channels[0], (fs::path(out) / "suv_mapped.vol.json").string());
    save_volume(img.channels[1], (fs::path(out) / "icvf.vol.json").string());
    save_volume(img.channels[2], (fs::path(out) / "mask.vol.json").string());
    write_provenance(fs::path(out) / "preprocess", st.cfg,
                     {{"command", "preprocess"}, {"case", case_dir}, {"tp", tp}});
    return 0;
}

int cmd_flow(CliState& st, const std::string& case_dir, const std::string& out) {
    LongitudinalCase c = align_to_tumor_center(load_case(case_dir));
    FlowField2D flow = estimate_flow(c.timepoints[0].mask, c.timepoints[1].mask, st.cfg.flow);
    float maxmag = std::max(flow_percentile_magnitude(flow), 1e-6f);
    fs::create_directories(out);
    for (std::size_t z = 0; z < flow.slices.size(); ++z) {
        const FlowSlice& fl = flow.slices[z];
        auto planes = encode_flow_color(fl, maxmag);
        std::vector<std::uint8_t> rgb(std::size_t(fl.w) * fl.h * 3);
        for (std::size_t i = 0; i < std::size_t(fl.w) * fl.h; ++i)
            for (int ch = 0; ch < 3; ++ch)
                rgb[i * 3 + std::size_t(ch)] =
                    std::uint8_t(std::clamp(planes[std::size_t(ch)][i], 0.0f, 255.0f));
        char name[32];
        std::snprintf(name, sizeof(name), "flow_z%03zu.ppm", z);
        write_ppm(fs::path(out) / name, fl.w, fl.h, rgb);
    }
    Volume3D gmap = build_growth_map(c.timepoints[0].mask, c.timepoints[1].mask);
    save_volume(gmap, (fs::path(out) / "growth_map.vol.json").string());
    write_provenance(fs::path(out) / "flow", st.cfg,
                     {{"command", "flow"},
                      {"case", case_dir},
                      {"max_magnitude", maxmag},
                      {"slices", flow.slices.size()}});
    return 0;
}

int cmd_train(CliState& st, const std::string& cohort_dir, const std::string& kind_str,
              int epochs, const std::string& out) {
    ArchitectureKind kind = kind_from_name(kind_str);
    std::vector<LongitudinalCase> cohort;
    for (auto& c : load_cohort(cohort_dir)) cohort.push_back(align_to_tumor_center(c));
    TrainOptions opt = train_options(st.cfg);
    opt.config.max_epochs = epochs > 0 ? epochs
                            : (kind == ArchitectureKind::invasion ? st.cfg.invasion_epochs
                                                                  : st.cfg.other_epochs);
    auto streams = train_population(kind, cohort, opt);
    for (std::size_t s = 0; s < streams.size(); ++s)
        save_stream(streams[s], fs::path(out) / ("stream" + std::to_string(s)));
    write_provenance(fs::path(out) / "train", st.cfg,
                     {{"command", "train"},
                      {"kind", kind_str},
                      {"epochs", opt.config.max_epochs},
                      {"cases", cohort.size()}});
    std::printf("trained %s (%d epochs, %zu stream%s) -> %s\n", kind_str.c_str(),
                opt.config.max_epochs, streams.size(), streams.size() == 1 ? "" : "s",
                out.c_str());
    return 0;
}

int cmd_personalize(CliState& st, const std::string& model_dir, const std::string& case_dir,
                    const std::string& kind_str, const std::string& tau_ref_dir,
                    const std::string& out) {
    ArchitectureKind kind = kind_from_name(kind_str);
    std::vector<TrainedStream> streams;
    for (int s = 0; s < stream_count(kind); ++s)
        streams.push_back(load_stream(fs::path(model_dir) / ("stream" + std::to_string(s))));
    LongitudinalCase target = align_to_tumor_center(load_case(case_dir));
    TrainOptions opt = train_options(st.cfg);
    PersonalizedModel ref;
    const PersonalizedModel* refp = nullptr;
    if (!tau_ref_dir.empty()) {
        ref = load_personalized(tau_ref_dir);
        refp = &ref;
    }
    PersonalizedModel pm = personalize(kind, streams, target, opt, refp);
    save_personalized(pm, out);
    write_provenance(fs::path(out) / "personalize", st.cfg,
                     {{"command", "personalize"},
                      {"kind", kind_str},
                      {"case", case_dir},
                      {"tau", pm.tau},
                      {"chosen_epoch", pm.chosen_epoch}});
    std::printf("personalized %s: tau=%.2f epoch=%d\n", kind_str.c_str(), pm.tau,
                pm.chosen_epoch);
    return 0;
}

int cmd_predict(CliState& st, const std::string& model, const std::string& case_dir,
                const std::string& out) {
    LongitudinalCase c = align_to_tumor_center(load_case(case_dir));
    fs::create_directories(out);
    nlohmann::json details{{"command", "predict"}, {"case", case_dir}, {"model", model}};

    TumorMask pred;
    if (model == "linear") {
        pred = linear_predict(c.timepoints[0].mask, c.timepoints[1].mask);
    } else {
        PersonalizedModel pm = load_personalized(model);
        auto chans = prediction_channels(pm.kind, c, st.cfg.flow);
        Volume3D prob = predict_probability(pm, chans, c.timepoints[1].mask, st.cfg.zone_margin);
        save_volume(prob, (fs::path(out) / "probability.vol.json").string());
        pred = threshold_probability(prob, pm.tau);
        details["kind"] = kind_name(pm.kind);
        details["tau"] = pm.tau;
        details["epochs"] = pm.chosen_epoch;
    }
    save_volume(pred.volume, (fs::path(out) / "pred_mask.vol.json").string());
    write_provenance(fs::path(out) / "predict", st.cfg, details);
    return 0;
}

int cmd_evaluate(CliState& st, const std::string& pred_path, const std::string& gt_path,
                 const std::string& id, const std::string& kind, const std::string& out) {
    TumorMask pred{load_volume(pred_path)};
    TumorMask gt{load_volume(gt_path)};
    MetricEntry e = compute_metrics(pred, gt);
    e.patient_id = id;
    e.kind = kind;
    write_report({e}, out);
    write_provenance(fs::path(out) / "evaluate", st.cfg,
                     {{"command", "evaluate"}, {"pred", pred_path}, {"gt", gt_path}});
    std::printf("%s %s dice=%.4f recall=%.4f precision=%.4f rvd=%.4f\n", id.c_str(),
                kind.c_str(), e.dice, e.recall, e.precision, e.rvd);
    return 0;
}

int cmd_loocv(CliState& st, const std::string& cohort_dir, const std::string& kinds_str,
              bool fixed_variant, bool overlays, const std::string& out) {
    auto cohort = load_cohort(cohort_dir);
    LoocvOptions opt = loocv_options(st.cfg);
    if (!kinds_str.empty()) opt.kinds = split_csv(kinds_str);
    opt.include_fixed_variant = fixed_variant;
    fs::create_directories(out);
    if (overlays) opt.artifact_dir = (fs::path(out) / "overlays").string();
    auto entries = run_loocv(cohort, opt);
    write_report(entries, out);
    write_provenance(fs::path(out) / "loocv", st.cfg,
                     {{"command", "loocv"},
                      {"cohort", cohort_dir},
                      {"kinds", opt.kinds},
                      {"fixed_variant", fixed_variant},
                      {"cases", cohort.size()}});
    std::printf("loocv complete: %zu rows -> %s/report.csv\n", entries.size(), out.c_str());
    return 0;
}

int cmd_gradcheck() {
    GradCheckReport rep = gradient_check();
    for (const auto& r : rep.results)
        std::printf("%-16s max rel err %.3e\n", r.name.c_str(), r.max_rel_err);
    std::printf("gradcheck %s (tolerance %.0e)\n", rep.pass() ? "PASS" : "FAIL", rep.tolerance);
    return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tumorcast: voxel-wise tumor growth prediction from longitudinal imaging"};
    app.require_subcommand(1);

    CliState st;
    app.add_option("--config", st.config_path, "JSON run configuration file");
    app.add_option("--threads", st.threads_flag, "worker threads (1 = determinism baseline)");
    app.add_option("--seed", st.seed_flag, "master RNG seed");

    // synth
    int n = 10;
    std::string mix = "6,2,2", out_dir;
    auto* synth = app.add_subcommand("synth", "generate a synthetic longitudinal cohort");
    synth->add_option("--n", n, "cohort size");
    synth->add_option("--mix", mix, "nonlinear,stable,shrinking counts");
    synth->add_option("--out", out_dir, "output directory")->required();

    // preprocess
    std::string case_dir;
    int tp = 2;
    auto* prep = app.add_subcommand("preprocess", "emit SUV/ICVF/mask channels for one timepoint");
    prep->add_option("--case", case_dir, "case directory")->required();
    prep->add_option("--tp", tp, "timepoint (1..3)");
    prep->add_option("--out", out_dir, "output directory")->required();

    // flow
    auto* flow = app.add_subcommand("flow", "estimate t1->t2 mask flow; write color PPM slices");
    flow->add_option("--case", case_dir, "case directory")->required();
    flow->add_option("--out", out_dir, "output directory")->required();

    // train
    std::string kind = "invasion", cohort_dir;
    int epochs = 0;
    auto* train = app.add_subcommand("train", "population-train one architecture kind");
    train->add_option("--cohort", cohort_dir, "cohort directory")->required();
    train->add_option("--kind", kind, "invasion|expansion|early|late|end2end");
    train->add_option("--epochs", epochs, "override the per-kind epoch budget");
    train->add_option("--out", out_dir, "snapshot output directory")->required();

    // personalize
    std::string model_dir, tau_ref;
    auto* pers = app.add_subcommand("personalize",
                                    "snapshot selection + threshold on a target's first interval");
    pers->add_option("--model", model_dir, "training snapshot directory")->required();
    pers->add_option("--case", case_dir, "target case directory")->required();
    pers->add_option("--kind", kind, "architecture kind");
    pers->add_option("--tau-ref", tau_ref, "personalized invasion model supplying tau");
    pers->add_option("--out", out_dir, "output directory")->required();

    // predict
    auto* pred = app.add_subcommand("predict", "voxel-wise t3 prediction for one case");
    pred->add_option("--model", model_dir, "personalized model directory, or 'linear'")
        ->required();
    pred->add_option("--case", case_dir, "case directory")->required();
    pred->add_option("--out", out_dir, "output directory")->required();

    // evaluate
    std::string pred_path, gt_path, patient_id = "case";
    auto* eval = app.add_subcommand("evaluate", "score a predicted mask against ground truth");
    eval->add_option("--pred", pred_path, "predicted mask .vol.json")->required();
    eval->add_option("--gt", gt_path, "ground-truth mask .vol.json")->required();
    eval->add_option("--id", patient_id, "patient id for the report");
    eval->add_option("--kind", kind, "model kind label");
    eval->add_option("--out", out_dir, "report directory")->required();

    // loocv
    std::string kinds;
    bool fixed_variant = false, overlays = false;
    auto* loocv = app.add_subcommand("loocv", "leave-one-out study over a cohort");
    loocv->add_option("--cohort", cohort_dir, "cohort directory")->required();
    loocv->add_option("--kinds", kinds, "comma-separated kinds (default: all + linear)");
    loocv->add_flag("--fixed-variant", fixed_variant,
                    "also score final-epoch snapshots with tau=0.5");
    loocv->add_flag("--overlays", overlays, "write per-slice boundary overlays");
    loocv->add_option("--out", out_dir, "report directory")->required();

    // gradcheck
    app.add_subcommand("gradcheck", "finite-difference check of every layer type");

    // allow the global --config/--threads/--seed after the subcommand too
    for (auto* sc : app.get_subcommands([](const CLI::App*) { return true; }))
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n" << e.what() << "\n";
        return 2;
    }

    try {
        st.finalize();
        if (synth->parsed()) return cmd_synth(st, n, mix, out_dir);
        if (prep->parsed()) return cmd_preprocess(st, case_dir, tp, out_dir);
        if (flow->parsed()) return cmd_flow(st, case_dir, out_dir);
        if (train->parsed()) return cmd_train(st, cohort_dir, kind, epochs, out_dir);
        if (pers->parsed()) return cmd_personalize(st, model_dir, case_dir, kind, tau_ref, out_dir);
        if (pred->parsed()) return cmd_predict(st, model_dir, case_dir, out_dir);
        if (eval->parsed())
            return cmd_evaluate(st, pred_path, gt_path, patient_id, kind, out_dir);
        if (loocv->parsed()) return cmd_loocv(st, cohort_dir, kinds, fixed_variant, overlays, out_dir);
        return cmd_gradcheck();
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
