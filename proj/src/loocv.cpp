#include "tumorcast/loocv.hpp"

#include <algorithm>
#include <stdexcept>

#include "tumorcast/baseline.hpp"
#include "tumorcast/report.hpp"

namespace tumorcast {

namespace {

bool wants(const LoocvOptions& opt, const std::string& kind) {
    return std::find(opt.kinds.begin(), opt.kinds.end(), kind) != opt.kinds.end();
}

MetricEntry score(const TumorMask& pred, const LongitudinalCase& target, const std::string& kind,
                  const LoocvOptions& opt, const std::string& variant_suffix = "") {
    MetricEntry e = compute_metrics(pred, target.timepoints[2].mask);
    e.patient_id = target.patient_id;
    e.kind = kind + variant_suffix;
    if (!opt.artifact_dir.empty()) {
        Box3 zone = growth_zone(target.timepoints[1].mask, opt.train.zone_margin);
        write_overlays(pred, target.timepoints[2].mask, zone, opt.artifact_dir,
                       target.patient_id + "_" + e.kind);
    }
    return e;
}

/// Final-epoch snapshots with a fixed 0.5 threshold (the ablation arm).
PersonalizedModel fixed_variant(ArchitectureKind kind,
                                const std::vector<const TrainedStream*>& streams) {
    PersonalizedModel pm;
    pm.kind = kind;
    for (const auto* s : streams) {
        pm.checkpoints.push_back(s->snapshots.back());
        pm.chosen_epoch = int(s->snapshots.size());
    }
    pm.tau = 0.5;
    return pm;
}

}  // namespace

std::vector<MetricEntry> run_loocv(const std::vector<LongitudinalCase>& cohort,
                                   const LoocvOptions& opt) {
    if (cohort.size() < 2) throw std::invalid_argument("run_loocv: cohort size < 2");

    const bool needs_invasion =
        wants(opt, "invasion") || wants(opt, "late") || wants(opt, "expansion") ||
        wants(opt, "early") || wants(opt, "end2end");
    const bool needs_expansion = wants(opt, "expansion") || wants(opt, "late");

    std::vector<MetricEntry> entries;
    for (std::size_t fold = 0; fold < cohort.size(); ++fold) {
        LongitudinalCase target = align_to_tumor_center(cohort[fold]);
        std::vector<LongitudinalCase> training;
        for (std::size_t i = 0; i < cohort.size(); ++i)
            if (i != fold) training.push_back(align_to_tumor_center(cohort[i]));

        TrainOptions inv_opt = opt.train;
        inv_opt.config.max_epochs = opt.invasion_epochs;
        TrainOptions other_opt = opt.train;
        other_opt.config.max_epochs = opt.other_epochs;

        std::vector<TrainedStream> inv_streams;
        PersonalizedModel inv_pm;
        if (needs_invasion) {
            inv_streams = train_population(ArchitectureKind::invasion, training, inv_opt);
            inv_pm = personalize(ArchitectureKind::invasion, inv_streams, target, inv_opt);
        }
        std::vector<TrainedStream> exp_streams;
        if (needs_expansion)
            exp_streams = train_population(ArchitectureKind::expansion, training, other_opt);

        auto run_kind = [&](const std::string& kind_str) {
            if (kind_str == "linear") {
                TumorMask pred =
                    linear_predict(target.timepoints[0].mask, target.timepoints[1].mask);
                entries.push_back(score(pred, target, kind_str, opt));
                return;
            }
            ArchitectureKind kind = kind_from_name(kind_str);
            PersonalizedModel pm;
            std::vector<const TrainedStream*> streams;
            switch (kind) {
                case ArchitectureKind::invasion:
                    pm = inv_pm;
                    streams = {&inv_streams[0]};
                    break;
                case ArchitectureKind::expansion:
                    pm = personalize(kind, exp_streams, target, other_opt, &inv_pm);
                    streams = {&exp_streams[0]};
                    break;
                case ArchitectureKind::late_fusion: {
                    std::vector<TrainedStream> both;
                    both.push_back(inv_streams[0]);
                    both.push_back(exp_streams[0]);
                    pm = personalize(kind, both, target, inv_opt, &inv_pm);
                    streams = {&inv_streams[0], &exp_streams[0]};
                    break;
                }
                case ArchitectureKind::early_fusion:
                case ArchitectureKind::end_to_end: {
                    std::vector<TrainedStream> own = train_population(kind, training, other_opt);
                    pm = personalize(kind, own, target, other_opt, &inv_pm);
                    auto chans = prediction_channels(kind, target, opt.train.flow);
                    Volume3D prob =
                        predict_probability(pm, chans, target.timepoints[1].mask,
                                            opt.train.zone_margin);
                    TumorMask pred = threshold_probability(prob, pm.tau);
                    MetricEntry e = score(pred, target, kind_str, opt);
                    e.tau = pm.tau;
                    e.epochs = pm.chosen_epoch;
                    entries.push_back(e);
                    if (opt.include_fixed_variant) {
                        PersonalizedModel fx = fixed_variant(kind, {&own[0]});
                        TumorMask predf = threshold_probability(
                            predict_probability(fx, chans, target.timepoints[1].mask,
                                                opt.train.zone_margin),
                            fx.tau);
                        MetricEntry ef = score(predf, target, kind_str, opt, "+fixed");
                        ef.tau = fx.tau;
                        ef.epochs = fx.chosen_epoch;
                        entries.push_back(ef);
                    }
                    return;
                }
            }
            auto chans = prediction_channels(kind, target, opt.train.flow);
            Volume3D prob =
                predict_probability(pm, chans, target.timepoints[1].mask, opt.train.zone_margin);
            TumorMask pred = threshold_probability(prob, pm.tau);
            MetricEntry e = score(pred, target, kind_str, opt);
            e.tau = pm.tau;
            e.epochs = pm.chosen_epoch;
            entries.push_back(e);
            if (opt.include_fixed_variant) {
                PersonalizedModel fx = fixed_variant(kind, streams);
                TumorMask predf = threshold_probability(
                    predict_probability(fx, chans, target.timepoints[1].mask,
                                        opt.train.zone_margin),
                    fx.tau);
                MetricEntry ef = score(predf, target, kind_str, opt, "+fixed");
                ef.tau = fx.tau;
                ef.epochs = fx.chosen_epoch;
                entries.push_back(ef);
            }
        };

        for (const auto& kind_str : opt.kinds) run_kind(kind_str);
    }
    return entries;
}

}  // namespace tumorcast
