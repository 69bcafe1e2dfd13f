#include "tumorcast/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tumorcast {

std::string kind_name(ArchitectureKind kind) {
    switch (kind) {
        case ArchitectureKind::invasion: return "invasion";
        case ArchitectureKind::expansion: return "expansion";
        case ArchitectureKind::early_fusion: return "early";
        case ArchitectureKind::late_fusion: return "late";
        case ArchitectureKind::end_to_end: return "end2end";
    }
    throw std::logic_error("unknown architecture kind");
}

ArchitectureKind kind_from_name(const std::string& name) {
    if (name == "invasion") return ArchitectureKind::invasion;
    if (name == "expansion") return ArchitectureKind::expansion;
    if (name == "early") return ArchitectureKind::early_fusion;
    if (name == "late") return ArchitectureKind::late_fusion;
    if (name == "end2end") return ArchitectureKind::end_to_end;
    throw std::invalid_argument("unknown architecture kind: " + name);
}

std::vector<int> stream_input_channels(ArchitectureKind kind) {
    switch (kind) {
        case ArchitectureKind::invasion: return {3};
        case ArchitectureKind::expansion: return {4};
        case ArchitectureKind::early_fusion: return {7};
        case ArchitectureKind::late_fusion: return {3, 4};
        case ArchitectureKind::end_to_end: return {7};
    }
    throw std::logic_error("unknown architecture kind");
}

SampleChannels invasion_input(const LongitudinalCase& c, int tp_index) {
    if (tp_index < 0 || tp_index > 2) throw std::invalid_argument("invasion_input: tp_index");
    InvasionImage img = assemble_invasion_channels(c.timepoints[std::size_t(tp_index)],
                                                   c.blood_hu_pre_mean, c.blood_hu_post_mean,
                                                   c.hematocrit);
    return invasion_channels(img);
}

SampleChannels expansion_input(const LongitudinalCase& c, const FlowParams& params) {
    ExpansionImage img =
        assemble_expansion_channels(c.timepoints[0].mask, c.timepoints[1].mask, params);
    return expansion_channels(img);
}

std::vector<SampleChannels> prediction_channels(ArchitectureKind kind, const LongitudinalCase& c,
                                                const FlowParams& params) {
    switch (kind) {
        case ArchitectureKind::invasion:
            return {invasion_input(c, 1)};
        case ArchitectureKind::expansion:
            return {expansion_input(c, params)};
        case ArchitectureKind::early_fusion:
        case ArchitectureKind::end_to_end:
            return {concat_channels(invasion_input(c, 1), expansion_input(c, params))};
        case ArchitectureKind::late_fusion:
            return {invasion_input(c, 1), expansion_input(c, params)};
    }
    throw std::logic_error("unknown architecture kind");
}

std::vector<PatchDataset> stream_training_patches(ArchitectureKind kind, int stream_index,
                                                  const LongitudinalCase& c,
                                                  const TrainOptions& opt) {
    const auto channels = stream_input_channels(kind);
    if (stream_index < 0 || stream_index >= int(channels.size()))
        throw std::invalid_argument("stream_training_patches: stream index");
    const int nc = channels[std::size_t(stream_index)];

    auto sample = [&](const SampleChannels& ch, int cur_tp, int next_tp, std::uint32_t salt) {
        return sample_training_patches(ch, c.timepoints[std::size_t(cur_tp)].mask,
                                       c.timepoints[std::size_t(next_tp)].mask,
                                       opt.negative_ratio, opt.seed + salt, opt.patch,
                                       opt.sample_halfspan);
    };

    if (nc == 3) {
        // invasion pairs: t1->t2 and t2->t3
        return {sample(invasion_input(c, 0), 0, 1, 101), sample(invasion_input(c, 1), 1, 2, 102)};
    }
    if (nc == 4) {
        // (t1->t2) motion predicting t3
        return {sample(expansion_input(c, opt.flow), 1, 2, 103)};
    }
    // 7-channel: static appearance of t2 stacked with (t1->t2) motion
    return {sample(concat_channels(invasion_input(c, 1), expansion_input(c, opt.flow)), 1, 2,
                   104)};
}

namespace {

PatchDataset concat_datasets(std::vector<PatchDataset> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_datasets: empty");
    PatchDataset all = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        PatchDataset& p = parts[i];
        if (p.patch != all.patch || p.channels != all.channels)
            throw std::invalid_argument("concat_datasets: shape mismatch");
        all.data.insert(all.data.end(), p.data.begin(), p.data.end());
        all.labels.insert(all.labels.end(), p.labels.begin(), p.labels.end());
        all.centers.insert(all.centers.end(), p.centers.begin(), p.centers.end());
    }
    return all;
}

/// Stable two-class softmax probability of class 1 per sample.
std::vector<float> tumor_probabilities(const Tensor4<float>& logits) {
    std::vector<float> out(std::size_t(logits.n));
    for (int n = 0; n < logits.n; ++n) {
        float z0 = logits.data[std::size_t(n) * 2];
        float z1 = logits.data[std::size_t(n) * 2 + 1];
        float m = std::max(z0, z1);
        float e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        out[std::size_t(n)] = e1 / (e0 + e1);
    }
    return out;
}

}  // namespace

TrainedStream train_stream(PatchClassifier<float>& model, const PatchDataset& ds,
                           const TrainConfig& cfg, std::uint32_t seed) {
    cfg.validate();
    if (ds.count() == 0) throw std::invalid_argument("train_stream: empty dataset");
    std::vector<float> mean = compute_mean_patch(ds);

    TrainedStream out;
    std::mt19937 rng(seed);
    std::vector<std::size_t> order(ds.count());
    std::iota(order.begin(), order.end(), std::size_t(0));

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch)) {
            std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch));
            std::vector<std::size_t> idx(order.begin() + long(start), order.begin() + long(end));
            std::vector<int> labels;
            Tensor4<float> batch = make_batch(ds, idx, mean, labels);
            zero_grads(model.params());
            const Tensor4<float>& logits = model.forward(batch, true);
            Tensor4<float> probs, dz;
            loss_sum += softmax_xent<float>(logits, labels, probs, dz);
            model.backward(dz);
            sgd_step(model.params(), cfg, epoch);
            ++batches;
        }
        out.train_loss.push_back(loss_sum / std::max(batches, 1));
        out.snapshots.push_back(snapshot_model(model, epoch + 1, seed, mean));
    }
    return out;
}

std::vector<TrainedStream> train_population(ArchitectureKind kind,
                                            const std::vector<LongitudinalCase>& cases,
                                            const TrainOptions& opt) {
    if (cases.size() < 2) throw std::invalid_argument("train_population: need >= 2 cases");
    auto models = make_classifiers<float>(kind, opt.seed, opt.arch, opt.patch);
    std::vector<TrainedStream> out;
    for (int s = 0; s < int(models.size()); ++s) {
        std::vector<PatchDataset> parts;
        for (const auto& c : cases)
            for (auto& ds : stream_training_patches(kind, s, c, opt))
                parts.push_back(std::move(ds));
        PatchDataset all = concat_datasets(std::move(parts));
        out.push_back(train_stream(*models[std::size_t(s)], all, opt.config,
                                   opt.seed + std::uint32_t(s) * 7919));
    }
    return out;
}

std::vector<double> snapshot_validation_losses(const TrainedStream& stream,
                                               const PatchDataset& validation) {
    if (validation.count() == 0)
        throw std::invalid_argument("snapshot_validation_losses: empty validation set");
    std::vector<double> losses;
    for (const auto& ckpt : stream.snapshots) {
        auto model = model_from_checkpoint(ckpt);
        double loss_sum = 0;
        std::size_t total = 0;
        const std::size_t batch = 512;
        for (std::size_t start = 0; start < validation.count(); start += batch) {
            std::size_t end = std::min(validation.count(), start + batch);
            std::vector<std::size_t> idx(end - start);
            std::iota(idx.begin(), idx.end(), start);
            std::vector<int> labels;
            Tensor4<float> x = make_batch(validation, idx, ckpt.mean_patch, labels);
            const Tensor4<float>& logits = model->forward(x, false);
            Tensor4<float> probs, dz;
            loss_sum += double(softmax_xent<float>(logits, labels, probs, dz)) * double(idx.size());
            total += idx.size();
        }
        losses.push_back(loss_sum / double(total));
    }
    return losses;
}

int select_snapshot(ArchitectureKind kind, const std::vector<double>& validation_losses,
                    int fixed_epoch) {
    if (validation_losses.empty()) throw std::invalid_argument("select_snapshot: empty run");
    if (kind != ArchitectureKind::invasion)
        return std::min(fixed_epoch, int(validation_losses.size())) - 1;
    int best = 0;
    for (int i = 1; i < int(validation_losses.size()); ++i)
        if (validation_losses[std::size_t(i)] < validation_losses[std::size_t(best)]) best = i;
    return best;
}

PatchDataset validation_dataset(const LongitudinalCase& target, const TrainOptions& opt) {
    return sample_training_patches(invasion_input(target, 0), target.timepoints[0].mask,
                                   target.timepoints[1].mask, 1.0, opt.seed + 555, opt.patch,
                                   opt.sample_halfspan);
}

void first_interval_probmap(const PersonalizedModel& invasion_model,
                            const LongitudinalCase& target, const TrainOptions& opt,
                            std::vector<float>& probs, std::vector<std::uint8_t>& labels) {
    const TumorMask& m1 = target.timepoints[0].mask;
    const TumorMask& m2 = target.timepoints[1].mask;
    Volume3D pv = predict_probability(invasion_model, {invasion_input(target, 0)}, m1,
                                      opt.zone_margin);
    Box3 zone = growth_zone(m1, opt.zone_margin);
    probs.clear();
    labels.clear();
    for (int z = zone.lo[2]; z <= zone.hi[2]; ++z)
        for (int y = zone.lo[1]; y <= zone.hi[1]; ++y)
            for (int x = zone.lo[0]; x <= zone.hi[0]; ++x) {
                probs.push_back(pv.at(x, y, z));
                labels.push_back(m2.foreground(x, y, z) ? 1 : 0);
            }
}

PersonalizedModel personalize(ArchitectureKind kind, const std::vector<TrainedStream>& streams,
                              const LongitudinalCase& target, const TrainOptions& opt,
                              const PersonalizedModel* invasion_ref) {
    if (int(streams.size()) != stream_count(kind))
        throw std::invalid_argument("personalize: stream count mismatch");
    PersonalizedModel pm;
    pm.kind = kind;

    const auto chans = stream_input_channels(kind);
    const bool has_invasion_stream =
        kind == ArchitectureKind::invasion || kind == ArchitectureKind::late_fusion;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        if (chans[s] == 3 && has_invasion_stream) {
            PatchDataset val = validation_dataset(target, opt);
            pm.validation_curve = snapshot_validation_losses(streams[s], val);
            int idx = select_snapshot(ArchitectureKind::invasion, pm.validation_curve);
            pm.chosen_epoch = idx + 1;
            pm.checkpoints.push_back(streams[s].snapshots[std::size_t(idx)]);
        } else {
            std::vector<double> dummy(streams[s].snapshots.size(), 0.0);
            int idx = select_snapshot(kind, dummy);
            if (!has_invasion_stream) pm.chosen_epoch = idx + 1;
            pm.checkpoints.push_back(streams[s].snapshots[std::size_t(idx)]);
        }
    }

    if (has_invasion_stream) {
        PersonalizedModel inv;
        inv.kind = ArchitectureKind::invasion;
        inv.checkpoints = {pm.checkpoints[0]};
        std::vector<float> probs;
        std::vector<std::uint8_t> labels;
        first_interval_probmap(inv, target, opt, probs, labels);
        pm.tau = personalize_threshold(probs, labels, &pm.tau_degenerate);
    } else if (invasion_ref) {
        pm.tau = invasion_ref->tau;
        pm.tau_degenerate = invasion_ref->tau_degenerate;
    } else {
        pm.tau = 0.5;
        pm.tau_default_fallback = true;
    }
    return pm;
}

double personalize_threshold(const std::vector<float>& probs,
                             const std::vector<std::uint8_t>& labels, bool* degenerate) {
    if (probs.size() != labels.size() || probs.empty())
        throw std::invalid_argument("personalize_threshold: size mismatch or empty");
    double best_tau = 0.05, best_dice = -1.0;
    for (int i = 1; i <= 19; ++i) {
        double tau = 0.05 * i;
        std::size_t tp = 0, pred = 0, gt = 0;
        for (std::size_t v = 0; v < probs.size(); ++v) {
            bool p = probs[v] >= float(tau);
            bool g = labels[v] != 0;
            tp += p && g;
            pred += p;
            gt += g;
        }
        double dice = (pred + gt) ? 2.0 * double(tp) / double(pred + gt) : 0.0;
        if (dice > best_dice) {
            best_dice = dice;
            best_tau = tau;
        }
    }
    if (degenerate) *degenerate = best_dice <= 0.0;
    return best_tau;
}

Volume3D predict_probability(const PersonalizedModel& model,
                             const std::vector<SampleChannels>& stream_channels,
                             const TumorMask& current_mask, Vec3i zone_margin) {
    if (stream_channels.size() != model.checkpoints.size())
        throw std::invalid_argument("predict_probability: stream count mismatch");
    for (const auto& ch : stream_channels) {
        ch.validate();
        if (!ch.channels.front().same_grid(current_mask.volume))
            throw std::invalid_argument("predict_probability: dims mismatch");
    }

    Box3 zone = growth_zone(current_mask, zone_margin);
    std::vector<Vec3i> centers;
    for (int z = zone.lo[2]; z <= zone.hi[2]; ++z)
        for (int y = zone.lo[1]; y <= zone.hi[1]; ++y)
            for (int x = zone.lo[0]; x <= zone.hi[0]; ++x) centers.push_back({x, y, z});

    Volume3D probs = Volume3D::zeros(current_mask.volume.dims[0], current_mask.volume.dims[1],
                                     current_mask.volume.dims[2], current_mask.volume.spacing);
    std::vector<double> acc(centers.size(), 0.0);

    for (std::size_t s = 0; s < model.checkpoints.size(); ++s) {
        const Checkpoint& ckpt = model.checkpoints[s];
        auto net = model_from_checkpoint(ckpt);
        int patch = net->single_stream() ? net->stream_a().spec().in_h
                                         : net->stream_a().spec().in_h;
        int nc = net->input_channels();
        if (int(stream_channels[s].channels.size()) != nc)
            throw std::invalid_argument("predict_probability: channel count mismatch");

        const std::size_t batch = 512;
        for (std::size_t start = 0; start < centers.size(); start += batch) {
            std::size_t end = std::min(centers.size(), start + batch);
            Tensor4<float> x = Tensor4<float>::zeros(int(end - start), patch, patch, nc);
            for (std::size_t i = start; i < end; ++i) {
                auto p = extract_patch(stream_channels[s], centers[i], patch);
                subtract_mean(p, ckpt.mean_patch);
                std::copy(p.begin(), p.end(), x.data.begin() + long((i - start) * p.size()));
            }
            const Tensor4<float>& logits = net->forward(x, false);
            auto p1 = tumor_probabilities(logits);
            for (std::size_t i = start; i < end; ++i) acc[i] += p1[i - start];
        }
    }

    const double inv = 1.0 / double(model.checkpoints.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const Vec3i& c = centers[i];
        probs.at(c.x, c.y, c.z) = float(acc[i] * inv);
    }
    return probs;
}

TumorMask threshold_probability(const Volume3D& probs, double tau) {
    TumorMask mask{Volume3D::zeros(probs.dims[0], probs.dims[1], probs.dims[2], probs.spacing)};
    for (std::size_t i = 0; i < probs.data.size(); ++i)
        mask.volume.data[i] = probs.data[i] >= float(tau) ? 255.0f : 0.0f;
    return mask;
}

}  // namespace tumorcast
