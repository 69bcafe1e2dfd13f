#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tumorcast/case.hpp"
#include "tumorcast/checkpoint.hpp"
#include "tumorcast/nnet.hpp"
#include "tumorcast/sampling.hpp"

namespace tumorcast {

enum class ArchitectureKind { invasion, expansion, early_fusion, late_fusion, end_to_end };

std::string kind_name(ArchitectureKind kind);
ArchitectureKind kind_from_name(const std::string& name);

/// Channel widths of the shared stream topology. Defaults are the
/// full-size network; smaller widths keep the same shape pipeline.
struct ArchParams {
    int conv1 = 64, conv2 = 128, conv3 = 256, conv4 = 512;
    int fc = 256;
    int fuse = 512;  // 1x1 fusion conv width (two-stream conv fusion)
    double dropout_rate = 0.9;
    // Gaussian init std. The 0.01 default suits the full-width network;
    // narrow configurations need a larger value or the activations
    // vanish through the four conv layers and training stalls.
    double init_std = 0.01;
};

/// conv1-relu-pool-lrn / conv2-relu-lrn / conv3-relu / conv4-relu-pool /
/// fc-relu-dropout / fc(2).
inline NetworkSpec stream_spec(int in_c, int in_h, int in_w, const ArchParams& p = {}) {
    NetworkSpec s;
    s.in_h = in_h;
    s.in_w = in_w;
    s.in_c = in_c;
    s.init_std = p.init_std;
    s.layers = {
        {.kind = LayerKind::conv, .out_channels = p.conv1, .kernel = 3},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool, .kernel = 3, .stride = 2},
        {.kind = LayerKind::lrn},
        {.kind = LayerKind::conv, .out_channels = p.conv2, .kernel = 3},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::lrn},
        {.kind = LayerKind::conv, .out_channels = p.conv3, .kernel = 3},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::conv, .out_channels = p.conv4, .kernel = 3},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool, .kernel = 3, .stride = 2},
        {.kind = LayerKind::fc, .out_channels = p.fc},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::dropout, .rate = p.dropout_rate},
        {.kind = LayerKind::fc, .out_channels = 2},
    };
    return s;
}

/// Trunk (through conv4 + relu) for the conv-fusion variant.
inline NetworkSpec trunk_spec(int in_c, int in_h, int in_w, const ArchParams& p = {}) {
    NetworkSpec s = stream_spec(in_c, in_h, in_w, p);
    s.layers.resize(11);  // up to and including relu after conv4
    return s;
}

/// Head after channel concat: 1x1 fusion conv, relu, pool, fc, relu,
/// dropout, fc(2).
inline NetworkSpec fusion_head_spec(int in_h, int in_w, int in_c, const ArchParams& p = {}) {
    NetworkSpec s;
    s.in_h = in_h;
    s.in_w = in_w;
    s.in_c = in_c;
    s.init_std = p.init_std;
    s.layers = {
        {.kind = LayerKind::conv, .out_channels = p.fuse, .kernel = 1},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool, .kernel = 3, .stride = 2},
        {.kind = LayerKind::fc, .out_channels = p.fc},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::dropout, .rate = p.dropout_rate},
        {.kind = LayerKind::fc, .out_channels = 2},
    };
    return s;
}

/// Number of classifier streams the kind owns (late fusion has two).
inline int stream_count(ArchitectureKind kind) {
    return kind == ArchitectureKind::late_fusion ? 2 : 1;
}

/// Input channel count per stream; {3}, {4}, {7}, {3,4}, {3+4}.
std::vector<int> stream_input_channels(ArchitectureKind kind);

template <typename T>
std::vector<std::unique_ptr<PatchClassifier<T>>> make_classifiers(ArchitectureKind kind,
                                                                  std::uint32_t seed,
                                                                  const ArchParams& p = {},
                                                                  int patch = 17) {
    std::vector<std::unique_ptr<PatchClassifier<T>>> out;
    switch (kind) {
        case ArchitectureKind::invasion:
            out.push_back(
                std::make_unique<PatchClassifier<T>>(stream_spec(3, patch, patch, p), seed));
            break;
        case ArchitectureKind::expansion:
            out.push_back(
                std::make_unique<PatchClassifier<T>>(stream_spec(4, patch, patch, p), seed));
            break;
        case ArchitectureKind::early_fusion:
            out.push_back(
                std::make_unique<PatchClassifier<T>>(stream_spec(7, patch, patch, p), seed));
            break;
        case ArchitectureKind::late_fusion:
            out.push_back(
                std::make_unique<PatchClassifier<T>>(stream_spec(3, patch, patch, p), seed));
            out.push_back(
                std::make_unique<PatchClassifier<T>>(stream_spec(4, patch, patch, p), seed + 1));
            break;
        case ArchitectureKind::end_to_end: {
            NetworkSpec ta = trunk_spec(3, patch, patch, p);
            NetworkSpec tb = trunk_spec(4, patch, patch, p);
            std::mt19937 probe(0);
            SequentialNet<T> tmp(ta, probe);  // shape probe for the head input
            auto sh = tmp.shape_trace().back();
            out.push_back(std::make_unique<PatchClassifier<T>>(
                ta, tb, fusion_head_spec(sh[0], sh[1], 2 * sh[2], p), seed));
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

/// One trained growth predictor: per-stream per-epoch snapshots plus the
/// personalization outcome.
struct TrainedStream {
    std::vector<Checkpoint> snapshots;  // one per epoch, in order
    std::vector<double> train_loss;     // per epoch
};

struct PersonalizedModel {
    ArchitectureKind kind = ArchitectureKind::invasion;
    std::vector<Checkpoint> checkpoints;  // one per stream
    double tau = 0.5;
    std::vector<double> validation_curve;  // invasion snapshot selection
    int chosen_epoch = 0;
    // True when tau could not be personalized (no invasion stream or
    // reference available) and the 0.5 default was used instead.
    bool tau_default_fallback = false;
    bool tau_degenerate = false;  // all-zero Dice on the tau grid
};

struct TrainOptions {
    TrainConfig config;  // max_epochs defaults per kind via default_epochs()
    ArchParams arch;
    FlowParams flow;
    std::uint32_t seed = 1;
    int patch = 17;
    double negative_ratio = 1.15;
    Vec3i sample_halfspan{15, 15, 15};
    Vec3i zone_margin{3, 3, 3};
};

/// 30-epoch budget for the invasion network (snapshot selection), fixed
/// 20 epochs for every other kind.
inline int default_epochs(ArchitectureKind kind) {
    return kind == ArchitectureKind::invasion ? 30 : 20;
}

/// Static-appearance channels (SUV, ICVF, mask) of one timepoint.
SampleChannels invasion_input(const LongitudinalCase& c, int tp_index);

/// Motion channels (color-coded flow + growth map) of the t1->t2 pair.
SampleChannels expansion_input(const LongitudinalCase& c, const FlowParams& params = {});

/// Per-stream channels for predicting t3 from (t1, t2): invasion streams
/// read timepoint 2, expansion streams the t1->t2 flow, 7-channel
/// streams their concatenation.
std::vector<SampleChannels> prediction_channels(ArchitectureKind kind, const LongitudinalCase& c,
                                                const FlowParams& params = {});

/// Training patch sets for one stream of one case, on the pair tags the
/// kind dictates: invasion streams yield both the t1->t2 and t2->t3
/// pairs; expansion-driven streams yield the single (t1->t2)->t3 triplet.
std::vector<PatchDataset> stream_training_patches(ArchitectureKind kind, int stream_index,
                                                  const LongitudinalCase& c,
                                                  const TrainOptions& opt);

/// One SGD run over the dataset; retains a per-epoch snapshot.
TrainedStream train_stream(PatchClassifier<float>& model, const PatchDataset& ds,
                           const TrainConfig& cfg, std::uint32_t seed);

/// Population training across cases; one TrainedStream per model stream.
std::vector<TrainedStream> train_population(ArchitectureKind kind,
                                            const std::vector<LongitudinalCase>& cases,
                                            const TrainOptions& opt);

/// Mean eval-mode cross entropy of each snapshot on a validation set.
std::vector<double> snapshot_validation_losses(const TrainedStream& stream,
                                               const PatchDataset& validation);

/// Invasion: argmin validation loss (ties -> earliest epoch). Other
/// kinds: the fixed epoch-20 snapshot (index 19), clamped to the run.
int select_snapshot(ArchitectureKind kind, const std::vector<double>& validation_losses,
                    int fixed_epoch = 20);

/// Balanced (ratio 1.0) seeded patch set from the target's first
/// interval, for invasion snapshot selection.
PatchDataset validation_dataset(const LongitudinalCase& target, const TrainOptions& opt);

/// Invasion probability map over growth_zone(mask_t1) of the target's
/// first interval, with mask_t2 labels, flattened in zone scan order.
void first_interval_probmap(const PersonalizedModel& invasion_model,
                            const LongitudinalCase& target, const TrainOptions& opt,
                            std::vector<float>& probs, std::vector<std::uint8_t>& labels);

/// Two-step personalization: snapshot selection (validation argmin for
/// invasion streams, fixed epoch 20 otherwise) plus the Dice-optimal
/// threshold on the target's first interval. Kinds without an invasion
/// stream reuse invasion_ref's tau; absent that, tau falls back to 0.5
/// (flagged).
PersonalizedModel personalize(ArchitectureKind kind, const std::vector<TrainedStream>& streams,
                              const LongitudinalCase& target, const TrainOptions& opt,
                              const PersonalizedModel* invasion_ref = nullptr);

/// Dice-optimal threshold over the grid 0.05..0.95 (step 0.05, ties ->
/// smallest). probs/labels are voxel-aligned; degenerate (all-zero Dice)
/// returns 0.05 and sets the flag.
double personalize_threshold(const std::vector<float>& probs,
                             const std::vector<std::uint8_t>& labels,
                             bool* degenerate = nullptr);

/// Voxel-wise tumor probability over growth_zone(current_mask); outside
/// the zone the probability is 0. Late fusion averages stream softmax
/// scores; stream_channels must match the model's stream count.
Volume3D predict_probability(const PersonalizedModel& model,
                             const std::vector<SampleChannels>& stream_channels,
                             const TumorMask& current_mask, Vec3i zone_margin = {3, 3, 3});

TumorMask threshold_probability(const Volume3D& probs, double tau);

}  // namespace tumorcast
