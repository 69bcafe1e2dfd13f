#include "tumorcast/gradcheck.hpp"

#include <cmath>
#include <random>

#include "tumorcast/models.hpp"

namespace tumorcast {

namespace {

double rel_err(double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-6) return std::abs(a - b);
    return std::abs(a - b) / scale;
}

Tensor4<double> random_tensor(int n, int h, int w, int c, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
    Tensor4<double> t = Tensor4<double>::zeros(n, h, w, c);
    std::uniform_real_distribution<double> uni(lo, hi);
    for (auto& v : t.data) v = uni(rng);
    return t;
}

}  // namespace

double layer_max_rel_error(Layer<double>& layer, int h, int w, int c, std::uint64_t seed,
                           bool train) {
    std::mt19937_64 rng(seed);
    Tensor4<double> x = random_tensor(2, h, w, c, rng);
    if (auto* d = dynamic_cast<Dropout<double>*>(&layer)) d->freeze_mask(true);

    Tensor4<double> out;
    layer.forward(x, out, train);
    Tensor4<double> readout = random_tensor(out.n, out.h, out.w, out.c, rng);

    auto loss = [&] {
        Tensor4<double> y;
        layer.forward(x, y, train);
        double acc = 0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += readout.data[i] * y.data[i];
        return acc;
    };

    for (auto* p : layer.params()) std::fill(p->g.begin(), p->g.end(), 0.0);
    layer.forward(x, out, train);
    Tensor4<double> din;
    layer.backward(x, readout, din);

    const double step = 1e-5;
    double worst = 0;
    auto fd = [&](double& slot, double analytic) {
        double keep = slot;
        slot = keep + step;
        double lp = loss();
        slot = keep - step;
        double lm = loss();
        slot = keep;
        worst = std::max(worst, rel_err(analytic, (lp - lm) / (2 * step)));
    };
    for (std::size_t i = 0; i < x.data.size(); ++i) fd(x.data[i], din.data[i]);
    for (auto* p : layer.params())
        for (std::size_t i = 0; i < p->w.size(); ++i) fd(p->w[i], p->g[i]);
    return worst;
}

double softmax_max_rel_error(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor4<double> z = random_tensor(4, 1, 1, 3, rng, -2.0, 2.0);
    std::vector<int> labels{0, 2, 1, 2};
    Tensor4<double> probs, dz;
    softmax_xent<double>(z, labels, probs, dz);

    const double step = 1e-6;
    double worst = 0;
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        double keep = z.data[i];
        Tensor4<double> p2, d2;
        z.data[i] = keep + step;
        double lp = softmax_xent<double>(z, labels, p2, d2);
        z.data[i] = keep - step;
        double lm = softmax_xent<double>(z, labels, p2, d2);
        z.data[i] = keep;
        worst = std::max(worst, rel_err(dz.data[i], (lp - lm) / (2 * step)));
    }
    return worst;
}

double classifier_max_rel_error(PatchClassifier<double>& model, int h, int w, int in_c,
                                std::uint64_t seed, int samples_per_param) {
    std::mt19937_64 rng(seed);
    Tensor4<double> x = random_tensor(3, h, w, in_c, rng);
    std::vector<int> labels{1, 0, 1};
    model.freeze_dropout(true);

    auto loss = [&] {
        const Tensor4<double>& logits = model.forward(x, true);
        Tensor4<double> probs, dz;
        return softmax_xent<double>(logits, labels, probs, dz);
    };

    auto params = model.params();
    for (auto* p : params) std::fill(p->g.begin(), p->g.end(), 0.0);
    {
        const Tensor4<double>& logits = model.forward(x, true);
        Tensor4<double> probs, dz;
        softmax_xent<double>(logits, labels, probs, dz);
        model.backward(dz);
    }

    const double step = 1e-5;
    double worst = 0;
    for (auto* p : params) {
        std::uniform_int_distribution<std::size_t> pick(0, p->w.size() - 1);
        for (int s = 0; s < samples_per_param && std::size_t(s) < p->w.size(); ++s) {
            std::size_t i = pick(rng);
            double keep = p->w[i];
            p->w[i] = keep + step;
            double lp = loss();
            p->w[i] = keep - step;
            double lm = loss();
            p->w[i] = keep;
            worst = std::max(worst, rel_err(p->g[i], (lp - lm) / (2 * step)));
        }
    }
    return worst;
}

GradCheckReport gradient_check(double tolerance, std::uint64_t seed) {
    GradCheckReport rep;
    rep.tolerance = tolerance;
    std::mt19937 wrng{std::uint32_t(seed)};

    {
        Conv2D<double> conv(3, 2, 3, wrng, 0.2);
        rep.results.push_back({"conv3x3", layer_max_rel_error(conv, 5, 5, 2, seed + 1)});
    }
    {
        Conv2D<double> conv(1, 3, 2, wrng, 0.2);
        rep.results.push_back({"conv1x1", layer_max_rel_error(conv, 4, 4, 3, seed + 2)});
    }
    {
        ReLU<double> relu;
        rep.results.push_back({"relu", layer_max_rel_error(relu, 5, 5, 3, seed + 3)});
    }
    {
        MaxPool2D<double> pool(3, 2);
        rep.results.push_back({"maxpool", layer_max_rel_error(pool, 5, 5, 2, seed + 4)});
    }
    {
        LRN<double> lrn(5, 1e-4, 0.75, 1.0);
        rep.results.push_back({"lrn", layer_max_rel_error(lrn, 3, 3, 6, seed + 5)});
    }
    {
        Dense<double> fc(3 * 3 * 2, 4, wrng, 0.2);
        rep.results.push_back({"fc", layer_max_rel_error(fc, 3, 3, 2, seed + 6)});
    }
    {
        Dropout<double> drop(0.9, seed + 7);
        rep.results.push_back({"dropout", layer_max_rel_error(drop, 4, 4, 3, seed + 7, true)});
    }
    rep.results.push_back({"softmax_xent", softmax_max_rel_error(seed + 8)});
    {
        ArchParams tiny;
        tiny.conv1 = 4;
        tiny.conv2 = 6;
        tiny.conv3 = 8;
        tiny.conv4 = 10;
        tiny.fc = 8;
        tiny.fuse = 10;
        // Lively weights so deep-layer gradients are well above the
        // finite-difference noise floor.
        auto rerandomize = [&wrng](PatchClassifier<double>& m) {
            std::normal_distribution<double> dist(0.0, 0.2);
            for (auto* p : m.params())
                for (auto& v : p->w) v = dist(wrng);
        };
        PatchClassifier<double> net(stream_spec(3, 9, 9, tiny), std::uint32_t(seed + 9));
        rerandomize(net);
        rep.results.push_back(
            {"invasion_net", classifier_max_rel_error(net, 9, 9, 3, seed + 9)});
        auto fused = make_classifiers<double>(ArchitectureKind::end_to_end,
                                              std::uint32_t(seed + 10), tiny, 9);
        rerandomize(*fused[0]);
        rep.results.push_back(
            {"two_stream_net", classifier_max_rel_error(*fused[0], 9, 9, 7, seed + 10)});
    }
    return rep;
}

}  // namespace tumorcast
