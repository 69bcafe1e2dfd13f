#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "tumorcast/checkpoint.hpp"
#include "tumorcast/gradcheck.hpp"
#include "tumorcast/models.hpp"
#include "tumorcast/nnet.hpp"

using namespace tumorcast;

namespace {

// Scales a wrapped convolution's gradients by 1%: the negative control
// for the finite-difference harness.
class CorruptedConv final : public Layer<double> {
  public:
    CorruptedConv(int kernel, int in_c, int out_c, std::mt19937& rng)
        : inner_(kernel, in_c, out_c, rng, 0.2) {}
    void forward(const Tensor4<double>& in, Tensor4<double>& out, bool train) override {
        inner_.forward(in, out, train);
    }
    void backward(const Tensor4<double>& in, const Tensor4<double>& dout,
                  Tensor4<double>& din) override {
        inner_.backward(in, dout, din);
        for (auto& v : din.data) v *= 1.01;
        for (auto* p : inner_.params())
            for (auto& g : p->g) g *= 1.01;
    }
    std::vector<Param<double>*> params() override { return inner_.params(); }
    std::array<int, 3> out_shape(std::array<int, 3> in) const override {
        return inner_.out_shape(in);
    }
    LayerSpec spec() const override { return inner_.spec(); }
    std::string name() const override { return "corrupted_conv"; }

  private:
    Conv2D<double> inner_;
};

}  // namespace

TEST_CASE("conv2d hand cases") {
    std::mt19937 rng(1);
    Conv2D<double> conv(3, 1, 1, rng);
    auto* w = conv.params()[0];

    SUBCASE("all-ones filter on all-ones 3x3 input: center 9, corners 4") {
        std::fill(w->w.begin(), w->w.end(), 1.0);
        Tensor4<double> x = Tensor4<double>::zeros(1, 3, 3, 1);
        std::fill(x.data.begin(), x.data.end(), 1.0);
        Tensor4<double> y;
        conv.forward(x, y, false);
        CHECK(y.at(0, 1, 1, 0) == doctest::Approx(9.0));
        CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4.0));
        CHECK(y.at(0, 2, 2, 0) == doctest::Approx(4.0));
        CHECK(y.at(0, 0, 1, 0) == doctest::Approx(6.0));
    }
    SUBCASE("identity filter reproduces the input") {
        std::fill(w->w.begin(), w->w.end(), 0.0);
        w->w[4] = 1.0;  // center tap of the 3x3 kernel
        Tensor4<double> x = Tensor4<double>::zeros(2, 4, 5, 1);
        std::mt19937 xr(2);
        std::uniform_real_distribution<double> uni(-1, 1);
        for (auto& v : x.data) v = uni(xr);
        Tensor4<double> y;
        conv.forward(x, y, false);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            CHECK(y.data[i] == doctest::Approx(x.data[i]));
    }
}

TEST_CASE("maxpool ceil-mode geometry") {
    CHECK(MaxPool2D<float>::out_extent(17, 3, 2) == 8);
    CHECK(MaxPool2D<float>::out_extent(8, 3, 2) == 4);
    CHECK(MaxPool2D<float>::out_extent(4, 3, 2) == 2);

    SUBCASE("4x4 ramp 1..16 pools to [[11,12],[15,16]]") {
        MaxPool2D<float> pool;
        Tensor4<float> x = Tensor4<float>::zeros(1, 4, 4, 1);
        for (int i = 0; i < 16; ++i) x.data[i] = float(i + 1);
        Tensor4<float> y;
        pool.forward(x, y, false);
        REQUIRE(y.h == 2);
        REQUIRE(y.w == 2);
        CHECK(y.at(0, 0, 0, 0) == 11.0f);
        CHECK(y.at(0, 0, 1, 0) == 12.0f);
        CHECK(y.at(0, 1, 0, 0) == 15.0f);
        CHECK(y.at(0, 1, 1, 0) == 16.0f);
    }
    SUBCASE("constant input stays constant") {
        MaxPool2D<float> pool;
        Tensor4<float> x = Tensor4<float>::zeros(1, 7, 7, 2);
        std::fill(x.data.begin(), x.data.end(), 3.5f);
        Tensor4<float> y;
        pool.forward(x, y, false);
        for (float v : y.data) CHECK(v == 3.5f);
    }
}

TEST_CASE("lrn matches the cross-channel formula") {
    SUBCASE("single channel, unit activation") {
        LRN<double> lrn;
        Tensor4<double> x = Tensor4<double>::zeros(1, 1, 1, 1);
        x.data[0] = 1.0;
        Tensor4<double> y;
        lrn.forward(x, y, false);
        CHECK(y.data[0] == doctest::Approx(1.0 / std::pow(1.0 + 1e-4 / 5.0, 0.75)));
    }
    SUBCASE("alpha=0 is the identity") {
        LRN<double> lrn(5, 0.0, 0.75, 1.0);
        Tensor4<double> x = Tensor4<double>::zeros(1, 2, 2, 3);
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> uni(-2, 2);
        for (auto& v : x.data) v = uni(rng);
        Tensor4<double> y;
        lrn.forward(x, y, false);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            CHECK(y.data[i] == doctest::Approx(x.data[i]));
    }
    SUBCASE("independent per-position evaluation over the channel window") {
        LRN<double> lrn;
        Tensor4<double> x = Tensor4<double>::zeros(1, 1, 1, 8);
        std::mt19937 rng(6);
        std::uniform_real_distribution<double> uni(-2, 2);
        for (auto& v : x.data) v = uni(rng);
        Tensor4<double> y;
        lrn.forward(x, y, false);
        for (int c = 0; c < 8; ++c) {
            double acc = 0;
            for (int j = std::max(0, c - 2); j <= std::min(7, c + 2); ++j)
                acc += x.data[j] * x.data[j];
            double expect = x.data[c] / std::pow(1.0 + 1e-4 / 5.0 * acc, 0.75);
            CHECK(y.data[c] == doctest::Approx(expect));
        }
    }
}

TEST_CASE("softmax cross entropy") {
    Tensor4<float> z = Tensor4<float>::zeros(1, 1, 1, 2);
    std::vector<int> labels{0};
    Tensor4<float> p, dz;
    float loss = softmax_xent<float>(z, labels, p, dz);
    CHECK(p.data[0] == doctest::Approx(0.5));
    CHECK(p.data[1] == doctest::Approx(0.5));
    CHECK(loss == doctest::Approx(std::log(2.0)));

    // probabilities positive and summing to 1 on random logits
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> uni(-5, 5);
    Tensor4<float> z2 = Tensor4<float>::zeros(16, 1, 1, 2);
    for (auto& v : z2.data) v = uni(rng);
    std::vector<int> l2(16, 1);
    float l = softmax_xent<float>(z2, l2, p, dz);
    CHECK(l > 0.0f);
    for (int n = 0; n < 16; ++n) {
        CHECK(p.data[2 * n] > 0.0f);
        CHECK(p.data[2 * n] + p.data[2 * n + 1] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("dropout modes") {
    Dropout<float> drop(0.9, 11);
    Tensor4<float> x = Tensor4<float>::zeros(1, 10, 10, 4);
    std::fill(x.data.begin(), x.data.end(), 2.0f);
    Tensor4<float> y;

    SUBCASE("eval mode is the identity") {
        drop.forward(x, y, false);
        CHECK(y.data == x.data);
    }
    SUBCASE("train mode keeps ~10% of units, scaled by 10x") {
        drop.forward(x, y, true);
        int kept = 0;
        for (float v : y.data) {
            CHECK((v == 0.0f || v == doctest::Approx(20.0f)));
            kept += v != 0.0f;
        }
        double frac = double(kept) / double(y.data.size());
        CHECK(frac > 0.03);
        CHECK(frac < 0.2);
    }
    SUBCASE("rate outside [0,1) rejected") { CHECK_THROWS(Dropout<float>(1.0, 1)); }
}

TEST_CASE("sgd momentum step and schedule") {
    TrainConfig cfg;
    CHECK(cfg.lr_at_epoch(0) == doctest::Approx(0.001));
    CHECK(cfg.lr_at_epoch(9) == doctest::Approx(0.001));
    CHECK(cfg.lr_at_epoch(10) == doctest::Approx(0.0001));
    CHECK(cfg.lr_at_epoch(25) == doctest::Approx(0.00001));

    Param<double> p;
    p.init_size(1);
    p.w[0] = 1.0;
    p.g[0] = 0.5;
    TrainConfig plain;
    plain.momentum = 0.0;
    plain.weight_decay = 0.0;
    sgd_step<double>({&p}, plain, 0);
    CHECK(p.w[0] == doctest::Approx(0.9995));

    // zero gradient, zero decay: parameters unchanged (no momentum carry)
    Param<double> q;
    q.init_size(3);
    q.w = {1.0, -2.0, 0.5};
    sgd_step<double>({&q}, plain, 0);
    CHECK(q.w == std::vector<double>{1.0, -2.0, 0.5});

    // momentum accumulates across steps
    Param<double> r;
    r.init_size(1);
    r.g[0] = 1.0;
    TrainConfig mom;
    mom.weight_decay = 0.0;
    sgd_step<double>({&r}, mom, 0);
    CHECK(r.w[0] == doctest::Approx(-0.001));
    r.g[0] = 1.0;
    sgd_step<double>({&r}, mom, 0);  // v = 0.9*(-0.001) - 0.001 = -0.0019
    CHECK(r.w[0] == doctest::Approx(-0.0029));
}

TEST_CASE("gradient suite passes at 1e-3") {
    GradCheckReport rep = gradient_check(1e-3, 1);
    for (const auto& r : rep.results) {
        INFO(r.name, " max_rel_err=", r.max_rel_err);
        CHECK(r.max_rel_err < 1e-3);
    }
    CHECK(rep.pass());
}

TEST_CASE("linear-only network sits at the numerical noise floor") {
    std::mt19937 rng(3);
    Dense<double> fc(12, 5, rng, 0.5);
    CHECK(layer_max_rel_error(fc, 2, 2, 3, 99) < 1e-8);
}

TEST_CASE("corrupted conv backward is detected") {
    std::mt19937 rng(4);
    CorruptedConv bad(3, 2, 3, rng);
    CHECK(layer_max_rel_error(bad, 5, 5, 2, 42) > 1e-3);
}

TEST_CASE("stream architecture shape pipeline") {
    std::mt19937 rng(1);
    SequentialNet<float> net(stream_spec(3, 17, 17), rng);
    const auto& trace = net.shape_trace();
    // conv1 -> relu -> pool -> lrn
    CHECK(trace[0] == std::array<int, 3>{17, 17, 64});
    CHECK(trace[2] == std::array<int, 3>{8, 8, 64});
    CHECK(trace[3] == std::array<int, 3>{8, 8, 64});
    // conv2 -> relu -> lrn
    CHECK(trace[6] == std::array<int, 3>{8, 8, 128});
    // conv3, conv4 -> pool
    CHECK(trace[8] == std::array<int, 3>{8, 8, 256});
    CHECK(trace[10] == std::array<int, 3>{8, 8, 512});
    CHECK(trace[11] == std::array<int, 3>{4, 4, 512});
    // fc5 -> 256, logits -> 2
    CHECK(trace[12] == std::array<int, 3>{1, 1, 256});
    CHECK(trace.back() == std::array<int, 3>{1, 1, 2});
}

TEST_CASE("parameter counts and ordering across fusion variants") {
    auto count = [](ArchitectureKind kind) {
        auto models = make_classifiers<float>(kind, 1);
        std::size_t n = 0;
        for (auto& m : models) n += m->parameter_count();
        return n;
    };
    // hand-derived from the layer shapes
    const std::size_t conv1_3 = 3 * 3 * 3 * 64 + 64;
    const std::size_t conv1_4 = 3 * 3 * 4 * 64 + 64;
    const std::size_t conv2 = 3 * 3 * 64 * 128 + 128;
    const std::size_t conv3 = 3 * 3 * 128 * 256 + 256;
    const std::size_t conv4 = 3 * 3 * 256 * 512 + 512;
    const std::size_t fc5 = 4 * 4 * 512 * 256 + 256;
    const std::size_t fc6 = 256 * 2 + 2;
    const std::size_t single = conv1_3 + conv2 + conv3 + conv4 + fc5 + fc6;

    std::size_t invasion = count(ArchitectureKind::invasion);
    std::size_t late = count(ArchitectureKind::late_fusion);
    std::size_t e2e = count(ArchitectureKind::end_to_end);
    CHECK(invasion == single);
    CHECK(late == 2 * single + (conv1_4 - conv1_3));
    const std::size_t trunk3 = conv1_3 + conv2 + conv3 + conv4;
    const std::size_t trunk4 = conv1_4 + conv2 + conv3 + conv4;
    const std::size_t fuse = 1024 * 512 + 512;
    CHECK(e2e == trunk3 + trunk4 + fuse + fc5 + fc6);
    CHECK(invasion < e2e);
    CHECK(e2e < late);
}

TEST_CASE("end-to-end fusion concat and head shapes") {
    auto models = make_classifiers<float>(ArchitectureKind::end_to_end, 1);
    auto& m = *models[0];
    CHECK_FALSE(m.single_stream());
    CHECK(m.input_channels() == 7);
    auto sa = m.stream_a().shape_trace().back();
    CHECK(sa == std::array<int, 3>{8, 8, 512});  // concat -> 8x8x1024
    const auto& head = m.head().shape_trace();
    CHECK(head[0] == std::array<int, 3>{8, 8, 512});  // 1x1 fusion conv
    CHECK(head[2] == std::array<int, 3>{4, 4, 512});
    CHECK(head.back() == std::array<int, 3>{1, 1, 2});

    Tensor4<float> x = Tensor4<float>::zeros(2, 17, 17, 7);
    const auto& logits = m.forward(x, false);
    CHECK(logits.c == 2);
}

TEST_CASE("training step is bitwise deterministic for a fixed seed") {
    auto run = [] {
        ArchParams tiny{.conv1 = 4, .conv2 = 4, .conv3 = 6, .conv4 = 6, .fc = 8};
        PatchClassifier<float> net(stream_spec(3, 9, 9, tiny), 7);
        std::mt19937 data_rng(21);
        std::uniform_real_distribution<float> uni(-1, 1);
        TrainConfig cfg;
        for (int step = 0; step < 3; ++step) {
            Tensor4<float> x = Tensor4<float>::zeros(6, 9, 9, 3);
            for (auto& v : x.data) v = uni(data_rng);
            std::vector<int> labels{0, 1, 1, 0, 1, 0};
            zero_grads(net.params());
            const auto& logits = net.forward(x, true);
            Tensor4<float> p, dz;
            softmax_xent<float>(logits, labels, p, dz);
            net.backward(dz);
            sgd_step(net.params(), cfg, 0);
        }
        std::vector<float> weights;
        for (auto* p : net.params()) weights.insert(weights.end(), p->w.begin(), p->w.end());
        return weights;
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tc_ckpt_test";
    fs::create_directories(dir);

    ArchParams tiny{.conv1 = 4, .conv2 = 4, .conv3 = 6, .conv4 = 6, .fc = 8};
    PatchClassifier<float> net(stream_spec(3, 9, 9, tiny), 13);
    std::vector<float> mean(9 * 9 * 3, 0.25f);
    Checkpoint ckpt = snapshot_model(net, 5, 13, mean);
    save_checkpoint(ckpt, (dir / "model").string());

    Checkpoint back = load_checkpoint((dir / "model").string());
    CHECK(back.epoch == 5);
    CHECK(back.seed == 13);
    CHECK(back.mean_patch == mean);
    REQUIRE(back.weights.size() == ckpt.weights.size());
    for (std::size_t i = 0; i < back.weights.size(); ++i) {
        REQUIRE(back.weights[i].size() == ckpt.weights[i].size());
        CHECK(std::memcmp(back.weights[i].data(), ckpt.weights[i].data(),
                          back.weights[i].size() * sizeof(float)) == 0);
    }

    SUBCASE("restored model forward equals pre-save forward bitwise") {
        auto restored = model_from_checkpoint(back);
        Tensor4<float> x = Tensor4<float>::zeros(2, 9, 9, 3);
        std::mt19937 rng(17);
        std::uniform_real_distribution<float> uni(-1, 1);
        for (auto& v : x.data) v = uni(rng);
        const auto& y0 = net.forward(x, false);
        Tensor4<float> y0copy = y0;
        const auto& y1 = restored->forward(x, false);
        CHECK(std::memcmp(y0copy.data.data(), y1.data.data(),
                          y1.data.size() * sizeof(float)) == 0);
    }

    SUBCASE("truncated blob is rejected") {
        fs::path raw = dir / "model.ckpt.raw";
        auto size = fs::file_size(raw);
        fs::resize_file(raw, size - 8);
        CHECK_THROWS(load_checkpoint((dir / "model").string()));
    }
    fs::remove_all(dir);
}
