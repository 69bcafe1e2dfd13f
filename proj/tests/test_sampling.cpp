#include <doctest.h>

#include <random>

#include "tumorcast/sampling.hpp"

using namespace tumorcast;

namespace {

TumorMask sphere_mask(int n, double cx, double cy, double cz, double r) {
    TumorMask m{Volume3D::zeros(n, n, n)};
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double dx = x - cx, dy = y - cy, dz = z - cz;
                if (dx * dx + dy * dy + dz * dz <= r * r) m.volume.at(x, y, z) = 255.0f;
            }
    return m;
}

SampleChannels coordinate_channels(int n) {
    // channel 0 constant, channel 1 encodes the linear voxel index
    SampleChannels ch;
    ch.channels.push_back(Volume3D::zeros(n, n, n));
    for (auto& v : ch.channels[0].data) v = 7.0f;
    Volume3D idx = Volume3D::zeros(n, n, n);
    for (std::size_t i = 0; i < idx.data.size(); ++i) idx.data[i] = float(i % 1000);
    ch.channels.push_back(idx);
    return ch;
}

}  // namespace

TEST_CASE("growth_zone arithmetic") {
    TumorMask m{Volume3D::zeros(64, 64, 64)};
    for (int z = 10; z <= 20; ++z)
        for (int y = 10; y <= 20; ++y)
            for (int x = 10; x <= 20; ++x) m.volume.at(x, y, z) = 255.0f;

    Box3 zone = growth_zone(m, {3, 3, 3});
    CHECK(zone == Box3{{7, 7, 7}, {23, 23, 23}});

    SUBCASE("zero margin equals the bounding box") {
        CHECK(growth_zone(m, {0, 0, 0}) == bounding_box(m));
    }
    SUBCASE("clipped at the volume edge") {
        TumorMask edge{Volume3D::zeros(16, 16, 16)};
        edge.volume.at(1, 1, 1) = 255.0f;
        edge.volume.at(14, 2, 2) = 255.0f;
        Box3 z = growth_zone(edge, {3, 3, 3});
        CHECK(z == Box3{{0, 0, 0}, {15, 5, 5}});
    }
    SUBCASE("empty mask rejected") {
        TumorMask empty{Volume3D::zeros(8, 8, 8)};
        CHECK_THROWS(growth_zone(empty));
    }
}

TEST_CASE("extract_patch geometry and padding") {
    const int n = 40;
    SampleChannels ch = coordinate_channels(n);

    SUBCASE("deep interior: constant channel is all 7") {
        auto p = extract_patch(ch, {20, 20, 20});
        REQUIRE(p.size() == std::size_t(17 * 17 * 2));
        for (int py = 0; py < 17; ++py)
            for (int px = 0; px < 17; ++px) {
                CHECK(p[(py * 17 + px) * 2 + 0] == 7.0f);
                std::size_t vi = ch.channels[1].index(20 + px - 8, 20 + py - 8, 20);
                CHECK(p[(py * 17 + px) * 2 + 1] == float(vi % 1000));
            }
    }
    SUBCASE("corner center: out-of-volume rows/cols are zero padded") {
        auto p = extract_patch(ch, {0, 0, 5});
        for (int py = 0; py < 17; ++py)
            for (int px = 0; px < 17; ++px) {
                float v = p[(py * 17 + px) * 2 + 0];
                if (py < 8 || px < 8)
                    CHECK(v == 0.0f);
                else
                    CHECK(v == 7.0f);
            }
        CHECK(p[(8 * 17 + 8) * 2 + 1] == float(ch.channels[1].index(0, 0, 5) % 1000));
    }
    SUBCASE("center outside the volume is rejected") {
        CHECK_THROWS(extract_patch(ch, {-1, 3, 3}));
        CHECK_THROWS(extract_patch(ch, {3, 3, 40}));
    }
}

TEST_CASE("sample_training_patches labels, box restriction, balancing") {
    const int n = 40;
    SampleChannels ch = coordinate_channels(n);
    TumorMask cur = sphere_mask(n, 20, 20, 20, 4.0);
    TumorMask next = sphere_mask(n, 20, 20, 20, 6.0);

    PatchDataset ds = sample_training_patches(ch, cur, next, 1.15, 42);

    std::size_t pos = 0;
    for (std::size_t i = 0; i < ds.count(); ++i) {
        const Vec3i& c = ds.centers[i];
        // centers restricted to the +-15 box around the centroid (20,20,20)
        CHECK(std::abs(c.x - 20) <= 15);
        CHECK(std::abs(c.y - 20) <= 15);
        CHECK(std::abs(c.z - 20) <= 15);
        // label is the NEXT-timepoint mask at the center
        CHECK(ds.labels[i] == (next.foreground(c.x, c.y, c.z) ? 1 : 0));
        pos += ds.labels[i];
    }

    // every positive candidate in the box is kept
    std::size_t pos_in_box = 0;
    for (int z = 5; z <= 35; ++z)
        for (int y = 5; y <= 35; ++y)
            for (int x = 5; x <= 35; ++x) pos_in_box += next.foreground(x, y, z);
    CHECK(pos == pos_in_box);

    // negatives under-sampled to the requested ratio
    std::size_t neg = ds.count() - pos;
    CHECK(neg == std::size_t(std::llround(1.15 * double(pos))));

    // patch payload matches direct extraction
    auto direct = extract_patch(ch, ds.centers[0]);
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(ds.data[i] == direct[i]);

    SUBCASE("same seed reproduces the dataset exactly") {
        PatchDataset again = sample_training_patches(ch, cur, next, 1.15, 42);
        CHECK(again.labels == ds.labels);
        CHECK(again.centers == ds.centers);
        CHECK(again.data == ds.data);
    }
    SUBCASE("different seed draws different negatives") {
        PatchDataset other = sample_training_patches(ch, cur, next, 1.15, 43);
        CHECK(other.count() == ds.count());
        CHECK(other.centers != ds.centers);
    }
    SUBCASE("no positive candidates is an error") {
        TumorMask empty_next{Volume3D::zeros(n, n, n)};
        // valid current mask, next mask empty inside the box
        empty_next.volume.at(0, 0, 0) = 255.0f;
        CHECK_THROWS(sample_training_patches(ch, cur, empty_next, 1.15, 1));
    }
}

TEST_CASE("mean patch computation and application") {
    PatchDataset ds;
    ds.patch = 2;
    ds.channels = 1;
    ds.data = {1, 2, 3, 4, 3, 4, 5, 6};
    ds.labels = {0, 1};
    ds.centers = {{0, 0, 0}, {1, 0, 0}};

    auto mean = compute_mean_patch(ds);
    CHECK(mean == std::vector<float>{2, 3, 4, 5});

    std::vector<float> p{1, 2, 3, 4};
    subtract_mean(p, mean);
    CHECK(p == std::vector<float>{-1, -1, -1, -1});

    SUBCASE("identical patches center to zero") {
        PatchDataset same;
        same.patch = 2;
        same.channels = 1;
        same.data = {5, 5, 5, 5, 5, 5, 5, 5};
        same.labels = {0, 0};
        same.centers = {{0, 0, 0}, {0, 0, 0}};
        auto m = compute_mean_patch(same);
        std::vector<float> q{5, 5, 5, 5};
        subtract_mean(q, m);
        for (float v : q) CHECK(v == 0.0f);
    }
    SUBCASE("empty dataset rejected") {
        PatchDataset empty;
        CHECK_THROWS(compute_mean_patch(empty));
    }
    SUBCASE("make_batch applies the mean and carries labels") {
        std::vector<int> labels;
        Tensor4<float> batch = make_batch(ds, {1, 0}, mean, labels);
        CHECK(labels == std::vector<int>{1, 0});
        CHECK(batch.data == std::vector<float>{1, 1, 1, 1, -1, -1, -1, -1});
    }
}
