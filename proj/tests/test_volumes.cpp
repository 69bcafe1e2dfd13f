#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>

#include "tumorcast/case.hpp"
#include "tumorcast/volume.hpp"

using namespace tumorcast;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("tc_volumes_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TumorMask ball_mask(int n, double cx, double cy, double cz, double r) {
    TumorMask m{Volume3D::zeros(n, n, n)};
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double dx = x - cx, dy = y - cy, dz = z - cz;
                if (dx * dx + dy * dy + dz * dz <= r * r) m.volume.at(x, y, z) = 255.0f;
            }
    return m;
}

}  // namespace

TEST_CASE("volume invariants") {
    Volume3D v = Volume3D::zeros(2, 3, 4);
    CHECK(v.voxel_count() == 24);
    v.data.pop_back();
    CHECK_THROWS(v.validate());

    Volume3D bad = Volume3D::zeros(2, 2, 2);
    bad.spacing[1] = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("x-fastest layout") {
    Volume3D v = Volume3D::zeros(2, 2, 1);
    v.data = {1, 2, 3, 4};
    CHECK(v.at(1, 0, 0) == 2.0f);
    CHECK(v.at(0, 1, 0) == 3.0f);
}

TEST_CASE("save/load round trip") {
    auto dir = temp_dir("roundtrip");
    Volume3D v = Volume3D::zeros(4, 4, 4, {0.7, 0.7, 1.0});
    for (float& f : v.data) f = 7.5f;
    std::string path = (dir / "a.vol.json").string();
    save_volume(v, path);
    CHECK(load_volume(path) == v);

    // 3x3x3 ramp -> 108-byte blob
    Volume3D r = Volume3D::zeros(3, 3, 3);
    for (int i = 0; i < 27; ++i) r.data[i] = float(i);
    save_volume(r, (dir / "ramp.vol.json").string());
    CHECK(fs::file_size(dir / "ramp.raw") == 108);
}

TEST_CASE("round trip is bit exact for arbitrary finite float payloads") {
    auto dir = temp_dir("prop");
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> val(-1e6f, 1e6f);
    std::uniform_int_distribution<int> dim(1, 9);
    for (int trial = 0; trial < 20; ++trial) {
        Volume3D v = Volume3D::zeros(dim(rng), dim(rng), dim(rng));
        for (float& f : v.data) f = val(rng);
        std::string path = (dir / ("p" + std::to_string(trial) + ".vol.json")).string();
        save_volume(v, path);
        Volume3D back = load_volume(path);
        REQUIRE(back.data.size() == v.data.size());
        for (std::size_t i = 0; i < v.data.size(); ++i)
            REQUIRE(std::memcmp(&back.data[i], &v.data[i], sizeof(float)) == 0);
    }
}

TEST_CASE("load errors") {
    auto dir = temp_dir("errors");
    CHECK_THROWS(load_volume((dir / "missing.vol.json").string()));

    Volume3D v = Volume3D::zeros(4, 4, 4);
    std::string path = (dir / "short.vol.json").string();
    save_volume(v, path);
    // Truncate the blob.
    fs::resize_file(dir / "short.raw", 10);
    CHECK_THROWS_WITH_AS(load_volume(path), doctest::Contains("length mismatch"),
                         std::runtime_error);
}

TEST_CASE("mask validation") {
    TumorMask m{Volume3D::zeros(2, 2, 2)};
    m.volume.data[3] = 255.0f;
    CHECK_NOTHROW(m.validate());
    m.volume.data[1] = 128.0f;
    CHECK_THROWS(m.validate());
}

TEST_CASE("bounding box") {
    TumorMask m{Volume3D::zeros(10, 10, 10)};
    m.volume.at(5, 6, 7) = 255.0f;
    Box3 b = bounding_box(m);
    CHECK(b == Box3{{5, 6, 7}, {5, 6, 7}});

    m.volume.at(5, 6, 7) = 0.0f;
    m.volume.at(1, 1, 1) = 255.0f;
    m.volume.at(4, 2, 1) = 255.0f;
    b = bounding_box(m);
    CHECK(b == Box3{{1, 1, 1}, {4, 2, 1}});

    TumorMask full{Volume3D::zeros(3, 4, 5)};
    for (float& v : full.volume.data) v = 255.0f;
    CHECK(bounding_box(full) == Box3{{0, 0, 0}, {2, 3, 4}});

    TumorMask empty{Volume3D::zeros(3, 3, 3)};
    CHECK_THROWS(bounding_box(empty));
}

TEST_CASE("bounding box matches brute force on random masks") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> coord(0, 11);
    for (int trial = 0; trial < 30; ++trial) {
        TumorMask m{Volume3D::zeros(12, 12, 12)};
        int k = 1 + trial % 20;
        for (int i = 0; i < k; ++i) m.volume.at(coord(rng), coord(rng), coord(rng)) = 255.0f;
        Box3 b = bounding_box(m);
        // every foreground voxel inside, and each face is touched
        bool touch[6] = {false, false, false, false, false, false};
        for (int z = 0; z < 12; ++z)
            for (int y = 0; y < 12; ++y)
                for (int x = 0; x < 12; ++x)
                    if (m.foreground(x, y, z)) {
                        REQUIRE(b.contains(x, y, z));
                        touch[0] |= x == b.lo[0];
                        touch[1] |= x == b.hi[0];
                        touch[2] |= y == b.lo[1];
                        touch[3] |= y == b.hi[1];
                        touch[4] |= z == b.lo[2];
                        touch[5] |= z == b.hi[2];
                    }
        for (bool t : touch) REQUIRE(t);
    }
}

static LongitudinalCase make_case(TumorMask m1, TumorMask m2, TumorMask m3) {
    LongitudinalCase c;
    c.patient_id = "p";
    c.hematocrit = 0.45;
    c.blood_hu_pre_mean = 100.0;
    c.blood_hu_post_mean = 200.0;
    TumorMask* masks[3] = {&m1, &m2, &m3};
    for (int t = 0; t < 3; ++t) {
        auto& tp = c.timepoints[t];
        int n = masks[t]->volume.dims[0];
        tp.ct_pre = Volume3D::zeros(n, n, n);
        tp.ct_post = Volume3D::zeros(n, n, n);
        tp.suv = Volume3D::zeros(n, n, n);
        tp.mask = *masks[t];
        tp.acquisition_day = t * 400;
    }
    return c;
}

TEST_CASE("tumor center alignment") {
    TumorMask m = ball_mask(32, 16, 16, 16, 5);

    SUBCASE("identity when centroids already coincide") {
        auto c = make_case(m, m, m);
        auto aligned = align_to_tumor_center(c);
        CHECK(aligned.alignment_translation[1] == Vec3i{0, 0, 0});
        CHECK(aligned.timepoints[1].mask == c.timepoints[1].mask);
    }

    SUBCASE("shifted t2 gets translated back") {
        TumorMask shifted{translate_volume(m.volume, {2, 0, 0})};
        auto c = make_case(m, shifted, m);
        auto aligned = align_to_tumor_center(c);
        CHECK(aligned.alignment_translation[1] == Vec3i{-2, 0, 0});
        auto c1 = mask_centroid(aligned.timepoints[0].mask);
        auto c2 = mask_centroid(aligned.timepoints[1].mask);
        CHECK(c1[0] == doctest::Approx(c2[0]).epsilon(1e-9));
        CHECK(c1[1] == doctest::Approx(c2[1]).epsilon(1e-9));
    }

    SUBCASE("idempotent") {
        TumorMask shifted{translate_volume(m.volume, {3, -1, 2})};
        auto c = make_case(m, shifted, m);
        auto once = align_to_tumor_center(c);
        auto twice = align_to_tumor_center(once);
        CHECK(once.timepoints[1].mask == twice.timepoints[1].mask);
        CHECK(once.alignment_translation == twice.alignment_translation);
    }

    SUBCASE("empty mask is an error") {
        TumorMask empty{Volume3D::zeros(32, 32, 32)};
        auto c = make_case(m, empty, m);
        CHECK_THROWS(align_to_tumor_center(c));
    }
}

TEST_CASE("case manifest round trip") {
    auto dir = temp_dir("case");
    TumorMask m = ball_mask(16, 8, 8, 8, 4);
    auto c = make_case(m, m, m);
    save_case(c, dir.string());
    auto back = load_case(dir.string());
    CHECK(back.patient_id == c.patient_id);
    CHECK(back.hematocrit == c.hematocrit);
    CHECK(back.timepoints[2].mask == c.timepoints[2].mask);
    CHECK(back.timepoints[1].acquisition_day == 400);
}
