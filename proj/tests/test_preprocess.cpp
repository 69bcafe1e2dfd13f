#include <doctest.h>

#include "tumorcast/preprocess.hpp"

using namespace tumorcast;

namespace {

Volume3D constant(int n, float value) {
    Volume3D v = Volume3D::zeros(n, n, n);
    for (float& f : v.data) f = value;
    return v;
}

TumorMask full_mask(int n) {
    TumorMask m{constant(n, 255.0f)};
    return m;
}

}  // namespace

TEST_CASE("map_suv window boundaries") {
    CHECK(map_suv(constant(2, 26.0f)).data[0] == doctest::Approx(255.0));
    CHECK(map_suv(constant(2, 1.0f)).data[0] == doctest::Approx(0.0));
    CHECK(map_suv(constant(2, 0.2f)).data[0] == doctest::Approx(0.0));   // below window
    CHECK(map_suv(constant(2, 50.0f)).data[0] == doctest::Approx(255.0));  // above window
    CHECK(map_suv(constant(2, 5.0f)).data[0] == doctest::Approx(40.8));
}

TEST_CASE("map_suv rejects negative values") {
    CHECK_THROWS(map_suv(constant(2, -0.1f)));
}

TEST_CASE("map_suv is monotone and saturates at the window bounds") {
    float prev = -1.0f;
    for (float s = 0.0f; s <= 30.0f; s += 0.25f) {
        float mapped = map_suv(constant(1, s)).data[0];
        CHECK(mapped >= prev);
        CHECK(mapped >= 0.0f);
        CHECK(mapped <= 255.0f);
        prev = mapped;
    }
}

TEST_CASE("compute_icvf hand-evaluated cases") {
    const int n = 4;
    TumorMask mask = full_mask(n);

    SUBCASE("zero enhancement -> 100") {
        Volume3D out = compute_icvf(constant(n, 50.0f), constant(n, 50.0f), 200, 100, 0.45, mask);
        CHECK(out.data[0] == doctest::Approx(100.0));
    }
    SUBCASE("delta 40 over blood delta 100 at hct 0.45 -> 78") {
        Volume3D out = compute_icvf(constant(n, 90.0f), constant(n, 50.0f), 200, 100, 0.45, mask);
        CHECK(out.data[0] == doctest::Approx(78.0));
    }
    SUBCASE("tumor delta equals blood delta at hct -> 0 as hct -> 0") {
        Volume3D out = compute_icvf(constant(n, 150.0f), constant(n, 50.0f), 200, 100, 1e-9, mask);
        CHECK(out.data[0] == doctest::Approx(0.0).epsilon(1e-6));
    }
    SUBCASE("outside mask is zero") {
        TumorMask half = full_mask(n);
        half.volume.data[0] = 0.0f;
        Volume3D out = compute_icvf(constant(n, 90.0f), constant(n, 50.0f), 200, 100, 0.45, half);
        CHECK(out.data[0] == 0.0f);
        CHECK(out.data[1] == doctest::Approx(78.0));
    }
}

TEST_CASE("compute_icvf rejects degenerate blood pool") {
    TumorMask mask = full_mask(2);
    CHECK_THROWS(compute_icvf(constant(2, 90.0f), constant(2, 50.0f), 100, 100, 0.45, mask));
    CHECK_THROWS(compute_icvf(constant(2, 90.0f), constant(2, 50.0f), 50, 100, 0.45, mask));
}

TEST_CASE("compute_icvf range and hct->1 limit") {
    const int n = 3;
    TumorMask mask = full_mask(n);
    Volume3D post = constant(n, 0.0f);
    for (std::size_t i = 0; i < post.data.size(); ++i) post.data[i] = float(i) * 20.0f;
    Volume3D out = compute_icvf(post, constant(n, 0.0f), 200, 100, 0.45, mask);
    for (float v : out.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 100.0f);
    }
    Volume3D lim = compute_icvf(post, constant(n, 0.0f), 200, 100, 1.0 - 1e-12, mask);
    for (float v : lim.data) CHECK(v == doctest::Approx(100.0));
}

TEST_CASE("encode_mask validates the value set") {
    TumorMask ok = full_mask(2);
    CHECK(encode_mask(ok) == ok.volume);
    TumorMask bad = full_mask(2);
    bad.volume.data[1] = 128.0f;
    CHECK_THROWS(encode_mask(bad));
}

TEST_CASE("assemble_invasion_channels") {
    const int n = 8;
    StudyTimepoint tp;
    tp.ct_pre = constant(n, 50.0f);
    tp.ct_post = constant(n, 90.0f);
    tp.suv = constant(n, 5.0f);
    tp.mask = full_mask(n);

    InvasionImage img = assemble_invasion_channels(tp, 100, 200, 0.45);
    CHECK(img.channels[0].data[0] == doctest::Approx(40.8));
    CHECK(img.channels[1].data[0] == doctest::Approx(78.0));
    CHECK(img.channels[2] == tp.mask.volume);

    // deterministic on repeat call
    InvasionImage again = assemble_invasion_channels(tp, 100, 200, 0.45);
    CHECK(img.channels[0] == again.channels[0]);
    CHECK(img.channels[1] == again.channels[1]);

    // a non-binary channel in mask position is caught by validation
    InvasionImage swapped = img;
    std::swap(swapped.channels[0], swapped.channels[2]);
    CHECK_THROWS(swapped.validate());
}
