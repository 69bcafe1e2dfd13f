#include <doctest.h>

#include <cmath>

#include "tumorcast/baseline.hpp"
#include "tumorcast/metrics.hpp"

using namespace tumorcast;

namespace {

TumorMask disc_mask(int n, int nz, double cx, double cy, double r, int z0 = 0, int z1 = -1) {
    TumorMask m{Volume3D::zeros(n, n, nz)};
    if (z1 < 0) z1 = nz - 1;
    for (int z = z0; z <= z1; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy <= r * r) m.volume.at(x, y, z) = 255.0f;
            }
    return m;
}

}  // namespace

TEST_CASE("identity pair predicts t2 up to rasterization tolerance") {
    TumorMask t = disc_mask(48, 3, 24, 24, 10);
    TumorMask pred = linear_predict(t, t);
    MetricEntry e = compute_metrics(pred, t);
    CHECK(e.dice >= 0.95);
}

TEST_CASE("uniform dilation extrapolates to twice the displacement") {
    TumorMask t1 = disc_mask(48, 1, 24, 24, 6);
    TumorMask t2 = disc_mask(48, 1, 24, 24, 8);
    TumorMask pred = linear_predict(t1, t2);

    std::size_t area = foreground_count(pred);
    CHECK(std::abs(double(area) - M_PI * 100.0) <= 0.10 * M_PI * 100.0);

    // radial error < 1 voxel on the smooth phantom
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            double r = std::hypot(x - 24.0, y - 24.0);
            if (r < 9.0) CHECK(pred.foreground(x, y, 0));
            if (r > 11.0) CHECK_FALSE(pred.foreground(x, y, 0));
        }
}

TEST_CASE("shrink extrapolation") {
    TumorMask t1 = disc_mask(48, 1, 24, 24, 8);
    TumorMask t2 = disc_mask(48, 1, 24, 24, 6);
    TumorMask pred = linear_predict(t1, t2);
    std::size_t area = foreground_count(pred);
    CHECK(std::abs(double(area) - M_PI * 16.0) <= 0.25 * M_PI * 16.0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            double r = std::hypot(x - 24.0, y - 24.0);
            if (r < 3.0) CHECK(pred.foreground(x, y, 0));
            if (r > 5.0) CHECK_FALSE(pred.foreground(x, y, 0));
        }
}

TEST_CASE("slice coverage rules") {
    // t2 occupies z in [1,3]; t1 only [1,2]: slice 3 extrapolates with r1=0
    TumorMask t1 = disc_mask(48, 5, 24, 24, 5, 1, 2);
    TumorMask t2 = disc_mask(48, 5, 24, 24, 5, 1, 3);
    TumorMask pred = linear_predict(t1, t2);

    SUBCASE("slices empty at t2 stay empty") {
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                CHECK_FALSE(pred.foreground(x, y, 0));
                CHECK_FALSE(pred.foreground(x, y, 4));
            }
    }
    SUBCASE("t2-only slice doubles its radius (pure past-growth)") {
        std::size_t area3 = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) area3 += pred.foreground(x, y, 3);
        CHECK(std::abs(double(area3) - M_PI * 100.0) <= 0.15 * M_PI * 100.0);
    }
    SUBCASE("slices present at both keep their radius") {
        std::size_t area1 = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) area1 += pred.foreground(x, y, 1);
        CHECK(std::abs(double(area1) - M_PI * 25.0) <= 0.15 * M_PI * 25.0);
    }
}

TEST_CASE("error cases") {
    TumorMask t1 = disc_mask(32, 1, 16, 16, 5);
    TumorMask empty{Volume3D::zeros(32, 32, 1)};
    CHECK_THROWS(linear_predict(t1, empty));
    TumorMask other{Volume3D::zeros(16, 16, 1)};
    CHECK_THROWS(linear_predict(t1, other));
}
