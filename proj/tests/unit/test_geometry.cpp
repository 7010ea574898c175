#include <gtest/gtest.h>

#include "nah/geometry.hpp"

using namespace nah;

TEST(PlaneGrid, ReferenceGridHas1024Points) {
    const auto g = centered_plane_grid(16, 64, 0.0125, 0.0125, 0.0);
    EXPECT_EQ(g.size(), 1024u);
    EXPECT_NEAR(g.center_x(), 0.0, 1e-15);
    EXPECT_NEAR(g.center_y(), 0.0, 1e-15);
    EXPECT_NEAR(g.x_at(0), -0.09375, 1e-15);
}

TEST(PlaneGrid, HologramGrid) {
    const auto g = centered_plane_grid(8, 8, 0.025, 0.1, 0.0312);
    EXPECT_EQ(g.size(), 64u);
    EXPECT_EQ(g.z, 0.0312);
}

TEST(PlaneGrid, SinglePoint) {
    const auto g = build_plane_grid(1, 1, 0.01, 0.01, 0.0, 0.0, 0.0);
    EXPECT_EQ(g.size(), 1u);
    const Point3 p = g.point(0);
    EXPECT_EQ(p.x, 0.0);
    EXPECT_EQ(p.y, 0.0);
    EXPECT_EQ(p.z, 0.0);
}

TEST(PlaneGrid, RowMajorEnumeration) {
    const auto g = build_plane_grid(3, 4, 0.5, 0.25, 1.0, -1.0, 2.0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            const auto flat = g.index(i, j);
            EXPECT_EQ(flat, i * 4 + j);
            EXPECT_EQ(g.point(flat).x, -1.0 + static_cast<double>(i) * 0.5);
            EXPECT_EQ(g.point(flat).y, 2.0 + static_cast<double>(j) * 0.25);
        }
    }
}

TEST(PlaneGrid, RejectsBadArguments) {
    EXPECT_THROW(build_plane_grid(0, 4, 0.1, 0.1, 0, 0, 0), ConfigError);
    EXPECT_THROW(build_plane_grid(4, 0, 0.1, 0.1, 0, 0, 0), ConfigError);
    EXPECT_THROW(build_plane_grid(4, 4, 0.0, 0.1, 0, 0, 0), ConfigError);
    EXPECT_THROW(build_plane_grid(4, 4, 0.1, -0.1, 0, 0, 0), ConfigError);
    EXPECT_THROW(build_plane_grid(4, 4, std::nan(""), 0.1, 0, 0, 0), ConfigError);
    EXPECT_THROW(build_plane_grid(4, 4, 0.1, 1.0 / 0.0, 0, 0, 0), ConfigError);
}

TEST(Distances, SelfTableHasZeroDiagonal) {
    const auto g = build_plane_grid(2, 2, 0.1, 0.1, 0.0, 0.0, 0.0);
    const auto t = pairwise_distances(g, g);
    EXPECT_EQ(t.dz, 0.0);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_EQ(t.d(i, i), 0.0);
    }
}

TEST(Distances, AxialPair) {
    const auto a = build_plane_grid(1, 1, 0.01, 0.01, 0.0, 0.0, 0.0);
    const auto b = build_plane_grid(1, 1, 0.01, 0.01, 0.05, 0.0, 0.0);
    const auto t = pairwise_distances(a, b);
    EXPECT_EQ(t.d(0, 0), 0.05);
    EXPECT_EQ(t.dz, 0.05);
}

TEST(Distances, PythagoreanTriple) {
    const auto a = build_plane_grid(1, 1, 0.01, 0.01, 0.0, 0.0, 0.0);
    const auto b = build_plane_grid(1, 1, 0.01, 0.01, 0.12, 0.03, 0.04);
    EXPECT_NEAR(pairwise_distances(a, b).d(0, 0), 0.13, 1e-15);
}

TEST(Distances, TransposeSymmetryIsExact) {
    const auto a = centered_plane_grid(4, 5, 0.013, 0.021, -0.05);
    const auto b = centered_plane_grid(3, 6, 0.027, 0.011, 0.0312, 0.004, -0.007);
    const auto ab = pairwise_distances(a, b);
    const auto ba = pairwise_distances(b, a);
    EXPECT_TRUE(ab.d == ba.d.transpose());
    EXPECT_EQ(ab.dz, ba.dz);
    const auto aa = pairwise_distances(a, a);
    EXPECT_TRUE(aa.d == aa.d.transpose());
}

TEST(Distances, DistancesNeverBelowPlaneGap) {
    const auto a = centered_plane_grid(4, 4, 0.02, 0.03, 0.0);
    const auto b = centered_plane_grid(5, 3, 0.01, 0.04, 0.07);
    const auto t = pairwise_distances(a, b);
    EXPECT_GE(t.d.minCoeff(), t.dz);
    EXPECT_EQ(t.dz, std::abs(0.07 - 0.0));
}

TEST(Distances, TranslationInvarianceIsBitExact) {
    // Dyadic spacings and origins keep every coordinate difference exact.
    const auto a = build_plane_grid(4, 4, 0.015625, 0.015625, -0.05, -0.0234375, -0.0234375);
    const auto b = build_plane_grid(8, 8, 0.03125, 0.125, 0.0312, -0.109375, -0.4375);
    const auto t0 = pairwise_distances(a, b);
    for (double shift : {0.25, -1.5, 0.125}) {
        auto as = a;
        auto bs = b;
        as.origin_x += shift;
        bs.origin_x += shift;
        as.origin_y -= shift;
        bs.origin_y -= shift;
        EXPECT_EQ(bs.origin_x - as.origin_x, b.origin_x - a.origin_x);
        const auto t1 = pairwise_distances(as, bs);
        EXPECT_TRUE(t0.d == t1.d);
    }
}
