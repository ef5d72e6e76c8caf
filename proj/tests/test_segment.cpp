#include "support.hpp"

#include <nanoseg/pipeline.hpp>
#include <nanoseg/scenesim.hpp>
#include <nanoseg/segment.hpp>

#include <gtest/gtest.h>

#include <ranges>

using namespace nanoseg;

namespace {

LabelMap square_map(int side, int size = 64) {
    LabelMap m(size, size, 0);
    testkit::paint_rect(m, 5, 5, side, side, 1);
    return m;
}

}  // namespace

TEST(Threshold, StrictlyGreaterRule) {
    Image img(3, 1);
    img(0, 0) = 100 / 255.0;
    img(1, 0) = 101 / 255.0;
    img(2, 0) = 1.0;
    const auto m = apply_threshold(img, 100);
    EXPECT_EQ(m(0, 0), 0);
    EXPECT_EQ(m(1, 0), 1);
    EXPECT_EQ(m(2, 0), 1);
    const auto none = apply_threshold(img, 255);
    for (auto v : none.pixels()) EXPECT_EQ(v, 0);
    EXPECT_THROW(apply_threshold(img, 256), std::invalid_argument);
    EXPECT_THROW(apply_threshold(img, -1), std::invalid_argument);
}

TEST(Threshold, MonotoneInLevel) {
    std::mt19937_64 rng(5);
    const Image img = testkit::random_image(40, 40, rng);
    auto count = [&](int t) {
        const auto m = apply_threshold(img, t);
        int n = 0;
        for (auto v : m.pixels()) n += v;
        return n;
    };
    for (int t = 1; t < 256; ++t) EXPECT_LE(count(t), count(t - 1));
}

TEST(Otsu, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(8, 48);
    for (int trial = 0; trial < 100; ++trial) {
        const Image img = trial % 2 ? testkit::random_level_image(dim(rng), dim(rng), rng)
                                    : testkit::random_image(dim(rng), dim(rng), rng);
        const int want = testkit::otsu_exhaustive(img);
        if (want < 0) {
            EXPECT_THROW(otsu_threshold(img), DegenerateHistogramError);
            continue;
        }
        const auto got = otsu_threshold(img);
        EXPECT_EQ(got.threshold, want) << "trial " << trial;
        EXPECT_EQ(got.mask, apply_threshold(img, want));
    }
}

TEST(Otsu, TwoLevelsSplitBetweenThem) {
    Image img(10, 10, 40 / 255.0);
    for (int x = 0; x < 10; ++x) img(x, 0) = 200 / 255.0;
    const auto r = otsu_threshold(img);
    EXPECT_EQ(r.threshold, 40);  // smallest maximizer
    int fg = 0;
    for (auto v : r.mask.pixels()) fg += v;
    EXPECT_EQ(fg, 10);
}

TEST(Otsu, DegenerateHistogram) {
    EXPECT_THROW(otsu_threshold(Image(16, 16, 0.4)), DegenerateHistogramError);
}

TEST(Components, MatchFloodFill) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const BinaryMask m = testkit::random_mask(64, 64, rng, trial / 100.0);
        EXPECT_EQ(connected_components(m), testkit::flood_fill_labels(m)) << "trial " << trial;
    }
}

TEST(Components, SeparatedAndDiagonal) {
    BinaryMask m(20, 20, 0);
    for (int y = 2; y < 6; ++y)
        for (int x = 2; x < 6; ++x) m(x, y) = 1;
    for (int y = 10; y < 14; ++y)
        for (int x = 10; x < 14; ++x) m(x, y) = 1;
    auto l = connected_components(m);
    EXPECT_EQ(max_label(l), 2u);
    EXPECT_EQ(l(2, 2), 1u);
    EXPECT_EQ(l(13, 13), 2u);

    BinaryMask d(4, 4, 0);
    d(0, 0) = d(1, 1) = d(2, 2) = d(3, 3) = 1;
    EXPECT_EQ(max_label(connected_components(d)), 1u);

    // U shape: both arms meet only at the bottom, found after two provisional labels.
    BinaryMask u(5, 4, 0);
    for (int y = 0; y < 4; ++y) u(0, y) = u(4, y) = 1;
    for (int x = 0; x < 5; ++x) u(x, 3) = 1;
    const auto ul = connected_components(u);
    EXPECT_EQ(max_label(ul), 1u);
    EXPECT_EQ(ul(4, 0), 1u);
}

TEST(Components, EmptyAndFull) {
    EXPECT_EQ(max_label(connected_components(BinaryMask(7, 9, 0))), 0u);
    const auto full = connected_components(BinaryMask(7, 9, 1));
    for (Label v : full.pixels()) EXPECT_EQ(v, 1u);
}

TEST(AreaFilter, DefaultBoundaryAt500) {
    LabelMap m(100, 100, 0);
    testkit::paint_rect(m, 0, 0, 20, 25, 1);    // 500
    testkit::paint_rect(m, 50, 50, 20, 25, 2);  // 500, then one pixel removed
    m(69, 74) = 0;
    const auto out = filter_min_area(m, kDefaultMinArea);
    EXPECT_EQ(max_label(out), 1u);
    EXPECT_EQ(out(0, 0), 1u);
    EXPECT_EQ(out(50, 50), 0u);
}

TEST(AreaFilter, DropsBelowMinimumAndRenumbers) {
    LabelMap m(60, 60, 0);
    testkit::paint_rect(m, 0, 0, 20, 25, 1);   // 500
    testkit::paint_rect(m, 30, 0, 1, 1, 2);    // 1
    for (int i = 0; i < 499; ++i) m(30 + i % 30, 10 + i / 30) = 3;  // 499
    testkit::paint_rect(m, 0, 40, 30, 20, 4);  // 600
    const auto out = filter_min_area(m, 500);
    EXPECT_EQ(max_label(out), 2u);
    EXPECT_EQ(out(0, 0), 1u);
    EXPECT_EQ(out(30, 0), 0u);
    EXPECT_EQ(out(31, 10), 0u);
    EXPECT_EQ(out(0, 40), 2u);
    EXPECT_EQ(filter_min_area(out, 500), out);
    EXPECT_EQ(filter_min_area(m, 0), compact_labels(m));
}

TEST(AreaFilter, IdempotentOnRandomMasks) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto l = connected_components(testkit::random_mask(64, 64, rng));
        const auto once = filter_min_area(l, 20);
        EXPECT_EQ(filter_min_area(once, 20), once);
        const auto areas = label_areas(once);
        for (auto a : areas | std::views::drop(1)) EXPECT_GE(a, 20u);
    }
}

TEST(Measure, SquareAndSinglePixel) {
    const auto stats = measure_instances(square_map(10));
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_EQ(stats[0].area, 100u);
    EXPECT_EQ(stats[0].perimeter, 36u);
    EXPECT_DOUBLE_EQ(stats[0].centroid.x, 9.5);
    EXPECT_DOUBLE_EQ(stats[0].centroid.y, 9.5);
    EXPECT_NEAR(stats[0].equivalent_diameter, 2.0 * std::sqrt(100 / std::numbers::pi), 1e-12);
    EXPECT_DOUBLE_EQ(stats[0].rba, 0.36);

    LabelMap one(5, 5, 0);
    one(2, 3) = 1;
    const auto s1 = measure_instances(one);
    ASSERT_EQ(s1.size(), 1u);
    EXPECT_EQ(s1[0].perimeter, 1u);
    EXPECT_DOUBLE_EQ(s1[0].rba, 1.0);
    EXPECT_DOUBLE_EQ(s1[0].centroid.x, 2.0);
    EXPECT_DOUBLE_EQ(s1[0].centroid.y, 3.0);
}

TEST(Measure, ImageEdgeCountsAsBoundary) {
    LabelMap m(4, 4, 1);
    const auto s = measure_instances(m);
    EXPECT_EQ(s[0].perimeter, 12u);
}

TEST(Measure, DiscRbaTracksRadius) {
    for (double r : {30.0, 60.0, 120.0}) {
        const int size = static_cast<int>(2 * r) + 10;
        SceneSpec spec;
        spec.width = spec.height = size;
        const auto truth = render_scene(spec, {{Sphere{r}, {size / 2.0, size / 2.0}}}).truth;
        const auto s = measure_instances(truth);
        ASSERT_EQ(s.size(), 1u);
        // One 4-boundary pixel per column (or row) in each octant: 4 sqrt(2) r pixels.
        const double digital = 4.0 * std::numbers::sqrt2 / std::numbers::pi;
        EXPECT_NEAR(s[0].rba * r, digital, 0.02 * digital) << r;
        EXPECT_NEAR(s[0].equivalent_diameter, 2 * r, 0.01 * 2 * r);
    }
}

TEST(Rba, AnalyticValues) {
    EXPECT_NEAR(compute_rba(Sphere{60}), 0.033, 0.0005);
    EXPECT_NEAR(compute_rba(Rod{65, 10}), 0.231, 0.0005);
    EXPECT_NEAR(compute_rba(ConcaveCube{50}), 0.080, 0.0005);
    EXPECT_DOUBLE_EQ(compute_rba(ConcaveCube{50, 0.4, 1.0}), compute_rba(ConcaveCube{50, 0.0}));
    EXPECT_LT(compute_rba(Sphere{60}), compute_rba(ConcaveCube{50}));
    EXPECT_LT(compute_rba(ConcaveCube{50}), compute_rba(Rod{65, 10}));
    EXPECT_THROW(compute_rba(Sphere{-1}), std::invalid_argument);
}

TEST(Otsu, InvariantUnderAffineLevelMap) {
    // Doubling every 8-bit level maps the optimal split t to 2t.
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        Image img = testkit::random_level_image(30, 30, rng);
        for (double& v : img.pixels()) v = testkit::level_of(v) / 2 / 255.0;
        const int want = testkit::otsu_exhaustive(img);
        if (want < 0) continue;
        Image doubled = img;
        for (double& v : doubled.pixels()) v = 2 * testkit::level_of(v) / 255.0;
        const auto a = otsu_threshold(img);
        const auto b = otsu_threshold(doubled);
        EXPECT_EQ(a.mask, b.mask);
        EXPECT_EQ(b.threshold, 2 * a.threshold);
    }
}
