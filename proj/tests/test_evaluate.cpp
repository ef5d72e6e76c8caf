#include "support.hpp"

#include <nanoseg/evaluate.hpp>
#include <nanoseg/scenesim.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace nanoseg;

namespace {

/// Relabels a map by an arbitrary permutation of 1..K.
LabelMap permuted(const LabelMap& m, std::mt19937_64& rng) {
    std::vector<Label> perm(max_label(m));
    std::iota(perm.begin(), perm.end(), 1u);
    std::shuffle(perm.begin(), perm.end(), rng);
    LabelMap out = m;
    for (auto& v : out.pixels())
        if (v) v = perm[v - 1];
    return out;
}

LabelMap golden_truth() {
    SceneSpec s;
    s.sampler = SamplerRequest{};
    s.seed = 42;
    return render_scene(s, sample_scene(s)).truth;
}

}  // namespace

TEST(Iou, OverlappingSquares) {
    BinaryMask a(10, 10, 0);
    BinaryMask b(10, 10, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) a(x, y) = 1;
    for (int y = 0; y < 4; ++y)
        for (int x = 2; x < 6; ++x) b(x, y) = 1;
    EXPECT_DOUBLE_EQ(iou(a, b), 8.0 / 24.0);
    EXPECT_DOUBLE_EQ(iou(b, a), iou(a, b));
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(iou(a, BinaryMask(10, 10, 0)), 0.0);
    EXPECT_THROW(iou(BinaryMask(10, 10, 0), BinaryMask(10, 10, 0)), std::invalid_argument);
    EXPECT_THROW(iou(a, BinaryMask(9, 10, 0)), std::invalid_argument);
}

TEST(Iou, RandomMasksSymmetricAndBounded) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testkit::random_mask(32, 32, rng);
        const auto b = testkit::random_mask(32, 32, rng);
        const double v = iou(a, b);
        EXPECT_DOUBLE_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Matching, IdentityMatchesEverything) {
    const auto truth = golden_truth();
    const auto m = match_instances(truth, truth);
    EXPECT_EQ(m.pairs.size(), 24u);
    for (const auto& p : m.pairs) {
        EXPECT_EQ(p.truth, p.pred);
        EXPECT_DOUBLE_EQ(p.iou, 1.0);
    }
    const auto d = detection_metrics(m);
    EXPECT_EQ(d.precision, 1.0);
    EXPECT_EQ(d.recall, 1.0);
    EXPECT_EQ(d.f1, 1.0);
}

TEST(Matching, InvariantsOnRandomPartitions) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const auto truth = testkit::flood_fill_labels(testkit::random_mask(48, 48, rng));
        const auto pred = testkit::flood_fill_labels(testkit::random_mask(48, 48, rng));
        const double thr = trial % 3 == 0 ? 0.1 : 0.5;
        const auto m = match_instances(truth, pred, thr);
        std::set<Label> ts;
        std::set<Label> ps;
        for (const auto& p : m.pairs) {
            EXPECT_TRUE(ts.insert(p.truth).second);
            EXPECT_TRUE(ps.insert(p.pred).second);
            EXPECT_GE(p.iou, thr);
            EXPECT_NEAR(p.iou, iou(region(truth, p.truth), region(pred, p.pred)), 1e-12);
        }
        EXPECT_EQ(m.pairs.size() + m.unmatched_truth.size(), max_label(truth));
        EXPECT_EQ(m.pairs.size() + m.unmatched_pred.size(), max_label(pred));
        // Greedy with IoU >= 0.5 is unique: each instance can exceed 0.5 with at most one partner.
        if (thr == 0.5) {
            std::size_t above = 0;
            for (Label t = 1; t <= max_label(truth); ++t)
                for (Label p = 1; p <= max_label(pred); ++p)
                    if (iou(region(truth, t), region(pred, p)) >= 0.5) ++above;
            EXPECT_EQ(m.pairs.size(), above);
        }
    }
}

TEST(Matching, MissingInstancesBecomeFalseNegatives) {
    const auto truth = golden_truth();
    LabelMap pred = truth;
    for (auto& v : pred.pixels())
        if (v == 3 || v == 7 || v == 11 || v == 20) v = 0;
    pred = compact_labels(pred);
    const auto d = detection_metrics(match_instances(truth, pred));
    EXPECT_EQ(d.tp, 20u);
    EXPECT_EQ(d.fn, 4u);
    EXPECT_EQ(d.fp, 0u);
    EXPECT_NEAR(d.recall, 20.0 / 24.0, 1e-12);
    EXPECT_EQ(d.precision, 1.0);
}

TEST(Matching, NothingMatchedGivesZeroScores) {
    LabelMap truth(20, 20, 0);
    LabelMap pred(20, 20, 0);
    testkit::paint_rect(truth, 0, 0, 5, 5, 1);
    testkit::paint_rect(pred, 10, 10, 5, 5, 1);
    const auto r = evaluate(truth, pred);
    EXPECT_EQ(r.detection.tp, 0u);
    EXPECT_EQ(r.detection.precision, 0.0);
    EXPECT_EQ(r.detection.recall, 0.0);
    EXPECT_EQ(r.detection.f1, 0.0);
    EXPECT_EQ(r.mean_iou, 0.0);

    const auto empty = evaluate(LabelMap(8, 8, 0), LabelMap(8, 8, 0));
    EXPECT_EQ(empty.detection.tp + empty.detection.fp + empty.detection.fn, 0u);
    EXPECT_EQ(empty.pixel_accuracy, 1.0);
}

TEST(Matching, OneToOneUnderSplit) {
    // One truth square split into two predicted halves: only one may match.
    LabelMap truth(20, 20, 0);
    testkit::paint_rect(truth, 0, 0, 10, 10, 1);
    LabelMap pred(20, 20, 0);
    testkit::paint_rect(pred, 0, 0, 7, 10, 1);
    testkit::paint_rect(pred, 7, 0, 3, 10, 2);
    const auto m = match_instances(truth, pred);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].pred, 1u);
    EXPECT_DOUBLE_EQ(m.pairs[0].iou, 0.7);
    EXPECT_EQ(m.unmatched_pred, std::vector<Label>{2});
    EXPECT_DOUBLE_EQ(m.truth_best_iou[0], 0.7);
}

TEST(PixelAccuracy, IdentityComplementRelabel) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto truth = testkit::flood_fill_labels(testkit::random_mask(40, 40, rng));
        EXPECT_EQ(pixel_accuracy(truth, truth), 1.0);
        LabelMap comp(40, 40);
        for (std::size_t i = 0; i < truth.size(); ++i) comp[i] = truth[i] ? 0 : 1;
        EXPECT_EQ(pixel_accuracy(truth, comp), 0.0);
        const auto other = testkit::flood_fill_labels(testkit::random_mask(40, 40, rng));
        EXPECT_EQ(pixel_accuracy(truth, other), pixel_accuracy(truth, permuted(other, rng)));
        EXPECT_EQ(pixel_accuracy(truth, other), pixel_accuracy(other, truth));
    }
    EXPECT_THROW(pixel_accuracy(LabelMap(3, 3), LabelMap(3, 4)), std::invalid_argument);
}

TEST(SizeDistribution, SingleAndEqualInstances) {
    InstanceStats s;
    s.area = 700;
    const auto one = size_distribution({s});
    EXPECT_EQ(one.n, 1u);
    EXPECT_EQ(one.mean_area, 700.0);
    EXPECT_EQ(one.std_area, 0.0);
    ASSERT_EQ(one.counts.size(), 3u);
    EXPECT_EQ(one.counts[2], 1u);

    const auto many = size_distribution(std::vector<InstanceStats>(18, s), 100.0);
    EXPECT_EQ(many.counts.size(), 8u);
    EXPECT_EQ(many.counts[7], 18u);
    EXPECT_EQ(many.std_area, 0.0);

    EXPECT_EQ(size_distribution({}).n, 0u);
    EXPECT_THROW(size_distribution({s}, 0.0), std::invalid_argument);
}

TEST(SizeDistribution, GoldenSceneMeanMatchesDiscArea) {
    const auto d = size_distribution(measure_instances(golden_truth()));
    EXPECT_EQ(d.n, 24u);
    const double disc = std::numbers::pi * 25.0 * 25.0;
    EXPECT_NEAR(d.mean_area, disc, 0.02 * disc);
    std::uint64_t total = 0;
    for (auto c : d.counts) total += c;
    EXPECT_EQ(total, 24u);
}

TEST(Evaluate, RelabelInvariantScores) {
    const auto truth = golden_truth();
    std::mt19937_64 rng(4);
    const auto a = evaluate(truth, truth);
    const auto b = evaluate(truth, permuted(truth, rng));
    EXPECT_EQ(a.detection.tp, b.detection.tp);
    EXPECT_EQ(a.pixel_accuracy, b.pixel_accuracy);
    EXPECT_EQ(a.mean_iou, b.mean_iou);
    EXPECT_EQ(a.mean_iou, 1.0);
}
