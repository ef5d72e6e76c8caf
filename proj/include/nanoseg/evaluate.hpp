#ifndef NANOSEG_EVALUATE_HPP
#define NANOSEG_EVALUATE_HPP

#include "imagecore.hpp"
#include "segment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace nanoseg {

inline constexpr double kDefaultIouMin = 0.5;
inline constexpr double kDefaultSizeBinWidth = 250.0;

/// |a & b| / |a | b|. Both regions empty is an error.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("iou: raster dimensions differ");
    std::uint64_t inter = 0;
    std::uint64_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a[i] && b[i]);
        uni += (a[i] || b[i]);
    }
    if (uni == 0) throw std::invalid_argument("iou: both regions are empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Region of a single label as a mask.
inline BinaryMask region(const LabelMap& labels, Label label) {
    BinaryMask m(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == label ? 1 : 0;
    return m;
}

struct MatchPair {
    Label truth = 0;
    Label pred = 0;
    double iou = 0.0;
};

struct MatchTable {
    std::vector<MatchPair> pairs;
    std::vector<Label> unmatched_truth;
    std::vector<Label> unmatched_pred;
    /// Best IoU of each truth instance against any prediction (index label - 1).
    std::vector<double> truth_best_iou;
};

namespace detail {

struct Overlaps {
    std::vector<std::uint64_t> truth_area;
    std::vector<std::uint64_t> pred_area;
    std::map<std::pair<Label, Label>, std::uint64_t> inter;
};

inline Overlaps overlaps(const LabelMap& truth, const LabelMap& pred) {
    Overlaps o;
    o.truth_area = label_areas(truth);
    o.pred_area = label_areas(pred);
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] != 0 && pred[i] != 0) ++o.inter[{truth[i], pred[i]}];
    return o;
}

}  // namespace detail

/// Greedy one-to-one matching in descending IoU order over pairs with
/// IoU >= iou_min; ties resolved by (truth, pred) ascending.
inline MatchTable match_instances(const LabelMap& truth, const LabelMap& pred,
                                  double iou_min = kDefaultIouMin) {
    if (!truth.same_shape(pred)) throw std::invalid_argument("match_instances: dimensions differ");
    const auto o = detail::overlaps(truth, pred);
    const Label nt = static_cast<Label>(o.truth_area.size() - 1);
    const Label np = static_cast<Label>(o.pred_area.size() - 1);

    MatchTable table;
    table.truth_best_iou.assign(nt, 0.0);
    std::vector<MatchPair> candidates;
    for (const auto& [key, inter] : o.inter) {
        const auto [t, p] = key;
        const double uni = static_cast<double>(o.truth_area[t] + o.pred_area[p] - inter);
        const double v = static_cast<double>(inter) / uni;
        table.truth_best_iou[t - 1] = std::max(table.truth_best_iou[t - 1], v);
        if (v >= iou_min) candidates.push_back({t, p, v});
    }
    std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        return std::tie(a.truth, a.pred) < std::tie(b.truth, b.pred);
    });
    std::vector<bool> truth_used(nt + 1, false);
    std::vector<bool> pred_used(np + 1, false);
    for (const auto& c : candidates) {
        if (truth_used[c.truth] || pred_used[c.pred]) continue;
        truth_used[c.truth] = pred_used[c.pred] = true;
        table.pairs.push_back(c);
    }
    std::sort(table.pairs.begin(), table.pairs.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.truth < b.truth; });
    for (Label t = 1; t <= nt; ++t)
        if (!truth_used[t] && o.truth_area[t] > 0) table.unmatched_truth.push_back(t);
    for (Label p = 1; p <= np; ++p)
        if (!pred_used[p] && o.pred_area[p] > 0) table.unmatched_pred.push_back(p);
    return table;
}

struct DetectionMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline DetectionMetrics detection_metrics(const MatchTable& m) {
    DetectionMetrics d;
    d.tp = m.pairs.size();
    d.fp = m.unmatched_pred.size();
    d.fn = m.unmatched_truth.size();
    auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    d.precision = ratio(d.tp, d.tp + d.fp);
    d.recall = ratio(d.tp, d.tp + d.fn);
    const double s = d.precision + d.recall;
    d.f1 = s == 0.0 ? 0.0 : 2.0 * d.precision * d.recall / s;
    return d;
}

/// Fraction of pixels whose foreground/background class agrees.
inline double pixel_accuracy(const LabelMap& truth, const LabelMap& pred) {
    if (!truth.same_shape(pred)) throw std::invalid_argument("pixel_accuracy: dimensions differ");
    if (truth.empty()) return 1.0;
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) agree += (truth[i] != 0) == (pred[i] != 0);
    return static_cast<double>(agree) / static_cast<double>(truth.size());
}

struct SizeDistribution {
    double bin_width = kDefaultSizeBinWidth;
    std::vector<std::uint64_t> counts;  // bin b covers [b * width, (b + 1) * width)
    double mean_area = 0.0;
    double std_area = 0.0;  // population
    std::size_t n = 0;
};

inline SizeDistribution size_distribution(const std::vector<InstanceStats>& stats,
                                          double bin_width = kDefaultSizeBinWidth) {
    if (!(bin_width > 0)) throw std::invalid_argument("size_distribution: bin width must be > 0");
    SizeDistribution d;
    d.bin_width = bin_width;
    d.n = stats.size();
    if (stats.empty()) return d;
    double sum = 0.0;
    for (const auto& s : stats) {
        const auto bin = static_cast<std::size_t>(std::floor(static_cast<double>(s.area) / bin_width));
        if (d.counts.size() <= bin) d.counts.resize(bin + 1, 0);
        ++d.counts[bin];
        sum += static_cast<double>(s.area);
    }
    d.mean_area = sum / static_cast<double>(stats.size());
    double ss = 0.0;
    for (const auto& s : stats) {
        const double dv = static_cast<double>(s.area) - d.mean_area;
        ss += dv * dv;
    }
    d.std_area = std::sqrt(ss / static_cast<double>(stats.size()));
    return d;
}

struct EvalConfig {
    double iou_min = kDefaultIouMin;
    double size_bin_width = kDefaultSizeBinWidth;
};

struct EvaluationReport {
    DetectionMetrics detection;
    double pixel_accuracy = 0.0;
    /// Mean over truth instances of their best IoU (0 when nothing overlaps).
    double mean_iou = 0.0;
    std::vector<double> instance_iou;
    MatchTable matches;
    SizeDistribution predicted_sizes;
    SizeDistribution truth_sizes;
    EvalConfig config;
};

inline EvaluationReport evaluate(const LabelMap& truth, const LabelMap& pred,
                                 const EvalConfig& cfg = {}) {
    EvaluationReport r;
    r.config = cfg;
    r.matches = match_instances(truth, pred, cfg.iou_min);
    r.detection = detection_metrics(r.matches);
    r.pixel_accuracy = pixel_accuracy(truth, pred);
    r.instance_iou = r.matches.truth_best_iou;
    if (!r.instance_iou.empty()) {
        double s = 0.0;
        for (double v : r.instance_iou) s += v;
        r.mean_iou = s / static_cast<double>(r.instance_iou.size());
    }
    r.predicted_sizes = size_distribution(measure_instances(pred), cfg.size_bin_width);
    r.truth_sizes = size_distribution(measure_instances(truth), cfg.size_bin_width);
    return r;
}

}  // namespace nanoseg

#endif  // NANOSEG_EVALUATE_HPP
