// Evaluation protocol: time-to-accident at a threshold, exact average
// precision over ranked video scores, and the threshold-averaged mTTA.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "foresight/errors.hpp"

namespace foresight {

// Frame-wise probabilities for one video plus its ground truth.
struct PredictionRecord {
    std::vector<double> probs;      // p_t, one per frame
    std::vector<double> warn_probs; // pi_t(warn), empty when unavailable
    bool positive = false;
    std::size_t accident_frame = 0; // 1-based; 0 iff negative
    double fps = 0.0;
};

// Lead time in seconds between the first frame whose probability reaches
// the threshold and the accident frame; t_o is the 0-based index of that
// frame. Late predictions clamp to 0; no crossing yields nullopt.
inline std::optional<double> tta(const PredictionRecord& rec, double threshold) {
    if (!rec.positive || rec.accident_frame < 1)
        throw domain_error("tta: undefined for negative videos");
    for (std::size_t t = 0; t < rec.probs.size(); ++t) {
        if (rec.probs[t] >= threshold) {
            const double lead = (static_cast<double>(rec.accident_frame) -
                                 static_cast<double>(t)) /
                                rec.fps;
            return std::max(0.0, lead);
        }
    }
    return std::nullopt;
}

inline double video_score(const PredictionRecord& rec) {
    double best = 0.0;
    for (double p : rec.probs) best = std::max(best, p);
    return best;
}

// Exact all-points area under the precision-recall curve over ranked
// video scores. Tied scores are processed as one group, which matches
// threshold enumeration exactly.
inline double average_precision(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw shape_error("average_precision: scores and labels differ in length");
    std::size_t positives = 0, negatives = 0;
    for (int l : labels) (l ? positives : negatives)++;
    if (positives == 0 || negatives == 0)
        throw domain_error("average_precision: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    double ap = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp)++;
            ++j;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    return ap;
}

// 21 thresholds, 0.00 to 1.00 in steps of 0.05.
inline std::vector<double> default_threshold_grid() {
    std::vector<double> grid(21);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = static_cast<double>(i) * 0.05;
    return grid;
}

// Mean over the grid of the per-threshold mean TTA over positive videos
// that cross that threshold; thresholds no video crosses contribute 0.
inline double mtta(const std::vector<PredictionRecord>& records,
                   const std::vector<double>& grid) {
    if (grid.empty()) throw domain_error("mtta: empty threshold grid");
    std::size_t positives = 0;
    for (const PredictionRecord& r : records) positives += r.positive ? 1 : 0;
    if (positives == 0)
        throw domain_error("mtta: need at least one positive record");

    double total = 0.0;
    for (double threshold : grid) {
        double sum = 0.0;
        std::size_t crossed = 0;
        for (const PredictionRecord& r : records) {
            if (!r.positive) continue;
            const std::optional<double> dt = tta(r, threshold);
            if (dt) {
                sum += *dt;
                ++crossed;
            }
        }
        if (crossed > 0) total += sum / static_cast<double>(crossed);
    }
    return total / static_cast<double>(grid.size());
}

// Emit-ready evaluation summary.
struct MetricsReport {
    double ap = 0.0;
    double mtta_seconds = 0.0;
    std::vector<double> precision; // per ranked-score group
    std::vector<double> recall;
    // per threshold: TTA of every positive video, -1 when it never crosses
    std::vector<double> thresholds;
    std::vector<std::vector<double>> tta_per_video;
    std::size_t true_positives = 0;  // video score >= 0.5 on positives
    std::size_t false_positives = 0; // video score >= 0.5 on negatives
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

inline MetricsReport compute_metrics(const std::vector<PredictionRecord>& records,
                                     const std::vector<double>& grid) {
    MetricsReport rep;
    rep.thresholds = grid;

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(records.size());
    labels.reserve(records.size());
    for (const PredictionRecord& r : records) {
        const double s = video_score(r);
        scores.push_back(s);
        labels.push_back(r.positive ? 1 : 0);
        if (r.positive) {
            ++rep.positives;
            if (s >= 0.5) ++rep.true_positives;
        } else {
            ++rep.negatives;
            if (s >= 0.5) ++rep.false_positives;
        }
    }
    rep.ap = average_precision(scores, labels);
    rep.mtta_seconds = mtta(records, grid);

    // PR curve at ranked-score group boundaries
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp)++;
            ++j;
        }
        rep.recall.push_back(static_cast<double>(tp) /
                             static_cast<double>(rep.positives));
        rep.precision.push_back(static_cast<double>(tp) /
                                static_cast<double>(tp + fp));
        i = j;
    }

    for (double threshold : grid) {
        std::vector<double> row;
        for (const PredictionRecord& r : records) {
            if (!r.positive) continue;
            const std::optional<double> dt = tta(r, threshold);
            row.push_back(dt ? *dt : -1.0);
        }
        rep.tta_per_video.push_back(std::move(row));
    }
    return rep;
}

} // namespace foresight
