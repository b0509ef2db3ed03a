#pragma once

// Brute-force reference implementations kept deliberately independent of the
// library code paths they are used to check.

#include <cstdint>
#include <vector>

#include "flowdetect/metrics.hpp"

namespace fdtest {

// Naive per-element confusion counting.
inline flowdetect::ConfusionMatrix naive_confusion(const std::vector<std::uint8_t>& preds,
                                                   const std::vector<std::uint8_t>& labels) {
    flowdetect::ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] == 1) {
            if (preds[i] == 1) cm.tp++; else cm.fn++;
        } else {
            if (preds[i] == 1) cm.fp++; else cm.tn++;
        }
    }
    return cm;
}

// Direct formula evaluation with the zero-denominator-means-zero convention.
struct NaiveMetrics {
    double accuracy, precision, recall, f1;
};

inline NaiveMetrics naive_metrics(const flowdetect::ConfusionMatrix& cm) {
    NaiveMetrics m{};
    const double total = static_cast<double>(cm.tp + cm.tn + cm.fp + cm.fn);
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / total;
    m.precision = (cm.tp + cm.fp) == 0 ? 0.0
                                       : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    m.recall = (cm.tp + cm.fn) == 0 ? 0.0
                                    : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    m.f1 = (m.precision + m.recall) == 0.0 ? 0.0
                                           : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

// F1 of "positive iff score > tau", counted sample by sample.
inline double f1_at_threshold(const std::vector<double>& scores,
                              const std::vector<std::uint8_t>& labels, double tau) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > tau;
        if (pred && labels[i] == 1) tp++;
        else if (pred && labels[i] == 0) fp++;
        else if (!pred && labels[i] == 1) fn++;
    }
    const double precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// Max F1 over an even grid of thresholds in [0,1].
inline double brute_force_best_f1(const std::vector<double>& scores,
                                  const std::vector<std::uint8_t>& labels,
                                  std::size_t grid_points = 10001) {
    double best = 0.0;
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double tau = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double f1 = f1_at_threshold(scores, labels, tau);
        if (f1 > best) best = f1;
    }
    return best;
}

}  // namespace fdtest
