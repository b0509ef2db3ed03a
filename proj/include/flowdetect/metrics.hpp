#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowdetect/errors.hpp"

namespace flowdetect {

struct ConfusionMatrix {
    std::uint64_t tp = 0;  // attack predicted attack
    std::uint64_t tn = 0;  // benign predicted benign
    std::uint64_t fp = 0;  // benign predicted attack
    std::uint64_t fn = 0;  // attack predicted benign

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// Exact counting with positive class = attack (label 1).
ConfusionMatrix confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels);

struct MetricsReport {
    ConfusionMatrix cm;

    // Positive class = attack.
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    // Per-class and macro-averaged views; the benign values expose
    // minority-class behaviour under the heavy class imbalance.
    double benign_precision = 0.0;
    double benign_recall = 0.0;
    double benign_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;

    double threshold = 0.0;          // decision threshold in force, set by the caller
    bool zero_denominator = false;   // true when any ratio fell back to the 0 convention
};

/// Accuracy, precision, recall and F1 from the confusion counts. Ratios with
/// a zero denominator are reported as 0 (never NaN) and flagged.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

/// Flat JSON with fixed key names (accuracy, precision, recall, f1, tp, tn,
/// fp, fn, threshold, plus the per-class/macro variants).
std::string metrics_to_json(const MetricsReport& report);

/// Human-oriented table, four decimals per metric.
std::string metrics_to_text(const MetricsReport& report);

}  // namespace flowdetect
