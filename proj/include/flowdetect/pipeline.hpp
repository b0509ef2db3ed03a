#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowdetect/metrics.hpp"
#include "flowdetect/model.hpp"
#include "flowdetect/optim.hpp"

namespace flowdetect {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    AdamConfig adam;           // lr 1e-3, betas 0.9/0.999, eps 1e-8
    double clip_norm = 5.0;    // global L2 clip; <= 0 disables
    std::uint64_t seed = 1;    // drives init, shuffling and dropout
    std::size_t threshold_grid = 1001;  // resolution of the exported sweep
    std::size_t patience = 0;  // early stop after this many stale epochs; 0 = off
};

struct EpochReport {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_precision = 0.0;
    double val_recall = 0.0;
    double val_f1 = 0.0;
    double threshold = 0.5;  // calibrated on the validation split this epoch
};

struct TrainResult {
    Checkpoint best;  // highest validation F1; ties keep the earlier epoch
    std::vector<EpochReport> history;
};

struct Calibration {
    double threshold = 0.5;
    double f1 = 0.0;
};

/// Picks the threshold maximizing validation F1 (positive class = attack,
/// prediction rule: score strictly greater than the threshold). Candidates
/// are 0, the midpoints of consecutive sorted unique scores, and 0.5; F1
/// is piecewise constant between observed scores, so this sweep is lossless.
/// Ties resolve to the smallest threshold. Requires both classes present.
Calibration calibrate_threshold(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& labels);

/// (threshold, F1) over `grid` evenly spaced thresholds in [0,1]; exported
/// as the calibration sweep table.
std::vector<std::pair<double, double>> threshold_sweep(const std::vector<double>& scores,
                                                       const std::vector<std::uint8_t>& labels,
                                                       std::size_t grid);

/// Inference scores for every window, in order (no dropout, no rng).
std::vector<double> score_windows(const ModelParams& params, const ModelConfig& config,
                                  const WindowSet& windows);

/// The full training protocol: per epoch, seeded reshuffle -> mini-batch
/// Adam steps -> validation scoring -> threshold calibration -> report.
/// The returned checkpoint embeds `stats` so inference is self-contained.
TrainResult train(const WindowSet& windows_train, const WindowSet& windows_val,
                  const PreprocStats& stats, const ModelConfig& model_config,
                  const TrainConfig& train_config);

/// Test-split evaluation at the checkpoint's stored threshold.
MetricsReport evaluate(const Checkpoint& ckpt, const WindowSet& windows_test);

}  // namespace flowdetect
