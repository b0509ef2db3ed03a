#include "flowdetect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowdetect {

namespace {

double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    const double precision =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall =
        tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

struct SortedScores {
    std::vector<double> score;          // ascending
    std::vector<std::uint64_t> attacks_from;  // attacks among samples [i, end)
    std::uint64_t total_attacks = 0;

    // F1 of the rule "positive iff score > tau".
    double f1_at(double tau) const {
        const auto it = std::upper_bound(score.begin(), score.end(), tau);
        const std::size_t first = static_cast<std::size_t>(it - score.begin());
        const std::uint64_t tp = attacks_from[first];
        const std::uint64_t fp = static_cast<std::uint64_t>(score.size() - first) - tp;
        const std::uint64_t fn = total_attacks - tp;
        return f1_from_counts(tp, fp, fn);
    }
};

SortedScores sort_scores(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    SortedScores s;
    s.score.reserve(scores.size());
    std::vector<std::uint8_t> sorted_labels;
    sorted_labels.reserve(scores.size());
    for (std::size_t i : order) {
        s.score.push_back(scores[i]);
        sorted_labels.push_back(labels[i]);
    }
    s.attacks_from.assign(scores.size() + 1, 0);
    for (std::size_t i = scores.size(); i-- > 0;) {
        s.attacks_from[i] = s.attacks_from[i + 1] + (sorted_labels[i] != 0 ? 1 : 0);
    }
    s.total_attacks = s.attacks_from[0];
    return s;
}

}  // namespace

Calibration calibrate_threshold(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ContractError("calibrate_threshold: scores and labels must be equal-length and non-empty");
    }
    const bool has_attack = std::find(labels.begin(), labels.end(), std::uint8_t{1}) != labels.end();
    const bool has_benign = std::find(labels.begin(), labels.end(), std::uint8_t{0}) != labels.end();
    if (!has_attack || !has_benign) {
        throw ConfigError("calibrate_threshold: needs both classes, F1 is undefined otherwise");
    }

    const SortedScores sorted = sort_scores(scores, labels);

    // Candidate 0 covers the predict-everything-positive region below the
    // smallest score; midpoints cover every region between observed scores.
    std::vector<double> candidates{0.0, 0.5};
    for (std::size_t i = 0; i + 1 < sorted.score.size(); ++i) {
        if (sorted.score[i] != sorted.score[i + 1]) {
            candidates.push_back(0.5 * (sorted.score[i] + sorted.score[i + 1]));
        }
    }
    std::sort(candidates.begin(), candidates.end());

    Calibration best;
    best.threshold = candidates.front();
    best.f1 = sorted.f1_at(best.threshold);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double f1 = sorted.f1_at(candidates[i]);
        if (f1 > best.f1) {  // strict: ties keep the smallest threshold
            best.f1 = f1;
            best.threshold = candidates[i];
        }
    }
    return best;
}

std::vector<std::pair<double, double>> threshold_sweep(const std::vector<double>& scores,
                                                       const std::vector<std::uint8_t>& labels,
                                                       std::size_t grid) {
    if (grid < 2) throw ConfigError("threshold_sweep: grid must have at least 2 points");
    const SortedScores sorted = sort_scores(scores, labels);
    std::vector<std::pair<double, double>> sweep;
    sweep.reserve(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        const double tau = static_cast<double>(i) / static_cast<double>(grid - 1);
        sweep.emplace_back(tau, sorted.f1_at(tau));
    }
    return sweep;
}

std::vector<double> score_windows(const ModelParams& params, const ModelConfig& config,
                                  const WindowSet& windows) {
    const ForwardResult fwd = forward(windows.sequences, params, config, /*training=*/false, nullptr);
    return fwd.scores.values();
}

namespace {

Tensor gather_batch(const WindowSet& windows, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end, std::vector<std::uint8_t>& labels_out) {
    const std::size_t t = windows.time_steps(), n = windows.features();
    const std::size_t count = end - begin;
    Tensor batch({count, t, n});
    labels_out.clear();
    labels_out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t w = order[begin + i];
        for (std::size_t a = 0; a < t; ++a)
            for (std::size_t c = 0; c < n; ++c) batch.at(i, a, c) = windows.sequences.at(w, a, c);
        labels_out.push_back(windows.labels[w]);
    }
    return batch;
}

std::vector<std::uint8_t> predictions_at(const std::vector<double>& scores, double threshold) {
    std::vector<std::uint8_t> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > threshold ? 1 : 0;
    return preds;
}

}  // namespace

TrainResult train(const WindowSet& windows_train, const WindowSet& windows_val,
                  const PreprocStats& stats, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
    if (train_config.epochs == 0 || train_config.batch_size == 0) {
        throw ConfigError("train: epochs and batch size must be >= 1");
    }
    if (windows_train.count() == 0 || windows_val.count() == 0) {
        throw ConfigError("train: training and validation splits must be non-empty");
    }
    if (windows_train.time_steps() != model_config.time_steps ||
        windows_train.features() != model_config.features ||
        windows_val.time_steps() != model_config.time_steps ||
        windows_val.features() != model_config.features) {
        throw DimensionError("train: window dimensions do not match the model config");
    }
    const bool val_attack =
        std::find(windows_val.labels.begin(), windows_val.labels.end(), std::uint8_t{1}) !=
        windows_val.labels.end();
    const bool val_benign =
        std::find(windows_val.labels.begin(), windows_val.labels.end(), std::uint8_t{0}) !=
        windows_val.labels.end();
    if (!val_attack || !val_benign) {
        throw ConfigError("train: the validation split holds a single class, threshold "
                          "calibration needs both");
    }

    // Independent deterministic streams; the Rng constructor expands each
    // seed through splitmix64, so adjacent seeds do not correlate.
    Rng init_rng(train_config.seed);
    Rng shuffle_rng(train_config.seed + 1);
    Rng dropout_rng(train_config.seed + 2);

    ModelParams params = init_params(model_config, init_rng);
    std::vector<Tensor*> views = param_views(params);
    AdamState adam(views, train_config.adam);

    TrainResult result;
    double best_f1 = -1.0;
    double best_threshold = 0.5;
    std::size_t best_epoch = 0;
    ModelParams best_params = params;

    const std::size_t n_train = windows_train.count();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
        // Fisher-Yates reshuffle, derived solely from the seed stream.
        for (std::size_t i = n_train; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_below(i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        std::vector<std::uint8_t> batch_labels;
        for (std::size_t begin = 0; begin < n_train; begin += train_config.batch_size) {
            const std::size_t end = std::min(begin + train_config.batch_size, n_train);
            const Tensor batch = gather_batch(windows_train, order, begin, end, batch_labels);
            LossResult step = loss_and_grads(batch, batch_labels, params, model_config, &dropout_rng);
            epoch_loss += step.loss * static_cast<double>(end - begin);

            std::vector<Tensor*> grad_views = param_views(step.grads);
            if (train_config.clip_norm > 0.0) clip_global_norm(grad_views, train_config.clip_norm);
            std::vector<const Tensor*> grad_const(grad_views.begin(), grad_views.end());
            adam_step(views, grad_const, adam);
        }
        epoch_loss /= static_cast<double>(n_train);

        const std::vector<double> val_scores = score_windows(params, model_config, windows_val);
        const Calibration calib = calibrate_threshold(val_scores, windows_val.labels);
        const MetricsReport val_metrics =
            compute_metrics(confusion(predictions_at(val_scores, calib.threshold), windows_val.labels));

        EpochReport report;
        report.epoch = epoch;
        report.train_loss = epoch_loss;
        report.val_accuracy = val_metrics.accuracy;
        report.val_precision = val_metrics.precision;
        report.val_recall = val_metrics.recall;
        report.val_f1 = val_metrics.f1;
        report.threshold = calib.threshold;
        result.history.push_back(report);

        if (calib.f1 > best_f1) {
            best_f1 = calib.f1;
            best_threshold = calib.threshold;
            best_epoch = epoch;
            best_params = params;
        }
        if (train_config.patience > 0 && epoch - best_epoch >= train_config.patience) break;
    }

    result.best.config = model_config;
    result.best.params = std::move(best_params);
    result.best.stats = stats;
    result.best.threshold = best_threshold;
    result.best.meta.epochs_run = result.history.size();
    result.best.meta.best_epoch = best_epoch;
    result.best.meta.best_val_f1 = best_f1;
    result.best.meta.window_stride = windows_train.stride;
    return result;
}

MetricsReport evaluate(const Checkpoint& ckpt, const WindowSet& windows_test) {
    if (windows_test.count() == 0) throw ConfigError("evaluate: empty test split");
    if (windows_test.time_steps() != ckpt.config.time_steps ||
        windows_test.features() != ckpt.config.features) {
        throw DimensionError("evaluate: test windows do not match the checkpoint architecture");
    }
    const std::vector<double> scores = score_windows(ckpt.params, ckpt.config, windows_test);
    MetricsReport report =
        compute_metrics(confusion(predictions_at(scores, ckpt.threshold), windows_test.labels));
    report.threshold = ckpt.threshold;
    return report;
}

}  // namespace flowdetect
