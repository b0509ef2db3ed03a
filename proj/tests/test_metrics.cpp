#include "flowdetect/metrics.hpp"

#include <gtest/gtest.h>

#include "flowdetect/tensor.hpp"
#include "support/oracles.hpp"

using namespace flowdetect;

TEST(Confusion, PerfectPrediction) {
    const ConfusionMatrix cm = confusion({1, 0, 1}, {1, 0, 1});
    EXPECT_EQ(cm.tp, 2u);
    EXPECT_EQ(cm.tn, 1u);
    EXPECT_EQ(cm.fp, 0u);
    EXPECT_EQ(cm.fn, 0u);
}

TEST(Confusion, TotalInversion) {
    const ConfusionMatrix cm = confusion({0, 1, 0}, {1, 0, 1});
    EXPECT_EQ(cm.tp, 0u);
    EXPECT_EQ(cm.tn, 0u);
    EXPECT_EQ(cm.fp, 1u);
    EXPECT_EQ(cm.fn, 2u);
}

TEST(Confusion, MatchesNaiveCountingOnRandomVectors) {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint8_t> preds(1000), labels(1000);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            preds[i] = rng.next_double() < 0.5 ? 1 : 0;
            labels[i] = rng.next_double() < 0.5 ? 1 : 0;
        }
        const ConfusionMatrix lib = confusion(preds, labels);
        const ConfusionMatrix naive = fdtest::naive_confusion(preds, labels);
        EXPECT_EQ(lib.tp, naive.tp);
        EXPECT_EQ(lib.tn, naive.tn);
        EXPECT_EQ(lib.fp, naive.fp);
        EXPECT_EQ(lib.fn, naive.fn);
    }
}

TEST(Confusion, ContractViolations) {
    EXPECT_THROW(confusion({1, 0}, {1}), ContractError);
    EXPECT_THROW(confusion({}, {}), ContractError);
}

TEST(ComputeMetrics, HandComputedCase) {
    const MetricsReport r = compute_metrics({3, 4, 1, 2});
    EXPECT_NEAR(r.precision, 0.75, 1e-12);
    EXPECT_NEAR(r.recall, 0.6, 1e-12);
    EXPECT_NEAR(r.f1, 0.9 / 1.35, 1e-12);  // 2 * 0.75 * 0.6 / (0.75 + 0.6)
    EXPECT_NEAR(r.accuracy, 0.7, 1e-12);
    EXPECT_FALSE(r.zero_denominator);
}

TEST(ComputeMetrics, PerfectCase) {
    const MetricsReport r = compute_metrics({5, 7, 0, 0});
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
}

TEST(ComputeMetrics, ZeroDenominatorConvention) {
    // No predicted positives and no actual positives: precision and recall
    // both fall back to 0 without a division fault, and the report says so.
    const MetricsReport r = compute_metrics({0, 10, 0, 0});
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.recall, 0.0);
    EXPECT_EQ(r.f1, 0.0);
    EXPECT_TRUE(r.zero_denominator);
    EXPECT_THROW(compute_metrics({0, 0, 0, 0}), ContractError);
}

TEST(ComputeMetrics, F1RecomputesFromPrecisionAndRecall) {
    Rng rng(102);
    for (int trial = 0; trial < 100; ++trial) {
        ConfusionMatrix cm;
        cm.tp = rng.next_below(50);
        cm.tn = rng.next_below(50);
        cm.fp = rng.next_below(50);
        cm.fn = rng.next_below(50);
        if (cm.total() == 0) continue;
        const MetricsReport r = compute_metrics(cm);
        if (r.precision + r.recall > 0.0) {
            EXPECT_NEAR(r.f1, 2.0 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
        }
        EXPECT_EQ(r.accuracy,
                  static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()));
        const auto naive = fdtest::naive_metrics(cm);
        EXPECT_EQ(r.precision, naive.precision);
        EXPECT_EQ(r.recall, naive.recall);
        EXPECT_EQ(r.f1, naive.f1);
        EXPECT_EQ(r.accuracy, naive.accuracy);
    }
}

TEST(ComputeMetrics, ClassSwapSymmetry) {
    Rng rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix cm{1 + rng.next_below(40), 1 + rng.next_below(40), rng.next_below(40),
                           rng.next_below(40)};
        const MetricsReport r = compute_metrics(cm);
        const MetricsReport swapped = compute_metrics({cm.tn, cm.tp, cm.fn, cm.fp});
        EXPECT_EQ(swapped.precision, r.benign_precision);
        EXPECT_EQ(swapped.recall, r.benign_recall);
        EXPECT_EQ(swapped.f1, r.benign_f1);
        EXPECT_EQ(swapped.benign_precision, r.precision);
        EXPECT_EQ(swapped.accuracy, r.accuracy);
    }
}

TEST(MetricsReport, SerializesWithFixedKeys) {
    MetricsReport r = compute_metrics({3, 4, 1, 2});
    r.threshold = 0.42;
    const std::string json = metrics_to_json(r);
    for (const char* key : {"\"accuracy\"", "\"precision\"", "\"recall\"", "\"f1\"", "\"tp\"",
                            "\"tn\"", "\"fp\"", "\"fn\"", "\"threshold\"", "\"macro_f1\""}) {
        EXPECT_NE(json.find(key), std::string::npos) << key;
    }
    const std::string text = metrics_to_text(r);
    EXPECT_NE(text.find("accuracy"), std::string::npos);
}
