#include "flowdetect/metrics.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace flowdetect {

ConfusionMatrix confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels) {
    if (predictions.size() != labels.size()) {
        throw ContractError("confusion: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw ContractError("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] != 0;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++cm.tp;
        else if (!pred && !truth) ++cm.tn;
        else if (pred && !truth) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& zero_den) {
    if (den == 0) {
        zero_den = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_from(double precision, double recall, bool& zero_den) {
    if (precision + recall == 0.0) {
        zero_den = true;
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ContractError("compute_metrics: empty confusion matrix");
    MetricsReport r;
    r.cm = cm;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    r.precision = ratio(cm.tp, cm.tp + cm.fp, r.zero_denominator);
    r.recall = ratio(cm.tp, cm.tp + cm.fn, r.zero_denominator);
    r.f1 = f1_from(r.precision, r.recall, r.zero_denominator);

    // Benign-class view: swap the roles of the two classes.
    r.benign_precision = ratio(cm.tn, cm.tn + cm.fn, r.zero_denominator);
    r.benign_recall = ratio(cm.tn, cm.tn + cm.fp, r.zero_denominator);
    r.benign_f1 = f1_from(r.benign_precision, r.benign_recall, r.zero_denominator);

    r.macro_precision = 0.5 * (r.precision + r.benign_precision);
    r.macro_recall = 0.5 * (r.recall + r.benign_recall);
    r.macro_f1 = 0.5 * (r.f1 + r.benign_f1);
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["tp"] = r.cm.tp;
    j["tn"] = r.cm.tn;
    j["fp"] = r.cm.fp;
    j["fn"] = r.cm.fn;
    j["threshold"] = r.threshold;
    j["benign_precision"] = r.benign_precision;
    j["benign_recall"] = r.benign_recall;
    j["benign_f1"] = r.benign_f1;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    j["zero_denominator"] = r.zero_denominator;
    return j.dump(2) + "\n";
}

std::string metrics_to_text(const MetricsReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "confusion: tp=%llu tn=%llu fp=%llu fn=%llu (threshold %.6f)\n"
                  "accuracy  %.4f\n"
                  "precision %.4f  (benign %.4f, macro %.4f)\n"
                  "recall    %.4f  (benign %.4f, macro %.4f)\n"
                  "f1        %.4f  (benign %.4f, macro %.4f)\n",
                  static_cast<unsigned long long>(r.cm.tp), static_cast<unsigned long long>(r.cm.tn),
                  static_cast<unsigned long long>(r.cm.fp), static_cast<unsigned long long>(r.cm.fn),
                  r.threshold, r.accuracy, r.precision, r.benign_precision, r.macro_precision,
                  r.recall, r.benign_recall, r.macro_recall, r.f1, r.benign_f1, r.macro_f1);
    std::string out = buf;
    if (r.zero_denominator) out += "note: a zero denominator was reported as 0\n";
    return out;
}

}  // namespace flowdetect
