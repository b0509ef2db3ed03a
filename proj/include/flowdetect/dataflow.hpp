#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowdetect/tensor.hpp"

namespace flowdetect {

/// One parsed NetFlow row. Row order is treated as temporal order
/// throughout: the base schema carries no per-flow timestamp.
struct FlowRecord {
    std::string src_addr;
    std::uint16_t src_port = 0;
    std::string dst_addr;
    std::uint16_t dst_port = 0;
    std::int64_t protocol = 0;
    double l7_proto = 0.0;
    std::int64_t in_bytes = 0;
    std::int64_t out_bytes = 0;
    std::int64_t in_pkts = 0;
    std::int64_t out_pkts = 0;
    std::int64_t tcp_flags = 0;
    std::int64_t flow_duration_ms = 0;
    std::uint8_t label = 0;  // 0 benign, 1 attack
    std::string attack_name;
};

/// The expected header, in canonical order. Input files may permute these
/// columns but must contain exactly this set.
extern const std::array<const char*, 14> kCsvColumns;

struct SkippedRow {
    std::size_t line = 0;  // 1-based line number in the file
    std::string reason;
};

struct LoadResult {
    std::vector<FlowRecord> records;
    std::vector<SkippedRow> skipped;

    std::size_t benign_count() const;
    double benign_fraction() const;
};

/// Parses the whole file. Schema problems (missing or unexpected columns)
/// throw DataError naming the difference; malformed rows are skipped,
/// counted and reported with their line number. Row order is preserved.
LoadResult load_csv(const std::string& path);

/// Fitted preprocessing state: frequency-rank codes for the protocol-like
/// fields plus per-feature standardization statistics from the training
/// split. Addresses and ports never become features, and neither does the
/// attack-name column.
struct PreprocStats {
    // Retained feature names in matrix column order.
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> stddev;

    // Category value -> frequency rank (1 = most frequent). Unseen values
    // map to the reserved code 0.
    std::map<std::int64_t, std::int64_t> protocol_codes;
    std::map<std::int64_t, std::int64_t> l7_codes;  // keyed by raw double bits

    std::vector<std::string> dropped;  // zero-variance features, by name

    std::size_t feature_count() const { return feature_names.size(); }
};

/// z-score statistics and category vocabularies from the training split.
/// Columns whose variance is zero are dropped and listed in `dropped`.
PreprocStats fit_preprocessor(const std::vector<FlowRecord>& train_records);

struct FeatureTable {
    Tensor matrix;                     // [rows x n], standardized
    std::vector<std::uint8_t> labels;  // one per row

    std::size_t rows() const { return labels.size(); }
    std::size_t features() const { return matrix.rank() == 2 ? matrix.dim(1) : 0; }
};

/// Deterministic row-for-row standardization using fitted statistics;
/// labels are copied through unchanged.
FeatureTable transform(const std::vector<FlowRecord>& records, const PreprocStats& stats);

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct Splits {
    std::vector<FlowRecord> train;
    std::vector<FlowRecord> val;
    std::vector<FlowRecord> test;
};

/// Contiguous prefix/middle/suffix in original row order. Sizes use floor
/// allocation with the remainder assigned to the training split; a split
/// that would receive zero rows is a configuration error.
Splits split_chronological(const std::vector<FlowRecord>& records, const SplitRatios& ratios);

struct WindowSet {
    Tensor sequences;                  // [windows x T x n]
    std::vector<std::uint8_t> labels;  // label of each window's last row
    std::size_t stride = 1;

    std::size_t count() const { return labels.size(); }
    std::size_t time_steps() const { return sequences.rank() == 3 ? sequences.dim(1) : 0; }
    std::size_t features() const { return sequences.rank() == 3 ? sequences.dim(2) : 0; }
};

/// Sliding windows of T consecutive rows starting at 0, stride, 2*stride...
/// window count = floor((rows-T)/stride)+1; each window takes the label of
/// its last row.
WindowSet build_windows(const FeatureTable& table, std::size_t time_steps, std::size_t stride);

/// Seeded stratified subsample preserving the class balance and the original
/// row order (so windows built from the result keep their temporal meaning).
std::vector<FlowRecord> subsample_stratified(const std::vector<FlowRecord>& records,
                                             std::size_t target, std::uint64_t seed);

// Versioned binary caches (see serialize.hpp for the container format).
void save_window_set(const WindowSet& ws, const std::string& path);
WindowSet load_window_set(const std::string& path);

void save_preproc_stats(const PreprocStats& stats, const std::string& path);
PreprocStats load_preproc_stats(const std::string& path);

// Stats <-> bytes, shared with the model checkpoint container.
std::string preproc_stats_to_bytes(const PreprocStats& stats);
PreprocStats preproc_stats_from_bytes(const std::string& bytes);

}  // namespace flowdetect
