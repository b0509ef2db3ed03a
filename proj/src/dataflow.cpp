#include "flowdetect/dataflow.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "flowdetect/serialize.hpp"

namespace flowdetect {

const std::array<const char*, 14> kCsvColumns = {
    "IPV4_SRC_ADDR", "L4_SRC_PORT",  "IPV4_DST_ADDR", "L4_DST_PORT",
    "PROTOCOL",      "L7_PROTO",     "IN_BYTES",      "OUT_BYTES",
    "IN_PKTS",       "OUT_PKTS",     "TCP_FLAGS",     "FLOW_DURATION_MILLISECONDS",
    "Label",         "Attack"};

std::size_t LoadResult::benign_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == 0;
    return n;
}

double LoadResult::benign_fraction() const {
    if (records.empty()) return 0.0;
    return static_cast<double>(benign_count()) / static_cast<double>(records.size());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
        fields.back().pop_back();
    }
    return fields;
}

std::int64_t parse_int(const std::string& field, const char* name) {
    std::int64_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(std::string(name) + ": not an integer: '" + field + "'");
    }
    return value;
}

double parse_double(const std::string& field, const char* name) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(std::string(name) + ": not a number: '" + field + "'");
    }
    return value;
}

std::uint16_t parse_port(const std::string& field, const char* name) {
    const std::int64_t v = parse_int(field, name);
    if (v < 0 || v > 65535) {
        throw DataError(std::string(name) + ": port out of range: " + std::to_string(v));
    }
    return static_cast<std::uint16_t>(v);
}

std::int64_t parse_count(const std::string& field, const char* name) {
    const std::int64_t v = parse_int(field, name);
    if (v < 0) throw DataError(std::string(name) + ": negative count: " + std::to_string(v));
    return v;
}

// Column index per canonical field, resolved from the header row.
struct ColumnMap {
    std::array<std::size_t, 14> index{};
};

ColumnMap resolve_header(const std::string& header_line, const std::string& path) {
    const std::vector<std::string> names = split_line(header_line);
    std::string missing, unexpected;
    ColumnMap map;
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
        const auto it = std::find(names.begin(), names.end(), kCsvColumns[c]);
        if (it == names.end()) {
            missing += missing.empty() ? "" : ", ";
            missing += kCsvColumns[c];
        } else {
            map.index[c] = static_cast<std::size_t>(it - names.begin());
        }
    }
    for (const auto& n : names) {
        if (std::find_if(kCsvColumns.begin(), kCsvColumns.end(),
                         [&](const char* k) { return n == k; }) == kCsvColumns.end()) {
            unexpected += unexpected.empty() ? "" : ", ";
            unexpected += "'" + n + "'";
        }
    }
    if (!missing.empty() || !unexpected.empty()) {
        std::string msg = path + ": header does not match the expected column set";
        if (!missing.empty()) msg += "; missing: " + missing;
        if (!unexpected.empty()) msg += "; unexpected: " + unexpected;
        throw DataError(msg);
    }
    return map;
}

FlowRecord parse_record(const std::vector<std::string>& f, const ColumnMap& m) {
    FlowRecord r;
    r.src_addr = f[m.index[0]];
    r.src_port = parse_port(f[m.index[1]], "L4_SRC_PORT");
    r.dst_addr = f[m.index[2]];
    r.dst_port = parse_port(f[m.index[3]], "L4_DST_PORT");
    r.protocol = parse_int(f[m.index[4]], "PROTOCOL");
    r.l7_proto = parse_double(f[m.index[5]], "L7_PROTO");
    r.in_bytes = parse_count(f[m.index[6]], "IN_BYTES");
    r.out_bytes = parse_count(f[m.index[7]], "OUT_BYTES");
    r.in_pkts = parse_count(f[m.index[8]], "IN_PKTS");
    r.out_pkts = parse_count(f[m.index[9]], "OUT_PKTS");
    r.tcp_flags = parse_int(f[m.index[10]], "TCP_FLAGS");
    r.flow_duration_ms = parse_count(f[m.index[11]], "FLOW_DURATION_MILLISECONDS");
    const std::int64_t label = parse_int(f[m.index[12]], "Label");
    if (label != 0 && label != 1) {
        throw DataError("Label: must be 0 or 1, got " + std::to_string(label));
    }
    r.label = static_cast<std::uint8_t>(label);
    r.attack_name = f[m.index[13]];
    return r;
}

}  // namespace

LoadResult load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file, header row expected");
    const ColumnMap map = resolve_header(line, path);

    LoadResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != kCsvColumns.size()) {
            result.skipped.push_back({line_no, "expected " + std::to_string(kCsvColumns.size()) +
                                                   " fields, got " + std::to_string(fields.size())});
            continue;
        }
        try {
            result.records.push_back(parse_record(fields, map));
        } catch (const DataError& e) {
            result.skipped.push_back({line_no, e.what()});
        }
    }
    return result;
}

namespace {

constexpr std::size_t kRawFeatureCount = 8;
const std::array<const char*, kRawFeatureCount> kRawFeatureNames = {
    "protocol", "l7_proto", "in_bytes",  "out_bytes",
    "in_pkts",  "out_pkts", "tcp_flags", "flow_duration_ms"};

// Frequency-rank coding: 1 = most frequent; frequency ties break toward the
// smaller raw value so the coding is deterministic.
std::map<std::int64_t, std::int64_t> rank_by_frequency(const std::map<std::int64_t, std::size_t>& counts) {
    std::vector<std::pair<std::int64_t, std::size_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::map<std::int64_t, std::int64_t> codes;
    for (std::size_t i = 0; i < order.size(); ++i) {
        codes[order[i].first] = static_cast<std::int64_t>(i + 1);
    }
    return codes;
}

std::int64_t l7_key(double value) {
    return static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(value));
}

std::int64_t code_or_unknown(const std::map<std::int64_t, std::int64_t>& codes, std::int64_t key) {
    const auto it = codes.find(key);
    return it == codes.end() ? 0 : it->second;
}

// Raw (pre-standardization) feature vector in kRawFeatureNames order.
std::array<double, kRawFeatureCount> raw_features(const FlowRecord& r, const PreprocStats& stats) {
    return {static_cast<double>(code_or_unknown(stats.protocol_codes, r.protocol)),
            static_cast<double>(code_or_unknown(stats.l7_codes, l7_key(r.l7_proto))),
            static_cast<double>(r.in_bytes),
            static_cast<double>(r.out_bytes),
            static_cast<double>(r.in_pkts),
            static_cast<double>(r.out_pkts),
            static_cast<double>(r.tcp_flags),
            static_cast<double>(r.flow_duration_ms)};
}

}  // namespace

PreprocStats fit_preprocessor(const std::vector<FlowRecord>& train_records) {
    if (train_records.empty()) throw ConfigError("fit_preprocessor: empty training split");

    PreprocStats stats;
    std::map<std::int64_t, std::size_t> proto_counts, l7_counts;
    for (const auto& r : train_records) {
        ++proto_counts[r.protocol];
        ++l7_counts[l7_key(r.l7_proto)];
    }
    stats.protocol_codes = rank_by_frequency(proto_counts);
    stats.l7_codes = rank_by_frequency(l7_counts);

    const double n = static_cast<double>(train_records.size());
    std::array<double, kRawFeatureCount> mean{}, var{};
    for (const auto& r : train_records) {
        const auto raw = raw_features(r, stats);
        for (std::size_t c = 0; c < kRawFeatureCount; ++c) mean[c] += raw[c];
    }
    for (auto& m : mean) m /= n;
    for (const auto& r : train_records) {
        const auto raw = raw_features(r, stats);
        for (std::size_t c = 0; c < kRawFeatureCount; ++c) {
            const double d = raw[c] - mean[c];
            var[c] += d * d;
        }
    }

    for (std::size_t c = 0; c < kRawFeatureCount; ++c) {
        const double sd = std::sqrt(var[c] / n);
        if (sd > 0.0) {
            stats.feature_names.push_back(kRawFeatureNames[c]);
            stats.mean.push_back(mean[c]);
            stats.stddev.push_back(sd);
        } else {
            stats.dropped.push_back(kRawFeatureNames[c]);
        }
    }
    if (stats.feature_names.empty()) {
        throw ConfigError("fit_preprocessor: every feature has zero variance");
    }
    return stats;
}

FeatureTable transform(const std::vector<FlowRecord>& records, const PreprocStats& stats) {
    const std::size_t n_features = stats.feature_count();
    // Retained raw-column index per output column.
    std::vector<std::size_t> raw_index(n_features);
    for (std::size_t c = 0; c < n_features; ++c) {
        const auto it = std::find_if(kRawFeatureNames.begin(), kRawFeatureNames.end(),
                                     [&](const char* k) { return stats.feature_names[c] == k; });
        if (it == kRawFeatureNames.end()) {
            throw ContractError("transform: unknown feature name " + stats.feature_names[c]);
        }
        raw_index[c] = static_cast<std::size_t>(it - kRawFeatureNames.begin());
    }

    FeatureTable table;
    table.labels.reserve(records.size());
    std::vector<double> data;
    data.reserve(records.size() * n_features);
    for (const auto& r : records) {
        const auto raw = raw_features(r, stats);
        for (std::size_t c = 0; c < n_features; ++c) {
            data.push_back((raw[raw_index[c]] - stats.mean[c]) / stats.stddev[c]);
        }
        table.labels.push_back(r.label);
    }
    table.matrix = Tensor({records.size(), n_features}, std::move(data));
    return table;
}

Splits split_chronological(const std::vector<FlowRecord>& records, const SplitRatios& ratios) {
    if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
        throw ConfigError("split ratios must all be positive");
    }
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1");
    }
    const std::size_t total = records.size();
    std::size_t n_val = static_cast<std::size_t>(ratios.val * static_cast<double>(total));
    std::size_t n_test = static_cast<std::size_t>(ratios.test * static_cast<double>(total));
    std::size_t n_train_floor = static_cast<std::size_t>(ratios.train * static_cast<double>(total));
    if (n_train_floor + n_val + n_test > total) {
        throw ConfigError("split allocation exceeds the input size");
    }
    const std::size_t n_train = total - n_val - n_test;  // floor remainder goes to train
    if (n_train == 0 || n_val == 0 || n_test == 0) {
        throw ConfigError("a split would receive zero rows (input has " + std::to_string(total) +
                          ")");
    }
    Splits s;
    s.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(records.begin() + static_cast<std::ptrdiff_t>(n_train),
                 records.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(records.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), records.end());
    return s;
}

WindowSet build_windows(const FeatureTable& table, std::size_t time_steps, std::size_t stride) {
    if (time_steps == 0 || stride == 0) {
        throw ConfigError("build_windows: time steps and stride must be >= 1");
    }
    const std::size_t rows = table.rows();
    const std::size_t n = table.features();
    if (rows < time_steps) {
        throw SequenceError("build_windows: " + std::to_string(rows) +
                            " rows is shorter than the window length " +
                            std::to_string(time_steps));
    }
    const std::size_t count = (rows - time_steps) / stride + 1;
    WindowSet ws;
    ws.stride = stride;
    ws.labels.reserve(count);
    std::vector<double> data;
    data.reserve(count * time_steps * n);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * stride;
        for (std::size_t t = 0; t < time_steps; ++t) {
            for (std::size_t c = 0; c < n; ++c) data.push_back(table.matrix.at(start + t, c));
        }
        ws.labels.push_back(table.labels[start + time_steps - 1]);
    }
    ws.sequences = Tensor({count, time_steps, n}, std::move(data));
    return ws;
}

std::vector<FlowRecord> subsample_stratified(const std::vector<FlowRecord>& records,
                                             std::size_t target, std::uint64_t seed) {
    if (target == 0 || target > records.size()) {
        throw ConfigError("subsample size must lie in [1, " + std::to_string(records.size()) + "]");
    }
    std::vector<std::size_t> benign_idx, attack_idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (records[i].label == 0 ? benign_idx : attack_idx).push_back(i);
    }
    // Largest-remainder allocation of the target across the two classes.
    const double share = static_cast<double>(benign_idx.size()) / static_cast<double>(records.size());
    std::size_t n_benign = static_cast<std::size_t>(share * static_cast<double>(target));
    n_benign = std::min(n_benign, benign_idx.size());
    std::size_t n_attack = target - n_benign;
    if (n_attack > attack_idx.size()) {
        n_benign += n_attack - attack_idx.size();
        n_attack = attack_idx.size();
    }

    Rng rng(seed);
    auto pick = [&rng](std::vector<std::size_t>& pool, std::size_t take) {
        // Partial Fisher-Yates: the first `take` entries become the sample.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
    };
    pick(benign_idx, n_benign);
    pick(attack_idx, n_attack);

    std::vector<std::size_t> chosen;
    chosen.reserve(target);
    chosen.insert(chosen.end(), benign_idx.begin(), benign_idx.end());
    chosen.insert(chosen.end(), attack_idx.begin(), attack_idx.end());
    std::sort(chosen.begin(), chosen.end());  // keep the original temporal order

    std::vector<FlowRecord> out;
    out.reserve(target);
    for (std::size_t i : chosen) out.push_back(records[i]);
    return out;
}

namespace {

constexpr char kWindowMagic[9] = "FDWINSET";
constexpr char kStatsMagic[9] = "FDPSTATS";
constexpr std::uint32_t kCacheVersion = 1;

std::string codes_to_bytes(const std::map<std::int64_t, std::int64_t>& codes) {
    ByteWriter w;
    w.put_u64(codes.size());
    for (const auto& [key, code] : codes) {
        w.put_i64(key);
        w.put_i64(code);
    }
    return w.take();
}

std::map<std::int64_t, std::int64_t> codes_from_bytes(ByteReader& r) {
    const std::uint64_t n = r.get_u64();
    std::map<std::int64_t, std::int64_t> codes;
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::int64_t key = r.get_i64();
        codes[key] = r.get_i64();
    }
    return codes;
}

}  // namespace

void save_window_set(const WindowSet& ws, const std::string& path) {
    ByteWriter dims;
    dims.put_u64(ws.count());
    dims.put_u64(ws.time_steps());
    dims.put_u64(ws.features());
    dims.put_u64(ws.stride);
    ByteWriter data;
    data.put_f64_array(ws.sequences.values());
    ByteWriter labels;
    labels.put_u8_array(ws.labels);
    write_container(path, kWindowMagic, kCacheVersion,
                    {{"dims", dims.take()}, {"data", data.take()}, {"labels", labels.take()}});
}

WindowSet load_window_set(const std::string& path) {
    auto sections = read_container(path, kWindowMagic, kCacheVersion);
    ByteReader dims(sections.at("dims"));
    const std::uint64_t count = dims.get_u64();
    const std::uint64_t t = dims.get_u64();
    const std::uint64_t n = dims.get_u64();
    const std::uint64_t stride = dims.get_u64();
    ByteReader data(sections.at("data"));
    ByteReader labels(sections.at("labels"));
    WindowSet ws;
    ws.stride = stride;
    ws.sequences = Tensor({count, t, n}, data.get_f64_array());
    ws.labels = labels.get_u8_array();
    if (ws.labels.size() != count) throw IntegrityError(path + ": label count mismatch");
    return ws;
}

std::string preproc_stats_to_bytes(const PreprocStats& stats) {
    ByteWriter w;
    w.put_u64(stats.feature_names.size());
    for (const auto& name : stats.feature_names) w.put_string(name);
    w.put_f64_array(stats.mean);
    w.put_f64_array(stats.stddev);
    const std::string proto = codes_to_bytes(stats.protocol_codes);
    w.put_bytes(proto.data(), proto.size());
    const std::string l7 = codes_to_bytes(stats.l7_codes);
    w.put_bytes(l7.data(), l7.size());
    w.put_u64(stats.dropped.size());
    for (const auto& name : stats.dropped) w.put_string(name);
    return w.take();
}

PreprocStats preproc_stats_from_bytes(const std::string& bytes) {
    ByteReader r(bytes);
    PreprocStats stats;
    const std::uint64_t n = r.get_u64();
    for (std::uint64_t i = 0; i < n; ++i) stats.feature_names.push_back(r.get_string());
    stats.mean = r.get_f64_array();
    stats.stddev = r.get_f64_array();
    stats.protocol_codes = codes_from_bytes(r);
    stats.l7_codes = codes_from_bytes(r);
    const std::uint64_t nd = r.get_u64();
    for (std::uint64_t i = 0; i < nd; ++i) stats.dropped.push_back(r.get_string());
    if (stats.mean.size() != stats.feature_names.size() ||
        stats.stddev.size() != stats.feature_names.size()) {
        throw IntegrityError("preprocessing statistics are inconsistent");
    }
    return stats;
}

void save_preproc_stats(const PreprocStats& stats, const std::string& path) {
    write_container(path, kStatsMagic, kCacheVersion, {{"stats", preproc_stats_to_bytes(stats)}});
}

PreprocStats load_preproc_stats(const std::string& path) {
    auto sections = read_container(path, kStatsMagic, kCacheVersion);
    return preproc_stats_from_bytes(sections.at("stats"));
}

}  // namespace flowdetect
