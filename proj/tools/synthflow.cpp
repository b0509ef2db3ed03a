#include "synthflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "flowdetect/errors.hpp"
#include "flowdetect/tensor.hpp"

namespace flowdetect::synth {

namespace {

enum class Kind { Benign, Recon, Ddos, Dos, Theft };

const char* attack_name(Kind k) {
    switch (k) {
        case Kind::Benign: return "Benign";
        case Kind::Recon: return "Reconnaissance";
        case Kind::Ddos: return "DDoS";
        case Kind::Dos: return "DoS";
        case Kind::Theft: return "Theft";
    }
    return "Benign";
}

struct Row {
    const char* src;
    int src_port;
    const char* dst;
    int dst_port;
    int protocol;
    double l7;
    long in_bytes;
    long out_bytes;
    long in_pkts;
    long out_pkts;
    int flags;
    long duration;
    int label;
    const char* attack;
};

// Shifted geometric burst length: min + Geom(mean extra). Benign bursts are
// short (mean 12 rows), attack campaigns long (mean ~508), which puts the
// stationary benign share at about 2.31%.
std::size_t burst_length(Rng& rng, std::size_t min_len, double mean_extra) {
    const double u = std::max(rng.next_double(), 1e-12);
    const double extra = std::floor(std::log(u) / std::log(1.0 - 1.0 / mean_extra));
    return min_len + static_cast<std::size_t>(std::min(extra, 1e7));
}

long lognormal(Rng& rng, double median, double sigma, long lo, long hi) {
    const double v = median * std::exp(rng.normal(0.0, sigma));
    return std::clamp(static_cast<long>(std::llround(v)), lo, hi);
}

int ephemeral_port(Rng& rng) {
    return 32768 + static_cast<int>(rng.next_below(28232));
}

const char* kDevices[] = {"192.168.100.3", "192.168.100.5", "192.168.100.7",
                          "192.168.100.27", "192.168.100.46", "192.168.100.55"};
const char* kAttackers[] = {"192.168.100.147", "192.168.100.148", "192.168.100.149",
                            "192.168.100.150"};
const char* kExternal[] = {"8.8.8.8", "52.28.91.10", "34.120.5.77", "13.107.42.14"};

const char* pick(Rng& rng, const char* const* pool, std::size_t n) {
    return pool[rng.next_below(n)];
}

Row benign_row(Rng& rng) {
    Row r{};
    r.label = 0;
    r.attack = attack_name(Kind::Benign);
    r.src = pick(rng, kDevices, 6);
    r.src_port = ephemeral_port(rng);
    const double u = rng.next_double();
    if (u < 0.37) {  // DNS lookup
        r.dst = "8.8.8.8";
        r.dst_port = 53;
        r.protocol = 17;
        r.l7 = 5.0;
        r.in_bytes = lognormal(rng, 75, 0.3, 40, 400);
        r.out_bytes = lognormal(rng, 160, 0.4, 60, 1200);
        r.in_pkts = 1;
        r.out_pkts = 1;
        r.flags = 0;
        r.duration = lognormal(rng, 40, 0.8, 1, 2000);
    } else if (u < 0.68) {  // HTTP fetch
        r.dst = pick(rng, kExternal, 4);
        r.dst_port = 80;
        r.protocol = 6;
        r.l7 = 7.0;
        r.in_bytes = lognormal(rng, 450, 0.6, 120, 20000);
        r.out_bytes = lognormal(rng, 3000, 1.0, 200, 200000);
        r.in_pkts = lognormal(rng, 6, 0.5, 2, 100);
        r.out_pkts = lognormal(rng, 7, 0.5, 2, 200);
        r.flags = 27;
        r.duration = lognormal(rng, 300, 1.0, 10, 60000);
    } else if (u < 0.84) {  // TLS session
        r.dst = pick(rng, kExternal, 4);
        r.dst_port = 443;
        r.protocol = 6;
        r.l7 = 91.0;
        r.in_bytes = lognormal(rng, 900, 0.7, 200, 40000);
        r.out_bytes = lognormal(rng, 4500, 1.0, 400, 300000);
        r.in_pkts = lognormal(rng, 8, 0.5, 2, 150);
        r.out_pkts = lognormal(rng, 9, 0.5, 2, 250);
        r.flags = 27;
        r.duration = lognormal(rng, 500, 1.0, 20, 80000);
    } else if (u < 0.90) {  // SSH keep-alive sessions
        r.dst = pick(rng, kDevices, 6);
        r.dst_port = 22;
        r.protocol = 6;
        r.l7 = 92.0;
        r.in_bytes = lognormal(rng, 1500, 0.8, 300, 60000);
        r.out_bytes = lognormal(rng, 2000, 0.8, 300, 60000);
        r.in_pkts = lognormal(rng, 15, 0.6, 3, 300);
        r.out_pkts = lognormal(rng, 15, 0.6, 3, 300);
        r.flags = 27;
        r.duration = lognormal(rng, 5000, 1.0, 100, 120000);
    } else if (u < 0.97) {  // NTP sync
        r.dst = "13.107.42.14";
        r.dst_port = 123;
        r.protocol = 17;
        r.l7 = 9.0;
        r.in_bytes = lognormal(rng, 90, 0.1, 76, 120);
        r.out_bytes = lognormal(rng, 90, 0.1, 76, 120);
        r.in_pkts = 1;
        r.out_pkts = 1;
        r.flags = 0;
        r.duration = lognormal(rng, 10, 0.5, 1, 200);
    } else {  // failed or reset connection; deliberately scan-like
        r.dst = pick(rng, kExternal, 4);
        r.dst_port = rng.next_double() < 0.5 ? 80 : 443;
        r.protocol = 6;
        r.l7 = 0.0;
        r.in_bytes = lognormal(rng, 60, 0.3, 40, 200);
        r.out_bytes = lognormal(rng, 44, 0.2, 40, 120);
        r.in_pkts = 1;
        r.out_pkts = 1;
        r.flags = rng.next_double() < 0.5 ? 2 : 6;
        r.duration = lognormal(rng, 8, 0.7, 0, 150);
    }
    return r;
}

Row attack_row(Rng& rng, Kind kind, std::size_t& scan_cursor) {
    Row r{};
    r.label = 1;
    r.attack = attack_name(kind);
    r.src = pick(rng, kAttackers, 4);
    r.src_port = ephemeral_port(rng);
    r.dst = pick(rng, kDevices, 6);
    switch (kind) {
        case Kind::Recon: {
            r.dst_port = static_cast<int>(scan_cursor++ % 1024) + 1;
            const bool udp = rng.next_double() < 0.1;
            r.protocol = udp ? 17 : 6;
            const bool service_probe = rng.next_double() < 0.003;
            if (service_probe) {  // completed probe, close to small benign HTTP
                r.l7 = 7.0;
                r.in_bytes = lognormal(rng, 180, 0.4, 60, 2000);
                r.out_bytes = lognormal(rng, 250, 0.5, 60, 4000);
                r.in_pkts = lognormal(rng, 3, 0.4, 1, 20);
                r.out_pkts = lognormal(rng, 3, 0.4, 1, 20);
                r.flags = 27;
                r.duration = lognormal(rng, 60, 0.8, 1, 4000);
            } else {
                r.l7 = 0.0;
                r.in_bytes = lognormal(rng, 44, 0.15, 40, 120);
                r.out_bytes = rng.next_double() < 0.7 ? 0 : lognormal(rng, 40, 0.2, 40, 120);
                r.in_pkts = 1 + static_cast<long>(rng.next_below(2));
                r.out_pkts = r.out_bytes > 0 ? 1 : 0;
                r.flags = rng.next_double() < 0.6 ? 2 : 6;
                r.duration = lognormal(rng, 2, 0.7, 0, 50);
            }
            break;
        }
        case Kind::Ddos: {
            const bool udp = rng.next_double() < 0.5;
            r.protocol = udp ? 17 : 6;
            r.dst_port = 80;
            r.l7 = 0.0;
            r.in_bytes = lognormal(rng, 120, 0.3, 40, 1000);
            r.out_bytes = 0;
            r.in_pkts = lognormal(rng, 2, 0.4, 1, 30);
            r.out_pkts = 0;
            r.flags = udp ? 0 : 2;
            r.duration = lognormal(rng, 5, 0.8, 0, 300);
            break;
        }
        case Kind::Dos: {
            r.protocol = 6;
            r.dst_port = 80;
            const bool http_flood = rng.next_double() < 0.5;
            r.l7 = http_flood ? 7.0 : 0.0;
            r.in_bytes = lognormal(rng, 250, 0.5, 60, 4000);
            r.out_bytes = rng.next_double() < 0.4 ? 0 : lognormal(rng, 120, 0.8, 40, 4000);
            r.in_pkts = lognormal(rng, 3, 0.5, 1, 60);
            r.out_pkts = r.out_bytes > 0 ? lognormal(rng, 1, 0.4, 1, 20) : 0;
            const double f = rng.next_double();
            r.flags = f < 0.55 ? 2 : (f < 0.9 ? 6 : 27);
            r.duration = lognormal(rng, 15, 0.9, 0, 2000);
            break;
        }
        case Kind::Theft: {
            r.protocol = 6;
            r.dst = pick(rng, kExternal, 4);
            r.dst_port = 21;
            r.l7 = 21.0;
            r.in_bytes = lognormal(rng, 600, 0.6, 100, 20000);
            r.out_bytes = lognormal(rng, 200000, 1.0, 5000, 5000000);
            r.in_pkts = lognormal(rng, 10, 0.5, 2, 200);
            r.out_pkts = lognormal(rng, 180, 0.8, 10, 5000);
            r.flags = 27;
            r.duration = lognormal(rng, 20000, 0.9, 500, 300000);
            break;
        }
        case Kind::Benign: break;
    }
    return r;
}

Kind pick_campaign(Rng& rng) {
    const double u = rng.next_double();
    if (u < 0.803) return Kind::Recon;
    if (u < 0.900) return Kind::Ddos;
    if (u < 0.9966) return Kind::Dos;
    return Kind::Theft;
}

void append_row(std::string& out, const Row& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%d,%.1f,%ld,%ld,%ld,%ld,%d,%ld,%d,%s\n", r.src,
                  r.src_port, r.dst, r.dst_port, r.protocol, r.l7, r.in_bytes, r.out_bytes,
                  r.in_pkts, r.out_pkts, r.flags, r.duration, r.label, r.attack);
    out += buf;
}

}  // namespace

void write_synthetic_csv(const std::string& path, const SynthConfig& config) {
    if (config.rows == 0) throw ConfigError("synthetic corpus needs at least one row");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path + " for writing");

    std::string chunk;
    chunk.reserve(1 << 20);
    chunk +=
        "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,PROTOCOL,L7_PROTO,IN_BYTES,"
        "OUT_BYTES,IN_PKTS,OUT_PKTS,TCP_FLAGS,FLOW_DURATION_MILLISECONDS,Label,Attack\n";

    Rng rng(config.seed);
    std::size_t written = 0;
    std::size_t scan_cursor = 0;
    bool attack_phase = false;  // start benign so a header-adjacent sample shows both classes
    while (written < config.rows) {
        if (attack_phase) {
            const Kind kind = pick_campaign(rng);
            const std::size_t len = std::min(burst_length(rng, 20, 488.0), config.rows - written);
            for (std::size_t i = 0; i < len; ++i) append_row(chunk, attack_row(rng, kind, scan_cursor));
            written += len;
        } else {
            const std::size_t len = std::min(burst_length(rng, 4, 9.0), config.rows - written);
            for (std::size_t i = 0; i < len; ++i) append_row(chunk, benign_row(rng));
            written += len;
        }
        attack_phase = !attack_phase;
        if (chunk.size() > (1 << 20) - (1 << 10)) {
            out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
            chunk.clear();
        }
    }
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    if (!out) throw DataError("short write to " + path);
}

}  // namespace flowdetect::synth
