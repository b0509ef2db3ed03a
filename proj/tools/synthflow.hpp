#pragma once

#include <cstdint>
#include <string>

namespace flowdetect::synth {

/// Deterministic NetFlow-style corpus in the standard 14-column CSV schema.
///
/// Traffic alternates between benign and attack bursts (one attack campaign
/// per burst: reconnaissance, DDoS, DoS or data theft) so that consecutive
/// rows correlate the way flow logs do. Roughly 2.31% of rows are benign,
/// matching the class balance of the public IoT benchmark this format comes
/// from. The same (rows, seed) pair always produces byte-identical output.
struct SynthConfig {
    std::size_t rows = 600100;
    std::uint64_t seed = 99;
};

void write_synthetic_csv(const std::string& path, const SynthConfig& config);

}  // namespace flowdetect::synth
