#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowdetect/errors.hpp"

namespace flowdetect {

// Little-endian binary encoding shared by the checkpoint and window-cache
// file formats. Doubles are stored as their raw IEEE-754 bits, so values
// round-trip bit-exactly.

class ByteWriter {
public:
    void put_u8(std::uint8_t v);
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i64(std::int64_t v);
    void put_f64(double v);
    void put_string(const std::string& s);
    void put_bytes(const void* data, std::size_t size);
    void put_f64_array(const std::vector<double>& v);
    void put_u8_array(const std::vector<std::uint8_t>& v);

    const std::string& bytes() const { return out_; }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

/// Bounds-checked reader; any read past the end throws IntegrityError.
class ByteReader {
public:
    explicit ByteReader(const std::string& bytes) : data_(bytes) {}

    std::uint8_t get_u8();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    std::int64_t get_i64();
    double get_f64();
    std::string get_string();
    std::vector<double> get_f64_array();
    std::vector<std::uint8_t> get_u8_array();

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const;

    const std::string& data_;
    std::size_t pos_ = 0;
};

/// CRC-32 (IEEE, polynomial 0xEDB88320).
std::uint32_t crc32(const void* data, std::size_t size);

/// Writes `bytes` to `path` via a temporary file plus rename, so a failed
/// command never leaves a partially written file behind.
void write_file_atomic(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);

// Container file layout:
//   magic (8 bytes) | version u32 | payload_len u64 | payload | crc32(payload)
// The payload starts with a section manifest (count, then name + byte length
// per section) followed by the section blobs in manifest order.
using Sections = std::vector<std::pair<std::string, std::string>>;

void write_container(const std::string& path, const char magic[8], std::uint32_t version,
                     const Sections& sections);

/// Returns the sections by name. Throws IntegrityError on a wrong magic,
/// truncation, or checksum mismatch, and reports an unsupported version
/// explicitly.
std::map<std::string, std::string> read_container(const std::string& path, const char magic[8],
                                                  std::uint32_t expected_version);

}  // namespace flowdetect
