#include "flowdetect/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace flowdetect {

void ByteWriter::put_u8(std::uint8_t v) {
    out_.push_back(static_cast<char>(v));
}

void ByteWriter::put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_i64(std::int64_t v) {
    put_u64(static_cast<std::uint64_t>(v));
}

void ByteWriter::put_f64(double v) {
    put_u64(std::bit_cast<std::uint64_t>(v));
}

void ByteWriter::put_string(const std::string& s) {
    put_u64(s.size());
    out_.append(s);
}

void ByteWriter::put_bytes(const void* data, std::size_t size) {
    out_.append(static_cast<const char*>(data), size);
}

void ByteWriter::put_f64_array(const std::vector<double>& v) {
    put_u64(v.size());
    for (double x : v) put_f64(x);
}

void ByteWriter::put_u8_array(const std::vector<std::uint8_t>& v) {
    put_u64(v.size());
    for (std::uint8_t x : v) put_u8(x);
}

void ByteReader::need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw IntegrityError("truncated data while decoding");
}

std::uint8_t ByteReader::get_u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

std::uint64_t ByteReader::get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

std::int64_t ByteReader::get_i64() {
    return static_cast<std::int64_t>(get_u64());
}

double ByteReader::get_f64() {
    return std::bit_cast<double>(get_u64());
}

std::string ByteReader::get_string() {
    const std::uint64_t n = get_u64();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::vector<double> ByteReader::get_f64_array() {
    const std::uint64_t n = get_u64();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = get_f64();
    return v;
}

std::vector<std::uint8_t> ByteReader::get_u8_array() {
    const std::uint64_t n = get_u64();
    need(n);
    std::vector<std::uint8_t> v(n);
    for (auto& x : v) x = get_u8();
    return v;
}

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t size) {
    static const auto table = make_crc_table();
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IntegrityError("cannot open " + tmp + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw IntegrityError("short write to " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IntegrityError("cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_container(const std::string& path, const char magic[8], std::uint32_t version,
                     const Sections& sections) {
    ByteWriter payload;
    payload.put_u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, blob] : sections) {
        payload.put_string(name);
        payload.put_u64(blob.size());
    }
    for (const auto& [name, blob] : sections) payload.put_bytes(blob.data(), blob.size());

    ByteWriter file;
    file.put_bytes(magic, 8);
    file.put_u32(version);
    file.put_u64(payload.bytes().size());
    file.put_bytes(payload.bytes().data(), payload.bytes().size());
    file.put_u32(crc32(payload.bytes().data(), payload.bytes().size()));
    write_file_atomic(path, file.bytes());
}

std::map<std::string, std::string> read_container(const std::string& path, const char magic[8],
                                                  std::uint32_t expected_version) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 8 + 4 + 8 + 4) throw IntegrityError(path + ": file too short");
    if (std::memcmp(bytes.data(), magic, 8) != 0) {
        throw IntegrityError(path + ": wrong file magic (expected " + std::string(magic, 8) + ")");
    }
    ByteReader header(bytes);
    for (int i = 0; i < 8; ++i) header.get_u8();
    const std::uint32_t version = header.get_u32();
    if (version != expected_version) {
        throw IntegrityError(path + ": unsupported format version " + std::to_string(version) +
                             " (this build reads version " + std::to_string(expected_version) + ")");
    }
    const std::uint64_t payload_len = header.get_u64();
    const std::size_t payload_off = 8 + 4 + 8;
    if (bytes.size() != payload_off + payload_len + 4) {
        throw IntegrityError(path + ": truncated or oversized payload");
    }
    const std::string payload = bytes.substr(payload_off, payload_len);
    const std::string tail = bytes.substr(payload_off + payload_len, 4);
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(tail[i])) << (8 * i);
    if (crc32(payload.data(), payload.size()) != stored_crc) {
        throw IntegrityError(path + ": checksum mismatch, file is corrupt");
    }

    ByteReader reader(payload);
    const std::uint32_t count = reader.get_u32();
    std::vector<std::pair<std::string, std::uint64_t>> manifest;
    manifest.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = reader.get_string();
        const std::uint64_t size = reader.get_u64();
        manifest.emplace_back(std::move(name), size);
    }
    std::map<std::string, std::string> out;
    std::size_t off = 0;
    std::size_t manifest_bytes = 4;
    for (const auto& [name, size] : manifest) manifest_bytes += 8 + name.size() + 8;
    for (const auto& [name, size] : manifest) {
        if (manifest_bytes + off + size > payload.size()) {
            throw IntegrityError(path + ": section " + name + " overruns the payload");
        }
        out[name] = payload.substr(manifest_bytes + off, size);
        off += size;
    }
    return out;
}

}  // namespace flowdetect
