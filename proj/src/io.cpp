#include "io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace svq {

void ByteWriter::u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
}

void ByteReader::corrupt(const std::string& why) const { corrupt_at(pos_, why); }

void ByteReader::corrupt_at(std::size_t offset, const std::string& why) const {
    fail(ErrorKind::Format, "corrupt " + what_ + " at offset " + std::to_string(offset) + ": " + why);
}

void ByteReader::need(std::size_t n) {
    if (remaining() < n)
        corrupt("need " + std::to_string(n) + " bytes, only " + std::to_string(remaining()) + " left");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(data_[pos_++]) << (8 * i));
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

float ByteReader::f32() {
    const std::size_t at = pos_;
    const float v = std::bit_cast<float>(u32());
    if (!std::isfinite(v)) corrupt_at(at, "non-finite float value");
    return v;
}

std::string_view ByteReader::bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::string ByteReader::str() {
    const std::uint32_t n = u32();
    return std::string(bytes(n));
}

void ByteReader::expect_magic(std::string_view m) {
    const std::size_t at = pos_;
    if (remaining() < m.size() || data_.substr(pos_, m.size()) != m)
        corrupt_at(at, "bad magic, expected \"" + std::string(m) + "\"");
    pos_ += m.size();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open '" + tmp + "' for writing: " + std::strerror(errno));
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) fail(ErrorKind::Io, "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading: " + std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string peek_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading: " + std::strerror(errno));
    char buf[4];
    in.read(buf, 4);
    if (in.gcount() < 4) return {};
    return std::string(buf, 4);
}

}  // namespace svq
