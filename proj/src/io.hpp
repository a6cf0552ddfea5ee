#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svq {

// Little-endian byte sink for the binary artifact formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f32_from(double v) { f32(static_cast<float>(v)); }
    void bytes(std::string_view s) { buf_.append(s); }
    void magic(std::string_view m) { bytes(m); }
    // u32 length prefix + bytes.
    void str(std::string_view s);

    const std::string& data() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

// Bounds-checked reader; every failure names the byte offset where it happened.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string_view bytes(std::size_t n);
    std::string str();
    void expect_magic(std::string_view m);

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }
    [[noreturn]] void corrupt(const std::string& why) const;
    [[noreturn]] void corrupt_at(std::size_t offset, const std::string& why) const;

private:
    void need(std::size_t n);

    std::string_view data_;
    std::string what_;
    std::size_t pos_ = 0;
};

// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// First four bytes of a file, or empty if shorter.
std::string peek_magic(const std::string& path);

}  // namespace svq
