#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fontauth {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian serializer for the toolkit's binary containers.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void raw(std::span<const std::uint8_t> bytes);
    void magic(std::string_view tag);
    /// u32 length prefix followed by the bytes.
    void str(std::string_view s);
    /// u16 length prefix; used for short identifiers.
    void short_str(std::string_view s);

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Bounds-checked little-endian reader. Running past the end raises
/// FormatError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::span<const std::uint8_t> raw(std::size_t n);
    std::string str();
    std::string short_str();

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

/// Appends the CRC32 of everything written so far.
void append_crc(Bytes& bytes);

/// Validates a container laid out as: 4-byte magic, u16 version, payload,
/// trailing CRC32. Checks run in that order so a foreign file reports a
/// format error and a damaged one reports a checksum error. Returns the span
/// between the version field and the CRC.
std::span<const std::uint8_t> open_container(std::span<const std::uint8_t> file,
                                             std::string_view magic,
                                             std::uint16_t expected_version);

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target, so a
/// failed run never leaves a partial output behind.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

} // namespace fontauth
