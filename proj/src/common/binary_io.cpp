#include "fontauth/common/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <zlib.h>

#include "fontauth/common/errors.hpp"

namespace fontauth {

static_assert(std::endian::native == std::endian::little,
              "container encoding assumes a little-endian host");

namespace {

template <typename T>
void put_le(Bytes& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> s) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
}

} // namespace

void ByteWriter::u16(std::uint16_t v) { put_le(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::raw(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::magic(std::string_view tag) {
    for (char c : tag) buf_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    magic(s);
}

void ByteWriter::short_str(std::string_view s) {
    if (s.size() > UINT16_MAX) throw InvalidArgument("identifier longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    magic(s);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    if (n > remaining()) throw FormatError("unexpected end of data");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }
std::uint16_t ByteReader::u16() { return get_le<std::uint16_t>(take(2)); }
std::uint32_t ByteReader::u32() { return get_le<std::uint32_t>(take(4)); }
std::uint64_t ByteReader::u64() { return get_le<std::uint64_t>(take(8)); }
float ByteReader::f32() { return std::bit_cast<float>(get_le<std::uint32_t>(take(4))); }
std::span<const std::uint8_t> ByteReader::raw(std::size_t n) { return take(n); }

std::string ByteReader::str() {
    const auto n = u32();
    auto s = take(n);
    return {s.begin(), s.end()};
}

std::string ByteReader::short_str() {
    const auto n = u16();
    auto s = take(n);
    return {s.begin(), s.end()};
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, data.data(), static_cast<uInt>(data.size()));
    return static_cast<std::uint32_t>(crc);
}

void append_crc(Bytes& bytes) {
    const auto crc = crc32(bytes);
    put_le(bytes, crc);
}

std::span<const std::uint8_t> open_container(std::span<const std::uint8_t> file,
                                             std::string_view magic,
                                             std::uint16_t expected_version) {
    const std::size_t header = magic.size() + 2;
    if (file.size() < magic.size() ||
        std::memcmp(file.data(), magic.data(), magic.size()) != 0)
        throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
    if (file.size() < header + 4) throw ChecksumError("file truncated");
    const auto version = get_le<std::uint16_t>(file.subspan(magic.size(), 2));
    if (version != expected_version)
        throw FormatError("unsupported format version " + std::to_string(version) + " (expected " +
                          std::to_string(expected_version) + ")");
    const auto body = file.first(file.size() - 4);
    const auto stored = get_le<std::uint32_t>(file.last(4));
    if (crc32(body) != stored) throw ChecksumError("CRC32 mismatch: file is truncated or corrupted");
    return body.subspan(header);
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
    return out.str();
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw DataError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace fontauth
