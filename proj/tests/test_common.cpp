#include <doctest.h>

#include <filesystem>
#include <set>
#include <string>

#include "fontauth/common/binary_io.hpp"
#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"

using namespace fontauth;

namespace {

Bytes as_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

Bytes make_container(std::string_view magic, std::uint16_t version, std::string_view payload) {
    ByteWriter w;
    w.magic(magic);
    w.u16(version);
    w.raw(as_bytes(payload));
    auto b = w.take();
    append_crc(b);
    return b;
}

} // namespace

TEST_CASE("crc32 and sha256 match their reference check values") {
    CHECK(crc32(as_bytes("123456789")) == 0xCBF43926u);
    CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("byte writer and reader agree, little-endian") {
    ByteWriter w;
    w.u8(7);
    w.u16(0x1234);
    w.u32(0xA1B2C3D4u);
    w.u64(0x0102030405060708ull);
    w.f32(-1.5f);
    w.str("hello");
    w.short_str("id");
    const auto b = w.take();
    CHECK(b[1] == 0x34);
    CHECK(b[2] == 0x12);

    ByteReader r(b);
    CHECK(r.u8() == 7);
    CHECK(r.u16() == 0x1234);
    CHECK(r.u32() == 0xA1B2C3D4u);
    CHECK(r.u64() == 0x0102030405060708ull);
    CHECK(r.f32() == -1.5f);
    CHECK(r.str() == "hello");
    CHECK(r.short_str() == "id");
    CHECK(r.remaining() == 0);
    CHECK_THROWS_AS(r.u8(), FormatError);
}

TEST_CASE("container checks magic, then version, then checksum") {
    const auto good = make_container("TEST", 3, "payload");
    const auto payload = open_container(good, "TEST", 3);
    CHECK(std::string(payload.begin(), payload.end()) == "payload");

    CHECK_THROWS_AS(open_container(good, "ELSE", 3), FormatError);
    CHECK_THROWS_AS(open_container(good, "TEST", 4), FormatError);

    auto flipped = good;
    flipped[8] ^= 0x01;
    CHECK_THROWS_AS(open_container(flipped, "TEST", 3), ChecksumError);

    const Bytes truncated(good.begin(), good.end() - 3);
    CHECK_THROWS_AS(open_container(truncated, "TEST", 3), ChecksumError);
    CHECK_THROWS_AS(open_container(Bytes{'T', 'E'}, "TEST", 3), FormatError);
}

TEST_CASE("atomic write leaves no temporary behind") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fontauth_test_common";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto path = dir / "out.bin";
    write_file_atomic(path, std::string_view("first"));
    write_file_atomic(path, std::string_view("second"));
    const auto back = read_file(path);
    CHECK(std::string(back.begin(), back.end()) == "second");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    CHECK_THROWS_AS(read_file(dir / "missing"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("rng is the standard mt19937_64 stream") {
    // The standard fixes the 10000th output of a default-seeded engine.
    Rng rng(5489u);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next_u64();
    CHECK(v == 9981545732273789042ull);
}

TEST_CASE("rng helpers stay in range and are reproducible") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = a.below(7);
        CHECK(k == b.below(7));
        CHECK(k < 7);
    }
    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[static_cast<std::size_t>(i)] = i;
    auto w = v;
    Rng(3).shuffle(std::span<int>(v));
    Rng(3).shuffle(std::span<int>(w));
    CHECK(v == w);
    CHECK(std::set<int>(v.begin(), v.end()).size() == 20);
}

TEST_CASE("normal draws have unit variance") {
    Rng rng(9);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("derived seeds separate streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(77, s));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
