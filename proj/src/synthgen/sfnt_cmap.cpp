#include "fontauth/synthgen/sfnt_cmap.hpp"

#include <array>
#include <string>

#include "fontauth/common/errors.hpp"

namespace fontauth::synth {

namespace {

// sfnt tables are big-endian.
struct BigEndianView {
    std::span<const std::uint8_t> data;

    void need(std::size_t offset, std::size_t n) const {
        if (offset > data.size() || n > data.size() - offset)
            throw FontLoadError("font table extends past end of file");
    }
    std::uint16_t u16(std::size_t offset) const {
        need(offset, 2);
        return static_cast<std::uint16_t>(data[offset] << 8 | data[offset + 1]);
    }
    std::int16_t i16(std::size_t offset) const { return static_cast<std::int16_t>(u16(offset)); }
    std::uint32_t u32(std::size_t offset) const {
        need(offset, 4);
        return static_cast<std::uint32_t>(data[offset]) << 24 | static_cast<std::uint32_t>(data[offset + 1]) << 16 |
               static_cast<std::uint32_t>(data[offset + 2]) << 8 | data[offset + 3];
    }
};

constexpr std::uint32_t tag(const char (&t)[5]) {
    return static_cast<std::uint32_t>(t[0]) << 24 | static_cast<std::uint32_t>(t[1]) << 16 |
           static_cast<std::uint32_t>(t[2]) << 8 | static_cast<std::uint32_t>(t[3]);
}

std::size_t find_cmap(const BigEndianView& v) {
    const auto version = v.u32(0);
    if (version != 0x00010000 && version != tag("OTTO") && version != tag("true"))
        throw FontLoadError("not a TrueType/OpenType font");
    const auto num_tables = v.u16(4);
    for (std::size_t i = 0; i < num_tables; ++i) {
        const std::size_t rec = 12 + 16 * i;
        if (v.u32(rec) == tag("cmap")) return v.u32(rec + 8);
    }
    throw FontLoadError("font has no cmap table");
}

// Preference order: full-repertoire Unicode, BMP Unicode, then Mac Roman.
int subtable_rank(std::uint16_t platform, std::uint16_t encoding, std::uint16_t format) {
    if (format == 12 && (platform == 3 && encoding == 10)) return 0;
    if (format == 12 && platform == 0) return 1;
    if (format == 4 && platform == 3 && encoding == 1) return 2;
    if (format == 4 && platform == 0) return 3;
    if (format == 4 && platform == 3 && encoding == 0) return 4;
    if (format == 0 && platform == 1 && encoding == 0) return 5;
    return -1;
}

} // namespace

SfntCharMap SfntCharMap::load(const std::filesystem::path& path) {
    Bytes bytes;
    try {
        bytes = read_file(path);
    } catch (const DataError& e) {
        throw FontLoadError(e.what());
    }
    try {
        return parse(std::move(bytes));
    } catch (const FontLoadError& e) {
        throw FontLoadError(path.string() + ": " + e.what());
    }
}

SfntCharMap SfntCharMap::parse(Bytes file) {
    const BigEndianView v{file};
    const auto cmap = find_cmap(v);
    const auto count = v.u16(cmap + 2);
    int best_rank = -1;
    std::size_t best = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t rec = cmap + 4 + 8 * i;
        const auto platform = v.u16(rec);
        const auto encoding = v.u16(rec + 2);
        const std::size_t sub = cmap + v.u32(rec + 4);
        const int rank = subtable_rank(platform, encoding, v.u16(sub));
        if (rank >= 0 && (best_rank < 0 || rank < best_rank)) {
            best_rank = rank;
            best = sub;
        }
    }
    if (best_rank < 0) throw FontLoadError("no supported character map (formats 0/4/12)");
    return SfntCharMap(std::move(file), best);
}

std::optional<std::uint32_t> SfntCharMap::glyph_for(char32_t cp) const {
    const BigEndianView v{file_};
    const std::size_t sub = subtable_;
    std::uint32_t glyph = 0;
    switch (v.u16(sub)) {
    case 0:
        if (cp < 256) {
            v.need(sub + 6 + cp, 1);
            glyph = file_[sub + 6 + cp];
        }
        break;
    case 4: {
        if (cp > 0xFFFF) break;
        const std::size_t segs = v.u16(sub + 6) / 2;
        const std::size_t ends = sub + 14;
        const std::size_t starts = ends + 2 * segs + 2;
        const std::size_t deltas = starts + 2 * segs;
        const std::size_t range_offsets = deltas + 2 * segs;
        for (std::size_t s = 0; s < segs; ++s) {
            if (v.u16(ends + 2 * s) < cp) continue;
            const auto start = v.u16(starts + 2 * s);
            if (start > cp) break;
            const auto delta = v.i16(deltas + 2 * s);
            const std::size_t ro_pos = range_offsets + 2 * s;
            const auto ro = v.u16(ro_pos);
            if (ro == 0) {
                glyph = static_cast<std::uint16_t>(cp + static_cast<std::uint32_t>(delta));
            } else {
                const auto g = v.u16(ro_pos + ro + 2 * (cp - start));
                glyph = g == 0 ? 0 : static_cast<std::uint16_t>(g + delta);
            }
            break;
        }
        break;
    }
    case 12: {
        const auto groups = v.u32(sub + 12);
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t rec = sub + 16 + 12 * g;
            const auto first = v.u32(rec);
            const auto last = v.u32(rec + 4);
            if (cp >= first && cp <= last) {
                glyph = v.u32(rec + 8) + (cp - first);
                break;
            }
        }
        break;
    }
    default: break;
    }
    if (glyph == 0) return std::nullopt;
    return glyph;
}

} // namespace fontauth::synth
