#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "fontauth/common/binary_io.hpp"

namespace fontauth::synth {

/// Unicode character map of a TrueType/OpenType font file. Only the `cmap`
/// table is parsed (formats 0, 4 and 12), which is enough to tell whether a
/// font can render a given character before handing it to the rasterizer.
class SfntCharMap {
public:
    /// Throws FontLoadError if the file is not an sfnt font or has no usable
    /// character map.
    static SfntCharMap load(const std::filesystem::path& path);
    static SfntCharMap parse(Bytes file);

    /// Glyph id for a code point, or nullopt when the font maps it to .notdef.
    std::optional<std::uint32_t> glyph_for(char32_t code_point) const;
    bool contains(char32_t code_point) const { return glyph_for(code_point).has_value(); }

private:
    SfntCharMap(Bytes file, std::size_t subtable) : file_(std::move(file)), subtable_(subtable) {}

    Bytes file_;
    std::size_t subtable_;
};

} // namespace fontauth::synth
