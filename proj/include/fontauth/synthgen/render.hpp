#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fontauth/synthgen/font_registry.hpp"
#include "fontauth/synthgen/glyph.hpp"

namespace fontauth::synth {

enum class Polarity { dark_on_light, light_on_dark };

struct RenderConfig {
    int width = kGlyphWidth;
    int height = kGlyphHeight;
    /// Pixel-size search range for the rasterizer.
    int min_pixel_size = 4;
    int max_pixel_size = 64;
    /// Minimum blank margin around the ink box.
    int padding = 1;
    Polarity polarity = Polarity::dark_on_light;
    bool antialias = true;

    /// Rejects any geometry other than 15x19 and nonsensical ranges.
    void validate() const;

    friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

void to_json(nlohmann::json& j, const RenderConfig& cfg);
void from_json(const nlohmann::json& j, RenderConfig& cfg);

/// Character drawn for a class index (digits for the shipped alphabet).
char32_t alphabet_char(int char_index, std::string_view alphabet = kDigits);

/// Rasterizes single characters into 15x19 images. The ink box is centered
/// (integer offsets, extra pixel to the right/bottom) and the largest pixel
/// size whose ink fits inside the padded frame is found by binary search.
///
/// Holds one rasterizer per font file; not safe for concurrent use.
class GlyphRenderer {
public:
    GlyphRenderer();
    ~GlyphRenderer();
    GlyphRenderer(GlyphRenderer&&) noexcept;
    GlyphRenderer& operator=(GlyphRenderer&&) noexcept;

    /// Throws MissingGlyph, FontLoadError, or InvalidArgument (bad config).
    GlyphImage render(const FontAsset& font, int char_index, const RenderConfig& cfg,
                      std::string_view alphabet = kDigits);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around GlyphRenderer.
GlyphImage render_glyph(const FontAsset& font, int char_index, const RenderConfig& cfg,
                        std::string_view alphabet = kDigits);

} // namespace fontauth::synth
