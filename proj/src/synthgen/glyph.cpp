#include "fontauth/synthgen/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fontauth/common/errors.hpp"

namespace fontauth::synth {

float GlyphImage::min() const { return *std::min_element(pixels.begin(), pixels.end()); }
float GlyphImage::max() const { return *std::max_element(pixels.begin(), pixels.end()); }

double GlyphImage::mean() const {
    return std::accumulate(pixels.begin(), pixels.end(), 0.0) / kGlyphPixels;
}

void check_intensities(const GlyphImage& image) {
    for (float v : image.pixels)
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw InvalidArgument("glyph intensity outside [0,1]: " + std::to_string(v));
}

std::uint8_t quantize_level(float v) {
    const float clamped = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

float dequantize_level(std::uint8_t level) { return static_cast<float>(level) / 255.0f; }

GlyphImage quantized(const GlyphImage& image) {
    GlyphImage out;
    std::transform(image.pixels.begin(), image.pixels.end(), out.pixels.begin(),
                   [](float v) { return dequantize_level(quantize_level(v)); });
    return out;
}

} // namespace fontauth::synth
