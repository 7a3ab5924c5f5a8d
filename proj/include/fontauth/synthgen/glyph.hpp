#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fontauth::synth {

inline constexpr int kGlyphWidth = 15;
inline constexpr int kGlyphHeight = 19;
inline constexpr int kGlyphPixels = kGlyphWidth * kGlyphHeight;

/// Characters of the shipped alphabet; char_index i maps to kDigits[i].
inline constexpr std::string_view kDigits = "0123456789";

/// Fixed 15x19 grayscale character image, row-major, intensities in [0,1].
struct GlyphImage {
    std::array<float, kGlyphPixels> pixels{};

    float& at(int row, int col) { return pixels[static_cast<std::size_t>(row * kGlyphWidth + col)]; }
    float at(int row, int col) const { return pixels[static_cast<std::size_t>(row * kGlyphWidth + col)]; }

    float min() const;
    float max() const;
    double mean() const;

    friend bool operator==(const GlyphImage&, const GlyphImage&) = default;
};

/// Throws InvalidArgument if any pixel is non-finite or outside [0,1].
void check_intensities(const GlyphImage& image);

/// Intensity stored on disk: round(v * 255).
std::uint8_t quantize_level(float v);
float dequantize_level(std::uint8_t level);

/// Snaps every pixel onto the 8-bit grid so in-memory and on-disk values agree.
GlyphImage quantized(const GlyphImage& image);

struct GlyphSample {
    GlyphImage image;
    int char_index = 0;
    std::string font_id;
    bool forged = false;

    friend bool operator==(const GlyphSample&, const GlyphSample&) = default;
};

} // namespace fontauth::synth
