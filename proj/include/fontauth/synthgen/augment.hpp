#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "fontauth/synthgen/glyph.hpp"

namespace fontauth::synth {

/// Capture-degradation parameters. Stages run in this order: projective
/// corner jitter, downscale/upscale (resolution loss), Gaussian blur,
/// additive Gaussian noise, brightness/contrast jitter. A stage whose
/// magnitude is zero is skipped, so the all-zero config is the identity.
struct AugmentationConfig {
    /// Max displacement of each image corner, px.
    double corner_jitter = 0.0;
    /// Fraction of resolution lost before upscaling back: the image is
    /// resized by (1 - loss), loss drawn from [min, max]. Bounded by 0.9.
    double resolution_loss_min = 0.0;
    double resolution_loss_max = 0.0;
    double blur_sigma_min = 0.0;
    double blur_sigma_max = 0.0;
    double noise_sigma_min = 0.0;
    double noise_sigma_max = 0.0;
    /// Additive shift drawn from [-brightness_jitter, +brightness_jitter].
    double brightness_jitter = 0.0;
    /// Contrast gain drawn from [1 - contrast_jitter, 1 + contrast_jitter].
    double contrast_jitter = 0.0;

    double p_projective = 1.0;
    double p_resolution = 1.0;
    double p_blur = 1.0;
    double p_noise = 1.0;
    double p_photometric = 1.0;

    /// The shipped stack: jitter <= 2 px, ~60% rescale, blur sigma in [0,1],
    /// noise sigma in [0,0.08], +-15% brightness/contrast.
    static AugmentationConfig capture_defaults();
    static AugmentationConfig identity() { return {}; }

    /// All ranges non-negative and ordered, probabilities in [0,1].
    void validate() const;

    friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

void to_json(nlohmann::json& j, const AugmentationConfig& cfg);
void from_json(const nlohmann::json& j, AugmentationConfig& cfg);

/// Pure function of (image, cfg, seed); output clamped to [0,1].
GlyphImage augment(const GlyphImage& image, const AugmentationConfig& cfg, std::uint64_t seed);

} // namespace fontauth::synth
