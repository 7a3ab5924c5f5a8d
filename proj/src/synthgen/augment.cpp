#include "fontauth/synthgen/augment.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"

namespace fontauth::synth {

AugmentationConfig AugmentationConfig::capture_defaults() {
    AugmentationConfig cfg;
    cfg.corner_jitter = 0.5;
    cfg.resolution_loss_min = 0.35;
    cfg.resolution_loss_max = 0.45;
    cfg.blur_sigma_min = 0.0;
    cfg.blur_sigma_max = 0.5;
    cfg.noise_sigma_min = 0.0;
    cfg.noise_sigma_max = 0.03;
    cfg.brightness_jitter = 0.15;
    cfg.contrast_jitter = 0.15;
    cfg.p_projective = 0.9;
    cfg.p_resolution = 0.5;
    cfg.p_blur = 0.4;
    cfg.p_noise = 0.9;
    cfg.p_photometric = 0.9;
    return cfg;
}

void AugmentationConfig::validate() const {
    auto range = [](double lo, double hi, double cap, const char* name) {
        if (!(lo >= 0.0) || !(hi >= lo) || !(hi <= cap))
            throw InvalidArgument(std::string("augmentation range out of bounds: ") + name);
    };
    range(0.0, corner_jitter, 4.0, "corner_jitter");
    range(resolution_loss_min, resolution_loss_max, 0.9, "resolution_loss");
    range(blur_sigma_min, blur_sigma_max, 5.0, "blur_sigma");
    range(noise_sigma_min, noise_sigma_max, 1.0, "noise_sigma");
    range(0.0, brightness_jitter, 1.0, "brightness_jitter");
    range(0.0, contrast_jitter, 1.0, "contrast_jitter");
    for (double p : {p_projective, p_resolution, p_blur, p_noise, p_photometric})
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("augmentation probability outside [0,1]");
}

void to_json(nlohmann::json& j, const AugmentationConfig& c) {
    j = {{"corner_jitter", c.corner_jitter},
         {"resolution_loss_min", c.resolution_loss_min},
         {"resolution_loss_max", c.resolution_loss_max},
         {"blur_sigma_min", c.blur_sigma_min},
         {"blur_sigma_max", c.blur_sigma_max},
         {"noise_sigma_min", c.noise_sigma_min},
         {"noise_sigma_max", c.noise_sigma_max},
         {"brightness_jitter", c.brightness_jitter},
         {"contrast_jitter", c.contrast_jitter},
         {"p_projective", c.p_projective},
         {"p_resolution", c.p_resolution},
         {"p_blur", c.p_blur},
         {"p_noise", c.p_noise},
         {"p_photometric", c.p_photometric}};
}

void from_json(const nlohmann::json& j, AugmentationConfig& c) {
    const auto d = AugmentationConfig::capture_defaults();
    c.corner_jitter = j.value("corner_jitter", d.corner_jitter);
    c.resolution_loss_min = j.value("resolution_loss_min", d.resolution_loss_min);
    c.resolution_loss_max = j.value("resolution_loss_max", d.resolution_loss_max);
    c.blur_sigma_min = j.value("blur_sigma_min", d.blur_sigma_min);
    c.blur_sigma_max = j.value("blur_sigma_max", d.blur_sigma_max);
    c.noise_sigma_min = j.value("noise_sigma_min", d.noise_sigma_min);
    c.noise_sigma_max = j.value("noise_sigma_max", d.noise_sigma_max);
    c.brightness_jitter = j.value("brightness_jitter", d.brightness_jitter);
    c.contrast_jitter = j.value("contrast_jitter", d.contrast_jitter);
    c.p_projective = j.value("p_projective", d.p_projective);
    c.p_resolution = j.value("p_resolution", d.p_resolution);
    c.p_blur = j.value("p_blur", d.p_blur);
    c.p_noise = j.value("p_noise", d.p_noise);
    c.p_photometric = j.value("p_photometric", d.p_photometric);
}

namespace {

cv::Mat to_mat(const GlyphImage& image) {
    cv::Mat m(kGlyphHeight, kGlyphWidth, CV_32F);
    std::copy(image.pixels.begin(), image.pixels.end(), m.ptr<float>());
    return m;
}

GlyphImage from_mat(const cv::Mat& m) {
    GlyphImage image;
    const float* p = m.ptr<float>();
    std::transform(p, p + kGlyphPixels, image.pixels.begin(), [](float v) { return std::clamp(v, 0.0f, 1.0f); });
    return image;
}

cv::Mat projective_jitter(const cv::Mat& src, double magnitude, Rng& rng) {
    const float w = static_cast<float>(kGlyphWidth - 1);
    const float h = static_cast<float>(kGlyphHeight - 1);
    const cv::Point2f from[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
    cv::Point2f to[4];
    for (int i = 0; i < 4; ++i)
        to[i] = from[i] + cv::Point2f(static_cast<float>(rng.uniform(-magnitude, magnitude)),
                                      static_cast<float>(rng.uniform(-magnitude, magnitude)));
    const cv::Mat homography = cv::getPerspectiveTransform(from, to);
    cv::Mat dst;
    cv::warpPerspective(src, dst, homography, src.size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    return dst;
}

cv::Mat resolution_loss(const cv::Mat& src, double loss) {
    const double scale = 1.0 - loss;
    const cv::Size small(std::max(1, static_cast<int>(std::lround(kGlyphWidth * scale))),
                         std::max(1, static_cast<int>(std::lround(kGlyphHeight * scale))));
    cv::Mat low, back;
    cv::resize(src, low, small, 0, 0, cv::INTER_AREA);
    cv::resize(low, back, src.size(), 0, 0, cv::INTER_LINEAR);
    return back;
}

} // namespace

GlyphImage augment(const GlyphImage& image, const AugmentationConfig& cfg, std::uint64_t seed) {
    check_intensities(image);
    cfg.validate();
    Rng rng(seed);
    cv::Mat m = to_mat(image);

    // Every draw happens unconditionally so a stage's randomness does not
    // depend on whether an earlier stage fired.
    const bool do_proj = rng.bernoulli(cfg.p_projective);
    const bool do_res = rng.bernoulli(cfg.p_resolution);
    const double loss = rng.uniform(cfg.resolution_loss_min, cfg.resolution_loss_max);
    const bool do_blur = rng.bernoulli(cfg.p_blur);
    const double blur_sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
    const bool do_noise = rng.bernoulli(cfg.p_noise);
    const double noise_sigma = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max);
    const bool do_photo = rng.bernoulli(cfg.p_photometric);
    const double shift = rng.uniform(-cfg.brightness_jitter, cfg.brightness_jitter);
    const double gain = 1.0 + rng.uniform(-cfg.contrast_jitter, cfg.contrast_jitter);

    if (do_proj && cfg.corner_jitter > 0.0) m = projective_jitter(m, cfg.corner_jitter, rng);
    if (do_res && loss > 0.0) m = resolution_loss(m, loss);
    if (do_blur && blur_sigma > 0.0) {
        cv::Mat blurred;
        cv::GaussianBlur(m, blurred, cv::Size(0, 0), blur_sigma, blur_sigma, cv::BORDER_REPLICATE);
        m = blurred;
    }
    if (do_noise && noise_sigma > 0.0) {
        auto* p = m.ptr<float>();
        for (int i = 0; i < kGlyphPixels; ++i) p[i] += static_cast<float>(noise_sigma * rng.normal());
    }
    if (do_photo && (cfg.brightness_jitter > 0.0 || cfg.contrast_jitter > 0.0)) {
        auto* p = m.ptr<float>();
        for (int i = 0; i < kGlyphPixels; ++i)
            p[i] = static_cast<float>((p[i] - 0.5) * gain + 0.5 + shift);
    }
    return from_mat(m);
}

} // namespace fontauth::synth
