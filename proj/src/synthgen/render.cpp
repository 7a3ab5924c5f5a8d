#include "fontauth/synthgen/render.hpp"

#include <opencv2/core.hpp>
#include <opencv2/freetype.hpp>
#include <opencv2/imgproc.hpp>

#include "fontauth/common/errors.hpp"
#include "fontauth/synthgen/sfnt_cmap.hpp"

namespace fontauth::synth {

void RenderConfig::validate() const {
    if (width != kGlyphWidth || height != kGlyphHeight)
        throw InvalidArgument("render geometry must be 15x19, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    if (min_pixel_size < 1 || max_pixel_size < min_pixel_size)
        throw InvalidArgument("invalid pixel-size search range");
    if (padding < 0 || 2 * padding >= width) throw InvalidArgument("invalid padding");
}

void to_json(nlohmann::json& j, const RenderConfig& cfg) {
    j = {{"width", cfg.width},
         {"height", cfg.height},
         {"min_pixel_size", cfg.min_pixel_size},
         {"max_pixel_size", cfg.max_pixel_size},
         {"padding", cfg.padding},
         {"polarity", cfg.polarity == Polarity::dark_on_light ? "dark_on_light" : "light_on_dark"},
         {"antialias", cfg.antialias}};
}

void from_json(const nlohmann::json& j, RenderConfig& cfg) {
    RenderConfig d;
    cfg.width = j.value("width", d.width);
    cfg.height = j.value("height", d.height);
    cfg.min_pixel_size = j.value("min_pixel_size", d.min_pixel_size);
    cfg.max_pixel_size = j.value("max_pixel_size", d.max_pixel_size);
    cfg.padding = j.value("padding", d.padding);
    const auto pol = j.value("polarity", std::string("dark_on_light"));
    if (pol == "dark_on_light")
        cfg.polarity = Polarity::dark_on_light;
    else if (pol == "light_on_dark")
        cfg.polarity = Polarity::light_on_dark;
    else
        throw InvalidArgument("unknown polarity: " + pol);
    cfg.antialias = j.value("antialias", d.antialias);
}

char32_t alphabet_char(int char_index, std::string_view alphabet) {
    if (char_index < 0 || static_cast<std::size_t>(char_index) >= alphabet.size())
        throw InvalidArgument("char_index " + std::to_string(char_index) + " outside alphabet of size " +
                              std::to_string(alphabet.size()));
    return static_cast<unsigned char>(alphabet[static_cast<std::size_t>(char_index)]);
}

namespace {

struct LoadedFont {
    cv::Ptr<cv::freetype::FreeType2> rasterizer;
    SfntCharMap charmap;
};

// Coverage of one glyph on a scratch canvas, cropped to its ink box.
cv::Mat rasterize_ink(cv::freetype::FreeType2& ft, const std::string& text, int pixel_size, bool antialias) {
    const int side = 4 * pixel_size + 8;
    cv::Mat canvas(side, side, CV_8UC3, cv::Scalar::all(0));
    ft.putText(canvas, text, cv::Point(pixel_size + 4, 3 * pixel_size + 4), pixel_size, cv::Scalar::all(255),
               -1, antialias ? cv::LINE_AA : cv::LINE_8, true);
    cv::Mat gray;
    cv::extractChannel(canvas, gray, 0);
    const cv::Rect box = cv::boundingRect(gray);
    if (box.area() == 0) return {};
    return gray(box).clone();
}

} // namespace

struct GlyphRenderer::Impl {
    std::map<std::string, LoadedFont> fonts;

    LoadedFont& load(const FontAsset& font) {
        const auto key = font.path.string();
        if (auto it = fonts.find(key); it != fonts.end()) return it->second;
        auto charmap = SfntCharMap::load(font.path);
        auto ft = cv::freetype::createFreeType2();
        try {
            ft->loadFontData(key, 0);
        } catch (const cv::Exception& e) {
            throw FontLoadError("cannot load font " + key + ": " + e.what());
        }
        return fonts.emplace(key, LoadedFont{ft, std::move(charmap)}).first->second;
    }
};

GlyphRenderer::GlyphRenderer() : impl_(std::make_unique<Impl>()) {}
GlyphRenderer::~GlyphRenderer() = default;
GlyphRenderer::GlyphRenderer(GlyphRenderer&&) noexcept = default;
GlyphRenderer& GlyphRenderer::operator=(GlyphRenderer&&) noexcept = default;

GlyphImage GlyphRenderer::render(const FontAsset& font, int char_index, const RenderConfig& cfg,
                                 std::string_view alphabet) {
    cfg.validate();
    const char32_t cp = alphabet_char(char_index, alphabet);
    auto& loaded = impl_->load(font);
    if (!loaded.charmap.contains(cp))
        throw MissingGlyph("font " + font.id + " has no glyph for U+" + std::to_string(static_cast<unsigned>(cp)));
    if (cp > 0x7F) throw InvalidArgument("only ASCII alphabets are supported by the renderer");
    const std::string text(1, static_cast<char>(cp));

    const int max_w = cfg.width - 2 * cfg.padding;
    const int max_h = cfg.height - 2 * cfg.padding;
    auto fits = [&](const cv::Mat& ink) { return !ink.empty() && ink.cols <= max_w && ink.rows <= max_h; };

    int lo = cfg.min_pixel_size;
    int hi = cfg.max_pixel_size;
    cv::Mat best = rasterize_ink(*loaded.rasterizer, text, lo, cfg.antialias);
    if (!fits(best))
        throw DataError("glyph " + text + " of font " + font.id + " does not fit even at pixel size " +
                        std::to_string(lo));
    while (lo < hi) {
        const int mid = lo + (hi - lo + 1) / 2;
        cv::Mat ink = rasterize_ink(*loaded.rasterizer, text, mid, cfg.antialias);
        if (fits(ink)) {
            lo = mid;
            best = std::move(ink);
        } else {
            hi = mid - 1;
        }
    }

    const float background = cfg.polarity == Polarity::dark_on_light ? 1.0f : 0.0f;
    GlyphImage image;
    image.pixels.fill(background);
    const int x0 = (cfg.width - best.cols) / 2;
    const int y0 = (cfg.height - best.rows) / 2;
    for (int r = 0; r < best.rows; ++r)
        for (int c = 0; c < best.cols; ++c) {
            const float coverage = dequantize_level(best.at<std::uint8_t>(r, c));
            image.at(y0 + r, x0 + c) = cfg.polarity == Polarity::dark_on_light ? 1.0f - coverage : coverage;
        }
    return image;
}

GlyphImage render_glyph(const FontAsset& font, int char_index, const RenderConfig& cfg, std::string_view alphabet) {
    GlyphRenderer renderer;
    return renderer.render(font, char_index, cfg, alphabet);
}

} // namespace fontauth::synth
