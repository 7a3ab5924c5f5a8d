#include "fontauth/synthgen/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fontauth/common/binary_io.hpp"
#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"

namespace fontauth::synth {

namespace {

constexpr const char* kAugmentationNote =
    "capture-degradation stack (projective jitter, rescale, blur, noise, photometric) is a stand-in "
    "for the original capture-simulation method, whose parameters are unknown";

struct Job {
    const GlyphImage* base;
    std::uint64_t seed;
    GlyphSample* out;
};

void run_jobs(std::vector<Job>& jobs, const AugmentationConfig& aug_cfg, unsigned workers) {
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < jobs.size(); i += stride)
            jobs[i].out->image = quantized(augment(*jobs[i].base, aug_cfg, jobs[i].seed));
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        work(0, 1);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
}

// Base renders for every (font, char) pair, done serially since the
// rasterizer is not thread-safe.
std::map<std::pair<std::string, int>, GlyphImage> render_bases(const std::vector<const FontAsset*>& fonts,
                                                               int alphabet_size, const RenderConfig& cfg,
                                                               std::string_view alphabet) {
    GlyphRenderer renderer;
    std::map<std::pair<std::string, int>, GlyphImage> bases;
    for (const auto* font : fonts)
        for (int c = 0; c < alphabet_size; ++c)
            bases.emplace(std::pair{font->id, c}, renderer.render(*font, c, cfg, alphabet));
    return bases;
}

FontRecord record_for(const FontAsset& font) {
    return {font.id, std::string(to_string(font.role)), file_sha256(font.path)};
}

int checked_alphabet_size(std::string_view alphabet) {
    if (alphabet.empty() || alphabet.size() > 255) throw InvalidArgument("alphabet size must be in [1,255]");
    return static_cast<int>(alphabet.size());
}

} // namespace

void to_json(nlohmann::json& j, const DatasetProvenance& p) {
    nlohmann::json fonts = nlohmann::json::array();
    for (const auto& f : p.fonts) fonts.push_back({{"id", f.id}, {"role", f.role}, {"sha256", f.sha256}});
    j = {{"purpose", p.purpose},   {"fonts", fonts},
         {"seed", p.seed},         {"per_cell_count", p.per_cell_count},
         {"render_config", p.render_config}, {"augment_config", p.augment_config},
         {"note", p.note}};
}

void from_json(const nlohmann::json& j, DatasetProvenance& p) {
    p.purpose = j.at("purpose").get<std::string>();
    p.fonts.clear();
    for (const auto& f : j.at("fonts"))
        p.fonts.push_back({f.at("id").get<std::string>(), f.at("role").get<std::string>(),
                           f.at("sha256").get<std::string>()});
    p.seed = j.at("seed").get<std::uint64_t>();
    p.per_cell_count = j.at("per_cell_count").get<int>();
    p.render_config = j.at("render_config");
    p.augment_config = j.at("augment_config");
    p.note = j.value("note", std::string());
}

std::vector<std::array<std::size_t, 2>> Dataset::cell_counts() const {
    std::vector<std::array<std::size_t, 2>> counts(static_cast<std::size_t>(std::max(alphabet_size, 0)), {0, 0});
    for (const auto& s : samples)
        if (s.char_index >= 0 && s.char_index < alphabet_size)
            ++counts[static_cast<std::size_t>(s.char_index)][s.forged ? 1 : 0];
    return counts;
}

void Dataset::validate(bool training) const {
    if (alphabet_size < 1) throw DataError("dataset alphabet size must be positive");
    for (const auto& s : samples) {
        if (s.char_index < 0 || s.char_index >= alphabet_size)
            throw DataError("sample char_index " + std::to_string(s.char_index) + " outside alphabet");
        check_intensities(s.image);
    }
    if (training) {
        const auto counts = cell_counts();
        for (std::size_t c = 0; c < counts.size(); ++c)
            for (int f = 0; f < 2; ++f)
                if (counts[c][static_cast<std::size_t>(f)] == 0)
                    throw DataError("training dataset has empty cell (char " + std::to_string(c) +
                                    (f ? ", forged)" : ", genuine)"));
    }
}

std::string Dataset::content_hash() const {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(alphabet_size));
    for (const auto& s : samples) {
        w.u8(static_cast<std::uint8_t>(s.char_index));
        w.u8(s.forged ? 1 : 0);
        w.short_str(s.font_id);
        for (float v : s.image.pixels) w.u8(quantize_level(v));
    }
    return sha256_hex(w.bytes());
}

Dataset synthesize_dataset(const FontRegistry& registry, int per_cell_count, const RenderConfig& render_cfg,
                           const AugmentationConfig& aug_cfg, std::uint64_t seed, const SynthesisOptions& options) {
    registry.validate(true);
    if (per_cell_count < 1) throw InvalidArgument("per_cell_count must be >= 1");
    render_cfg.validate();
    aug_cfg.validate();
    const int m = checked_alphabet_size(options.alphabet);

    std::vector<const FontAsset*> fonts;
    for (const auto& f : registry.genuine) fonts.push_back(&f);
    for (const auto& f : registry.forged) fonts.push_back(&f);
    const auto bases = render_bases(fonts, m, render_cfg, options.alphabet);

    Dataset ds;
    ds.alphabet_size = m;
    ds.samples.resize(static_cast<std::size_t>(m) * 2 * static_cast<std::size_t>(per_cell_count));
    std::vector<Job> jobs;
    jobs.reserve(ds.samples.size());
    std::size_t slot = 0;
    for (int c = 0; c < m; ++c)
        for (int forged = 0; forged < 2; ++forged) {
            const auto& pool = forged ? registry.forged : registry.genuine;
            for (int k = 0; k < per_cell_count; ++k, ++slot) {
                const auto& font = pool[static_cast<std::size_t>(k) % pool.size()];
                auto& sample = ds.samples[slot];
                sample.char_index = c;
                sample.forged = forged != 0;
                sample.font_id = font.id;
                jobs.push_back({&bases.at({font.id, c}), derive_seed(seed, slot), &sample});
            }
        }
    run_jobs(jobs, aug_cfg, options.workers);

    ds.provenance.purpose = "train";
    for (const auto* f : fonts) ds.provenance.fonts.push_back(record_for(*f));
    ds.provenance.seed = seed;
    ds.provenance.per_cell_count = per_cell_count;
    ds.provenance.render_config = render_cfg;
    ds.provenance.augment_config = aug_cfg;
    ds.provenance.note = kAugmentationNote;
    return ds;
}

Dataset synthesize_font_set(const std::vector<FontAsset>& fonts, bool forged, int per_char_count,
                            const RenderConfig& render_cfg, const AugmentationConfig& aug_cfg, std::uint64_t seed,
                            const SynthesisOptions& options) {
    if (fonts.empty()) throw EmptyFontSet("no fonts given for test-set synthesis");
    if (per_char_count < 1) throw InvalidArgument("per_char_count must be >= 1");
    render_cfg.validate();
    aug_cfg.validate();
    const int m = checked_alphabet_size(options.alphabet);

    std::vector<const FontAsset*> font_ptrs;
    for (const auto& f : fonts) font_ptrs.push_back(&f);
    const auto bases = render_bases(font_ptrs, m, render_cfg, options.alphabet);

    Dataset ds;
    ds.alphabet_size = m;
    ds.samples.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(per_char_count));
    std::vector<Job> jobs;
    std::size_t slot = 0;
    for (int c = 0; c < m; ++c)
        for (int k = 0; k < per_char_count; ++k, ++slot) {
            const auto& font = fonts[static_cast<std::size_t>(k) % fonts.size()];
            auto& sample = ds.samples[slot];
            sample.char_index = c;
            sample.forged = forged;
            sample.font_id = font.id;
            jobs.push_back({&bases.at({font.id, c}), derive_seed(seed, slot), &sample});
        }
    run_jobs(jobs, aug_cfg, options.workers);

    ds.provenance.purpose = "test";
    for (const auto& f : fonts) ds.provenance.fonts.push_back(record_for(f));
    ds.provenance.seed = seed;
    ds.provenance.per_cell_count = per_char_count;
    ds.provenance.render_config = render_cfg;
    ds.provenance.augment_config = aug_cfg;
    ds.provenance.note = kAugmentationNote;
    return ds;
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
    if (ds.alphabet_size < 1 || ds.alphabet_size > 255) throw InvalidArgument("alphabet size must be in [1,255]");
    ByteWriter w;
    w.magic("FFDS");
    w.u16(kDatasetFormatVersion);
    w.u16(static_cast<std::uint16_t>(ds.alphabet_size));
    w.u32(static_cast<std::uint32_t>(ds.samples.size()));
    w.str(nlohmann::json(ds.provenance).dump());
    for (const auto& s : ds.samples) {
        if (s.char_index < 0 || s.char_index >= ds.alphabet_size) throw InvalidArgument("sample label out of range");
        w.u8(static_cast<std::uint8_t>(s.char_index));
        w.u8(s.forged ? 1 : 0);
        w.short_str(s.font_id);
        for (float v : s.image.pixels) w.u8(quantize_level(v));
    }
    auto bytes = w.take();
    append_crc(bytes);
    return bytes;
}

Dataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
    ByteReader r(open_container(bytes, "FFDS", kDatasetFormatVersion));
    Dataset ds;
    ds.alphabet_size = r.u16();
    const auto count = r.u32();
    try {
        ds.provenance = nlohmann::json::parse(r.str()).get<DatasetProvenance>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset provenance: ") + e.what());
    }
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        s.char_index = r.u8();
        s.forged = r.u8() != 0;
        s.font_id = r.short_str();
        const auto px = r.raw(kGlyphPixels);
        for (int i = 0; i < kGlyphPixels; ++i) s.image.pixels[static_cast<std::size_t>(i)] = dequantize_level(px[i]);
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after dataset records");
    ds.validate(false);
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(read_file(path)); }

void export_sidecar(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    std::ostringstream csv;
    csv << "path,char,font_id,forged\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        if (s.font_id.find_first_of(",\n\"") != std::string::npos)
            throw InvalidArgument("font id not representable in CSV: " + s.font_id);
        char name[32];
        std::snprintf(name, sizeof name, "images/%06zu.pgm", i);
        cv::Mat img(kGlyphHeight, kGlyphWidth, CV_8U);
        for (int p = 0; p < kGlyphPixels; ++p) img.data[p] = quantize_level(s.image.pixels[static_cast<std::size_t>(p)]);
        if (!cv::imwrite((dir / name).string(), img)) throw DataError(std::string("cannot write ") + name);
        csv << name << ',' << s.char_index << ',' << s.font_id << ',' << (s.forged ? 1 : 0) << '\n';
    }
    write_file_atomic(dir / "manifest.csv", csv.str());
    nlohmann::json meta = {{"alphabet_size", ds.alphabet_size}, {"provenance", ds.provenance}};
    write_file_atomic(dir / "provenance.json", meta.dump(2));
}

Dataset import_sidecar(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw DataError("cannot open " + (dir / "manifest.csv").string());
    Dataset ds;
    if (std::ifstream meta_in(dir / "provenance.json"); meta_in) {
        const auto meta = nlohmann::json::parse(meta_in);
        ds.alphabet_size = meta.at("alphabet_size").get<int>();
        ds.provenance = meta.at("provenance").get<DatasetProvenance>();
    }
    std::string line;
    std::getline(manifest, line);
    if (line.rfind("path,char,font_id,forged", 0) != 0) throw FormatError("unexpected sidecar manifest header");
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
        if (cols.size() != 4) throw FormatError("bad sidecar manifest row: " + line);
        const cv::Mat img = cv::imread((dir / cols[0]).string(), cv::IMREAD_GRAYSCALE);
        if (img.empty()) throw DataError("cannot read " + cols[0]);
        if (img.cols != kGlyphWidth || img.rows != kGlyphHeight) throw ShapeError(cols[0] + " is not 15x19");
        GlyphSample s;
        for (int p = 0; p < kGlyphPixels; ++p)
            s.image.pixels[static_cast<std::size_t>(p)] = dequantize_level(img.ptr<std::uint8_t>(p / kGlyphWidth)[p % kGlyphWidth]);
        s.char_index = std::stoi(cols[1]);
        s.font_id = cols[2];
        s.forged = cols[3] == "1";
        ds.samples.push_back(std::move(s));
    }
    ds.validate(false);
    return ds;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

GlyphImage load_glyph_image(const std::filesystem::path& path) {
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw DataError("cannot read image " + path.string());
    if (img.cols != kGlyphWidth || img.rows != kGlyphHeight) {
        cv::Mat resized;
        cv::resize(img, resized, cv::Size(kGlyphWidth, kGlyphHeight), 0, 0, cv::INTER_AREA);
        img = resized;
    }
    GlyphImage out;
    for (int p = 0; p < kGlyphPixels; ++p)
        out.pixels[static_cast<std::size_t>(p)] = dequantize_level(img.ptr<std::uint8_t>(p / kGlyphWidth)[p % kGlyphWidth]);
    return out;
}

void save_glyph_image(const GlyphImage& image, const std::filesystem::path& path) {
    cv::Mat img(kGlyphHeight, kGlyphWidth, CV_8U);
    for (int p = 0; p < kGlyphPixels; ++p) img.data[p] = quantize_level(image.pixels[static_cast<std::size_t>(p)]);
    if (!cv::imwrite(path.string(), img)) throw DataError("cannot write image " + path.string());
}

} // namespace fontauth::synth
