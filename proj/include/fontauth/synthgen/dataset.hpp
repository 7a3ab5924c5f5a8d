#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fontauth/synthgen/augment.hpp"
#include "fontauth/synthgen/font_registry.hpp"
#include "fontauth/synthgen/glyph.hpp"
#include "fontauth/synthgen/render.hpp"

namespace fontauth::synth {

inline constexpr int kDigitAlphabetSize = 10;

struct FontRecord {
    std::string id;
    std::string role;
    std::string sha256;

    friend bool operator==(const FontRecord&, const FontRecord&) = default;
};

/// How a dataset was produced. `fonts` lists exactly the fonts whose glyphs
/// appear in the samples.
struct DatasetProvenance {
    std::string purpose;  // "train" or "test"
    std::vector<FontRecord> fonts;
    std::uint64_t seed = 0;
    int per_cell_count = 0;
    nlohmann::json render_config;
    nlohmann::json augment_config;
    std::string note;

    friend bool operator==(const DatasetProvenance&, const DatasetProvenance&) = default;
};

void to_json(nlohmann::json& j, const DatasetProvenance& p);
void from_json(const nlohmann::json& j, DatasetProvenance& p);

struct Dataset {
    std::vector<GlyphSample> samples;
    int alphabet_size = kDigitAlphabetSize;
    DatasetProvenance provenance;

    /// counts[char_index][forged]
    std::vector<std::array<std::size_t, 2>> cell_counts() const;

    /// Geometry, label range, and (when `training`) non-empty cells.
    void validate(bool training) const;

    /// SHA-256 over alphabet size and sample records (provenance excluded).
    std::string content_hash() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SynthesisOptions {
    std::string alphabet{kDigits};
    /// Worker threads for augmentation; sample order never depends on it.
    unsigned workers = 1;
};

/// per_cell_count samples for every (char_index, forged) cell. Genuine
/// samples cycle through registry.genuine, forged ones through
/// registry.forged; held-out fonts are never used. Sample order is
/// (char_index, forged, sequence number).
Dataset synthesize_dataset(const FontRegistry& registry, int per_cell_count, const RenderConfig& render_cfg,
                           const AugmentationConfig& aug_cfg, std::uint64_t seed,
                           const SynthesisOptions& options = {});

/// Test set drawn from one list of fonts, all labeled with `forged`:
/// per_char_count samples per character, fonts round-robin.
Dataset synthesize_font_set(const std::vector<FontAsset>& fonts, bool forged, int per_char_count,
                            const RenderConfig& render_cfg, const AugmentationConfig& aug_cfg,
                            std::uint64_t seed, const SynthesisOptions& options = {});

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Directory of 8-bit PGM crops plus manifest.csv (path,char,font_id,forged)
/// and provenance.json.
void export_sidecar(const Dataset& ds, const std::filesystem::path& dir);
Dataset import_sidecar(const std::filesystem::path& dir);

std::string file_sha256(const std::filesystem::path& path);

/// Reads a grayscale crop (dark ink on light paper, 8-bit). Crops of another
/// size are resampled to 15x19 with area averaging.
GlyphImage load_glyph_image(const std::filesystem::path& path);
/// Writes an 8-bit PGM/PNG chosen by extension.
void save_glyph_image(const GlyphImage& image, const std::filesystem::path& path);

} // namespace fontauth::synth
