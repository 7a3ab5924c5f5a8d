#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fontauth::synth {

enum class FontRole { genuine, forged_proxy, held_out };

std::string_view to_string(FontRole role);
FontRole parse_font_role(std::string_view text);

struct FontAsset {
    std::string id;
    std::filesystem::path path;
    FontRole role = FontRole::genuine;
};

/// Partition of the available fonts. `genuine` plays the standard font,
/// `forged` the proxies used to synthesize forged samples, and `held_out`
/// fonts never enter a training set.
struct FontRegistry {
    std::vector<FontAsset> genuine;
    std::vector<FontAsset> forged;
    std::vector<FontAsset> held_out;

    /// Ids unique across all lists, genuine non-empty, and (for training)
    /// forged non-empty. Throws InvalidArgument or EmptyFontSet.
    void validate(bool for_training) const;

    const FontAsset& find(std::string_view id) const;

    /// Manifest layout: {"fonts": [{"id": ..., "path": ..., "role": ...}]}.
    /// Relative paths resolve against the manifest's directory.
    static FontRegistry load(const std::filesystem::path& manifest);
    static FontRegistry from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;
};

} // namespace fontauth::synth
