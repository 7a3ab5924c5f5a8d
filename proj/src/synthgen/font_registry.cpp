#include "fontauth/synthgen/font_registry.hpp"

#include <fstream>
#include <set>

#include "fontauth/common/errors.hpp"

namespace fontauth::synth {

std::string_view to_string(FontRole role) {
    switch (role) {
    case FontRole::genuine: return "genuine";
    case FontRole::forged_proxy: return "forged_proxy";
    case FontRole::held_out: return "held_out";
    }
    return "?";
}

FontRole parse_font_role(std::string_view text) {
    if (text == "genuine") return FontRole::genuine;
    if (text == "forged_proxy" || text == "forged") return FontRole::forged_proxy;
    if (text == "held_out") return FontRole::held_out;
    throw InvalidArgument("unknown font role: " + std::string(text));
}

void FontRegistry::validate(bool for_training) const {
    std::set<std::string> ids;
    for (const auto* list : {&genuine, &forged, &held_out})
        for (const auto& font : *list) {
            if (font.id.empty()) throw InvalidArgument("font with empty id");
            if (!ids.insert(font.id).second) throw InvalidArgument("duplicate font id: " + font.id);
        }
    if (genuine.empty()) throw EmptyFontSet("registry has no genuine font");
    if (for_training && forged.empty()) throw EmptyFontSet("registry has no forged-proxy font");
}

const FontAsset& FontRegistry::find(std::string_view id) const {
    for (const auto* list : {&genuine, &forged, &held_out})
        for (const auto& font : *list)
            if (font.id == id) return font;
    throw InvalidArgument("font id not in registry: " + std::string(id));
}

FontRegistry FontRegistry::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.contains("fonts") || !doc["fonts"].is_array())
        throw FormatError("font manifest lacks a \"fonts\" array");
    FontRegistry reg;
    for (const auto& entry : doc["fonts"]) {
        FontAsset font;
        font.id = entry.at("id").get<std::string>();
        std::filesystem::path p = entry.at("path").get<std::string>();
        font.path = p.is_absolute() ? p : base_dir / p;
        font.role = parse_font_role(entry.at("role").get<std::string>());
        switch (font.role) {
        case FontRole::genuine: reg.genuine.push_back(std::move(font)); break;
        case FontRole::forged_proxy: reg.forged.push_back(std::move(font)); break;
        case FontRole::held_out: reg.held_out.push_back(std::move(font)); break;
        }
    }
    reg.validate(false);
    return reg;
}

FontRegistry FontRegistry::load(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open font manifest " + manifest.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("font manifest " + manifest.string() + ": " + e.what());
    }
    try {
        return from_json(doc, manifest.parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("font manifest " + manifest.string() + ": " + e.what());
    }
}

nlohmann::json FontRegistry::to_json() const {
    nlohmann::json fonts = nlohmann::json::array();
    for (const auto* list : {&genuine, &forged, &held_out})
        for (const auto& font : *list)
            fonts.push_back({{"id", font.id}, {"path", font.path.string()}, {"role", to_string(font.role)}});
    return {{"fonts", fonts}};
}

} // namespace fontauth::synth
