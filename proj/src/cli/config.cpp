#include <algorithm>
#include <fstream>

#include "fontauth/cli/cli.hpp"
#include "fontauth/common/binary_io.hpp"
#include "fontauth/common/errors.hpp"

namespace fontauth::cli {

using nlohmann::json;

std::filesystem::path default_registry_path() { return std::filesystem::path(FONTAUTH_DATA_DIR) / "registry.json"; }

std::filesystem::path default_fixture_dir() { return FONTAUTH_FIXTURE_DIR; }

void RunConfig::validate() const {
    render.validate();
    augment.validate();
    train.validate();
    if (per_cell < 1) throw InvalidArgument("per_cell must be >= 1");
    if (per_char < 1) throw InvalidArgument("per_char must be >= 1");
    if (!(threshold >= 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in [0, 1)");
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
}

json to_json(const RunConfig& cfg) {
    return json{{"registry", cfg.registry.string()},
                {"render", cfg.render},
                {"augment", cfg.augment},
                {"train", cfg.train},
                {"kind", std::string(clf::to_string(cfg.kind))},
                {"seed", cfg.seed},
                {"per_cell", cfg.per_cell},
                {"per_char", cfg.per_char},
                {"threshold", cfg.threshold},
                {"workers", cfg.workers}};
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    static const std::vector<std::string> known = {"registry", "render",   "augment",   "train",  "kind",
                                                   "seed",     "per_cell", "per_char", "threshold", "workers"};
    for (const auto& [key, _] : j.items())
        if (std::ranges::find(known, key) == known.end()) throw FormatError("unknown config key '" + key + "'");
    RunConfig cfg;
    try {
        if (j.contains("registry")) cfg.registry = j["registry"].get<std::string>();
        if (j.contains("render")) cfg.render = j["render"].get<synth::RenderConfig>();
        if (j.contains("augment")) cfg.augment = j["augment"].get<synth::AugmentationConfig>();
        if (j.contains("train")) cfg.train = j["train"].get<nn::TrainConfig>();
        if (j.contains("kind")) cfg.kind = clf::parse_kind(j["kind"].get<std::string>());
        cfg.seed = j.value("seed", cfg.seed);
        cfg.per_cell = j.value("per_cell", cfg.per_cell);
        cfg.per_char = j.value("per_char", cfg.per_char);
        cfg.threshold = j.value("threshold", cfg.threshold);
        cfg.workers = j.value("workers", cfg.workers);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    auto cfg = config_from_json(j);
    if (cfg.registry.is_relative() && j.contains("registry")) cfg.registry = path.parent_path() / cfg.registry;
    return cfg;
}

std::vector<int> parse_class_list(const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad class list '" + text + "'");
        }
        if (used != item.size() || v < 0) throw InvalidArgument("bad class list '" + text + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::filesystem::path> field_images(const std::filesystem::path& source) {
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    if (fs::is_directory(source)) {
        for (const auto& e : fs::directory_iterator(source)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) out.push_back(e.path());
        }
        std::ranges::sort(out);
    } else {
        std::ifstream in(source);
        if (!in) throw DataError("cannot open field " + source.string());
        for (std::string line; std::getline(in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            fs::path p(line);
            out.push_back(p.is_relative() ? source.parent_path() / p : p);
        }
    }
    if (out.empty()) throw DataError("field " + source.string() + " has no symbol images");
    return out;
}

} // namespace fontauth::cli
