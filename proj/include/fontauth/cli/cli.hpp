#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fontauth/classifier/classifier.hpp"
#include "fontauth/nncore/sgd.hpp"
#include "fontauth/synthgen/augment.hpp"
#include "fontauth/synthgen/render.hpp"

namespace fontauth::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kCheckFailure = 3 };

std::filesystem::path default_registry_path();
std::filesystem::path default_fixture_dir();

/// Everything a run depends on. Loaded from JSON (missing keys keep their
/// defaults), then overridden by command-line flags.
struct RunConfig {
    std::filesystem::path registry = default_registry_path();
    synth::RenderConfig render;
    synth::AugmentationConfig augment = synth::AugmentationConfig::capture_defaults();
    nn::TrainConfig train;
    clf::ClassifierKind kind = clf::ClassifierKind::c_type;
    std::uint64_t seed = 1;
    /// Training sets: samples per (character, font bit) cell.
    int per_cell = 150;
    /// Test sets: samples per character.
    int per_char = 100;
    double threshold = 0.2;
    unsigned workers = 1;

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// "0,8" -> {0, 8}. Throws InvalidArgument on junk.
std::vector<int> parse_class_list(const std::string& text);

/// Field crops: a directory (every .pgm/.png, sorted by name) or a text file
/// listing one image path per line, relative to the file's directory.
std::vector<std::filesystem::path> field_images(const std::filesystem::path& source);

struct SelfcheckOptions {
    std::filesystem::path fixture_dir = default_fixture_dir();
    int gradcheck_cases = 8;
    std::uint64_t seed = 1;
};

/// Table oracles from fixture files plus finite-difference gradient checks.
/// Prints one line per check; returns true when all pass.
bool run_selfcheck(const SelfcheckOptions& options, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fontauth::cli
