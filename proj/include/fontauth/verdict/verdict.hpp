#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fontauth/classifier/classifier.hpp"
#include "fontauth/metrics/metrics.hpp"

namespace fontauth::verdict {

inline constexpr double kDefaultThreshold = 0.2;
inline constexpr double kMinReliability = 0.05;
inline constexpr double kDefaultReliabilityFloor = 0.5;

/// Per-class weight multiplier for the standard recognizer's answer.
struct ReliabilityTable {
    std::vector<double> reliability;
    /// Classes whose symbols are always treated as flagged.
    std::vector<bool> always_flag;

    /// Reliability 1 everywhere, nothing forced.
    static ReliabilityTable uniform(int alphabet_size);
    int alphabet_size() const { return static_cast<int>(reliability.size()); }
};

void to_json(nlohmann::json& j, const ReliabilityTable& t);
void from_json(const nlohmann::json& j, ReliabilityTable& t);

struct ReliabilityOptions {
    double floor = kDefaultReliabilityFloor;
    /// Mark classes whose recall is below the floor as always flagged.
    bool flag_below_floor = false;
};

/// reliability(c) = (rows 1+2) / column sum, clamped to [0.05, 1]. An empty
/// column gets the floor.
ReliabilityTable build_reliability_table(const metrics::ModifiedConfusionMatrix& matrix,
                                         const ReliabilityOptions& options = {});

struct SymbolAssessment {
    int position = 0;
    int std_char = 0;
    double std_confidence = 0.0;
    std::optional<int> auth_char;
    bool auth_forged = false;
    /// Set when the reliability table forces this class.
    bool forced = false;
    bool flagged = false;
    double weight = 0.0;
};

void to_json(nlohmann::json& j, const SymbolAssessment& a);
void from_json(const nlohmann::json& j, SymbolAssessment& a);

/// Builds an assessment and derives `flagged`:
/// auth_forged || (auth_char && *auth_char != std_char) || forced.
SymbolAssessment make_assessment(int position, int std_char, double std_confidence, std::optional<int> auth_char,
                                 bool auth_forged, double weight, bool forced = false);

/// std_model must be plain; auth_model c_type (or cprime_type, which leaves
/// auth_char empty). Both must share the alphabet. Throws InvalidArgument
/// otherwise. weight = std confidence * reliability(std_char).
SymbolAssessment assess_symbol(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                               const synth::GlyphImage& image, const ReliabilityTable& table, int position = 0);

/// Same as assess_symbol with a uniform reliability table.
SymbolAssessment assess_symbol(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                               const synth::GlyphImage& image, int position = 0);

std::vector<SymbolAssessment> assess_field(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                                           std::span<const synth::GlyphImage> images, const ReliabilityTable& table);

struct FieldVerdict {
    std::vector<SymbolAssessment> assessments;
    double flagged_weight_fraction = 0.0;
    bool forged = false;
    double threshold = kDefaultThreshold;
    /// All weights were zero, so every symbol counted equally.
    bool unweighted_fallback = false;
};

void to_json(nlohmann::json& j, const FieldVerdict& v);

/// fraction = sum(w * flagged) / sum(w); forged iff fraction > threshold.
/// Weights must be finite and non-negative. Throws InvalidArgument on an
/// empty field or threshold outside [0, 1).
FieldVerdict field_verdict(std::vector<SymbolAssessment> assessments, double threshold = kDefaultThreshold);

} // namespace fontauth::verdict
