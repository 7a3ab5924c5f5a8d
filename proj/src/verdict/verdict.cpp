#include "fontauth/verdict/verdict.hpp"

#include <algorithm>
#include <cmath>

#include "fontauth/common/errors.hpp"

namespace fontauth::verdict {

using nlohmann::json;

ReliabilityTable ReliabilityTable::uniform(int alphabet_size) {
    if (alphabet_size < 1) throw InvalidArgument("reliability table needs at least one class");
    ReliabilityTable t;
    t.reliability.assign(static_cast<std::size_t>(alphabet_size), 1.0);
    t.always_flag.assign(static_cast<std::size_t>(alphabet_size), false);
    return t;
}

void to_json(json& j, const ReliabilityTable& t) {
    j = json{{"reliability", t.reliability}, {"always_flag", t.always_flag}};
}

void from_json(const json& j, ReliabilityTable& t) {
    t.reliability = j.at("reliability").get<std::vector<double>>();
    t.always_flag = j.value("always_flag", std::vector<bool>(t.reliability.size(), false));
    if (t.always_flag.size() != t.reliability.size()) throw FormatError("reliability table columns differ in length");
    for (double r : t.reliability)
        if (!(r >= 0.0 && r <= 1.0)) throw FormatError("reliability outside [0, 1]");
}

ReliabilityTable build_reliability_table(const metrics::ModifiedConfusionMatrix& matrix,
                                         const ReliabilityOptions& options) {
    if (!(options.floor >= kMinReliability && options.floor <= 1.0))
        throw InvalidArgument("reliability floor must lie in [0.05, 1]");
    auto t = ReliabilityTable::uniform(matrix.alphabet_size());
    for (int c = 0; c < matrix.alphabet_size(); ++c) {
        const auto n = matrix.column_sum(c);
        double r = options.floor;
        if (n > 0) {
            r = static_cast<double>(matrix.font_correct(c)) / static_cast<double>(n);
            r = std::clamp(r, kMinReliability, 1.0);
        }
        t.reliability[static_cast<std::size_t>(c)] = r;
        t.always_flag[static_cast<std::size_t>(c)] = options.flag_below_floor && r < options.floor;
    }
    return t;
}

void to_json(json& j, const SymbolAssessment& a) {
    j = json{{"position", a.position},       {"std_char", a.std_char}, {"std_confidence", a.std_confidence},
             {"auth_forged", a.auth_forged}, {"forced", a.forced},     {"flagged", a.flagged},
             {"weight", a.weight}};
    j["auth_char"] = a.auth_char ? json(*a.auth_char) : json(nullptr);
}

void from_json(const json& j, SymbolAssessment& a) {
    a.position = j.at("position").get<int>();
    a.std_char = j.at("std_char").get<int>();
    a.std_confidence = j.at("std_confidence").get<double>();
    a.auth_char.reset();
    if (j.contains("auth_char") && !j["auth_char"].is_null()) a.auth_char = j["auth_char"].get<int>();
    a.auth_forged = j.at("auth_forged").get<bool>();
    a.forced = j.value("forced", false);
    a.flagged = j.at("flagged").get<bool>();
    a.weight = j.at("weight").get<double>();
}

SymbolAssessment make_assessment(int position, int std_char, double std_confidence, std::optional<int> auth_char,
                                 bool auth_forged, double weight, bool forced) {
    SymbolAssessment a;
    a.position = position;
    a.std_char = std_char;
    a.std_confidence = std_confidence;
    a.auth_char = auth_char;
    a.auth_forged = auth_forged;
    a.forced = forced;
    a.weight = weight;
    a.flagged = auth_forged || (auth_char && *auth_char != std_char) || forced;
    return a;
}

namespace {

void check_models(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model) {
    if (std_model.spec.kind != clf::ClassifierKind::plain)
        throw InvalidArgument("standard model must be a plain character classifier, got " +
                              std::string(clf::to_string(std_model.spec.kind)));
    if (auth_model.spec.kind == clf::ClassifierKind::plain)
        throw InvalidArgument("authenticity model has no font output");
    if (std_model.spec.alphabet_size != auth_model.spec.alphabet_size)
        throw InvalidArgument("standard and authenticity models use different alphabets");
}

SymbolAssessment combine(const clf::Prediction& std_pred, const clf::Prediction& auth_pred,
                         const ReliabilityTable& table, int position) {
    const int c = *std_pred.char_index;
    const auto k = static_cast<std::size_t>(c);
    return make_assessment(position, c, std_pred.confidence, auth_pred.char_index, auth_pred.forged,
                           std_pred.confidence * table.reliability[k], table.always_flag[k]);
}

} // namespace

SymbolAssessment assess_symbol(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                               const synth::GlyphImage& image, const ReliabilityTable& table, int position) {
    check_models(std_model, auth_model);
    if (table.alphabet_size() != std_model.spec.alphabet_size)
        throw InvalidArgument("reliability table does not match the model alphabet");
    return combine(clf::predict(std_model, image), clf::predict(auth_model, image), table, position);
}

SymbolAssessment assess_symbol(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                               const synth::GlyphImage& image, int position) {
    return assess_symbol(std_model, auth_model, image, ReliabilityTable::uniform(std_model.spec.alphabet_size),
                         position);
}

std::vector<SymbolAssessment> assess_field(const clf::TrainedModel& std_model, const clf::TrainedModel& auth_model,
                                           std::span<const synth::GlyphImage> images, const ReliabilityTable& table) {
    check_models(std_model, auth_model);
    if (table.alphabet_size() != std_model.spec.alphabet_size)
        throw InvalidArgument("reliability table does not match the model alphabet");
    const auto std_preds = clf::predict_batch(std_model, images);
    const auto auth_preds = clf::predict_batch(auth_model, images);
    std::vector<SymbolAssessment> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        out.push_back(combine(std_preds[i], auth_preds[i], table, static_cast<int>(i)));
    return out;
}

void to_json(json& j, const FieldVerdict& v) {
    j = json{{"verdict", v.forged ? "forged" : "genuine"},
             {"flagged_weight_fraction", v.flagged_weight_fraction},
             {"threshold", v.threshold},
             {"unweighted_fallback", v.unweighted_fallback},
             {"assessments", v.assessments}};
}

FieldVerdict field_verdict(std::vector<SymbolAssessment> assessments, double threshold) {
    if (assessments.empty()) throw InvalidArgument("field has no symbols");
    if (!(threshold >= 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in [0, 1)");

    double total = 0.0, flagged = 0.0;
    for (const auto& a : assessments) {
        if (!std::isfinite(a.weight) || a.weight < 0.0) throw InvalidArgument("symbol weight must be finite and >= 0");
        total += a.weight;
        if (a.flagged) flagged += a.weight;
    }

    FieldVerdict v;
    v.threshold = threshold;
    if (total > 0.0) {
        v.flagged_weight_fraction = flagged / total;
    } else {
        v.unweighted_fallback = true;
        const auto n = std::ranges::count_if(assessments, [](const SymbolAssessment& a) { return a.flagged; });
        v.flagged_weight_fraction = static_cast<double>(n) / static_cast<double>(assessments.size());
    }
    v.forged = v.flagged_weight_fraction > threshold;
    v.assessments = std::move(assessments);
    return v;
}

} // namespace fontauth::verdict
