#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fontauth/classifier/classifier.hpp"
#include "fontauth/synthgen/dataset.hpp"

namespace fontauth::metrics {

/// Font-decision counts. Forged is the positive class.
struct BinaryCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    /// tp / (tp + fn); throws DataError when there are no positives.
    double sensitivity() const;
    /// tn / (tn + fp); throws DataError when there are no negatives.
    double specificity() const;

    BinaryCounts& operator+=(const BinaryCounts& o);
    friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

void to_json(nlohmann::json& j, const BinaryCounts& c);
void from_json(const nlohmann::json& j, BinaryCounts& c);

enum class ResultType : std::uint8_t {
    type1 = 1, // font and character correct
    type2 = 2, // font correct, character wrong
    type3 = 3, // font wrong, character correct
    type4 = 4, // both wrong
    true_negative = 5,
    false_positive = 6,
};

/// For forged truth the prediction must carry a character (C-type); throws
/// InvalidArgument otherwise.
ResultType classify_result_type(const clf::Prediction& prediction, const synth::GlyphSample& truth);

/// Types 1 and 2 count as true positives; character errors are ignored.
constexpr bool is_true_positive(ResultType t) { return t == ResultType::type1 || t == ResultType::type2; }

/// Result types (rows) by forged-font character class (columns).
class ModifiedConfusionMatrix {
public:
    ModifiedConfusionMatrix() = default;
    explicit ModifiedConfusionMatrix(int alphabet_size);
    /// rows[r][c] with r = result type - 1.
    static ModifiedConfusionMatrix from_rows(const std::array<std::vector<std::uint64_t>, 4>& rows);

    int alphabet_size() const { return static_cast<int>(cols_.size()); }
    std::uint64_t at(int type, int char_class) const;
    void add(int type, int char_class, std::uint64_t n = 1);

    std::uint64_t column_sum(int char_class) const;
    /// Sum of rows 1+2 (font correct) for one class.
    std::uint64_t font_correct(int char_class) const;
    /// Sum of rows 3+4 (font wrong) for one class.
    std::uint64_t font_wrong(int char_class) const;
    std::uint64_t total_font_correct() const;
    std::uint64_t total_font_wrong() const;
    std::array<std::vector<std::uint64_t>, 4> rows() const;

    /// rows 1+2 == tp and rows 3+4 == fn.
    bool consistent_with(const BinaryCounts& counts) const;

    friend bool operator==(const ModifiedConfusionMatrix&, const ModifiedConfusionMatrix&) = default;

private:
    void check_class(int char_class) const;
    std::vector<std::array<std::uint64_t, 4>> cols_;
};

void to_json(nlohmann::json& j, const ModifiedConfusionMatrix& m);
void from_json(const nlohmann::json& j, ModifiedConfusionMatrix& m);

/// Sensitivity with the given classes dropped. Throws DataError when no
/// forged sample remains.
double exclusion_sensitivity(const ModifiedConfusionMatrix& matrix, std::span<const int> excluded);

/// Sensitivity with every forged sample of a forced class counted as TP.
/// Throws DataError if the matrix disagrees with base.
double force_forged_sensitivity(const ModifiedConfusionMatrix& matrix, const BinaryCounts& base,
                                std::span<const int> forced);

/// (rows 3+4) / column sum per class; 0 for empty columns.
std::vector<double> font_misclassification_rates(const ModifiedConfusionMatrix& matrix);

/// Percentage with two decimals, rounded half-up: 0.9076513 -> "90.77".
std::string format_percent(double fraction);
/// Exact integer version of format_percent(num / den).
std::string format_percent(std::uint64_t num, std::uint64_t den);

struct TestSetResult {
    std::string name;
    bool forged = false;
    std::string dataset_hash;
    BinaryCounts counts;
};

struct Analysis {
    std::vector<int> excluded;
    std::vector<int> forced;
    std::optional<double> exclusion_sensitivity;
    std::optional<double> force_forged_sensitivity;
};

struct EvalReport {
    static constexpr int kSchemaVersion = 1;

    clf::ClassifierKind kind = clf::ClassifierKind::c_type;
    int alphabet_size = synth::kDigitAlphabetSize;
    std::vector<TestSetResult> sets;
    BinaryCounts overall;
    /// C-type only.
    std::optional<ModifiedConfusionMatrix> matrix;
    Analysis analysis;
    std::string model_hash;
    std::string tool_version;
    nlohmann::json config = nlohmann::json::object();

    double sensitivity() const { return overall.sensitivity(); }
    double specificity() const { return overall.specificity(); }
};

/// Runs the model over one genuine set and any number of forged sets.
/// Throws DataError on empty sets, mislabeled sets or alphabet mismatch and
/// InvalidArgument for plain models.
EvalReport evaluate(const clf::TrainedModel& model, const synth::Dataset& negative,
                    std::span<const synth::Dataset> positives);

/// Fills report.analysis from the matrix. Without a matrix, throws
/// InvalidArgument if any class list is non-empty.
void apply_analysis(EvalReport& report, std::vector<int> excluded, std::vector<int> forced);

enum class ReportFormat { json, csv };

/// JSON: the full report. CSV: the counts table, a blank line, then the
/// result-type table (one row per type, one column per class).
std::string render_report(const EvalReport& report, ReportFormat format);
/// Inverse of render_report. CSV input restores counts and matrix only.
EvalReport parse_report(std::string_view text, ReportFormat format);
void save_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);
EvalReport load_report(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// Plain-text tables in the layout of the reference tables.
std::string summary_text(const EvalReport& report);

} // namespace fontauth::metrics
