#include "fontauth/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fontauth/common/binary_io.hpp"
#include "fontauth/common/errors.hpp"
#include "fontauth/version.hpp"

namespace fontauth::metrics {

using nlohmann::json;

double BinaryCounts::sensitivity() const {
    if (tp + fn == 0) throw DataError("sensitivity: no forged samples");
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double BinaryCounts::specificity() const {
    if (tn + fp == 0) throw DataError("specificity: no genuine samples");
    return static_cast<double>(tn) / static_cast<double>(tn + fp);
}

BinaryCounts& BinaryCounts::operator+=(const BinaryCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

void to_json(json& j, const BinaryCounts& c) {
    j = json{{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
}

void from_json(const json& j, BinaryCounts& c) {
    c.tp = j.at("tp").get<std::uint64_t>();
    c.tn = j.at("tn").get<std::uint64_t>();
    c.fp = j.at("fp").get<std::uint64_t>();
    c.fn = j.at("fn").get<std::uint64_t>();
}

ResultType classify_result_type(const clf::Prediction& prediction, const synth::GlyphSample& truth) {
    if (!truth.forged) return prediction.forged ? ResultType::false_positive : ResultType::true_negative;
    if (!prediction.char_index)
        throw InvalidArgument("result types 1-4 need a character prediction");
    const bool font_ok = prediction.forged;
    const bool char_ok = *prediction.char_index == truth.char_index;
    if (font_ok) return char_ok ? ResultType::type1 : ResultType::type2;
    return char_ok ? ResultType::type3 : ResultType::type4;
}

// ---------------------------------------------------------------------------

ModifiedConfusionMatrix::ModifiedConfusionMatrix(int alphabet_size) {
    if (alphabet_size < 1) throw InvalidArgument("confusion matrix needs at least one class");
    cols_.assign(static_cast<std::size_t>(alphabet_size), {});
}

ModifiedConfusionMatrix ModifiedConfusionMatrix::from_rows(const std::array<std::vector<std::uint64_t>, 4>& rows) {
    const auto m = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != m) throw DataError("confusion matrix rows differ in length");
    ModifiedConfusionMatrix out(static_cast<int>(m));
    for (int t = 0; t < 4; ++t)
        for (std::size_t c = 0; c < m; ++c) out.cols_[c][static_cast<std::size_t>(t)] = rows[static_cast<std::size_t>(t)][c];
    return out;
}

void ModifiedConfusionMatrix::check_class(int char_class) const {
    if (char_class < 0 || char_class >= alphabet_size())
        throw InvalidArgument("character class " + std::to_string(char_class) + " out of range");
}

std::uint64_t ModifiedConfusionMatrix::at(int type, int char_class) const {
    check_class(char_class);
    if (type < 1 || type > 4) throw InvalidArgument("result type must be 1..4");
    return cols_[static_cast<std::size_t>(char_class)][static_cast<std::size_t>(type - 1)];
}

void ModifiedConfusionMatrix::add(int type, int char_class, std::uint64_t n) {
    check_class(char_class);
    if (type < 1 || type > 4) throw InvalidArgument("result type must be 1..4");
    cols_[static_cast<std::size_t>(char_class)][static_cast<std::size_t>(type - 1)] += n;
}

std::uint64_t ModifiedConfusionMatrix::column_sum(int c) const {
    return font_correct(c) + font_wrong(c);
}

std::uint64_t ModifiedConfusionMatrix::font_correct(int c) const {
    check_class(c);
    const auto& col = cols_[static_cast<std::size_t>(c)];
    return col[0] + col[1];
}

std::uint64_t ModifiedConfusionMatrix::font_wrong(int c) const {
    check_class(c);
    const auto& col = cols_[static_cast<std::size_t>(c)];
    return col[2] + col[3];
}

std::uint64_t ModifiedConfusionMatrix::total_font_correct() const {
    std::uint64_t s = 0;
    for (int c = 0; c < alphabet_size(); ++c) s += font_correct(c);
    return s;
}

std::uint64_t ModifiedConfusionMatrix::total_font_wrong() const {
    std::uint64_t s = 0;
    for (int c = 0; c < alphabet_size(); ++c) s += font_wrong(c);
    return s;
}

std::array<std::vector<std::uint64_t>, 4> ModifiedConfusionMatrix::rows() const {
    std::array<std::vector<std::uint64_t>, 4> out;
    for (std::size_t t = 0; t < 4; ++t) {
        out[t].reserve(cols_.size());
        for (const auto& col : cols_) out[t].push_back(col[t]);
    }
    return out;
}

bool ModifiedConfusionMatrix::consistent_with(const BinaryCounts& counts) const {
    return total_font_correct() == counts.tp && total_font_wrong() == counts.fn;
}

void to_json(json& j, const ModifiedConfusionMatrix& m) {
    j = json{{"rows", m.rows()}};
}

void from_json(const json& j, ModifiedConfusionMatrix& m) {
    const auto& rows = j.at("rows");
    if (!rows.is_array() || rows.size() != 4) throw FormatError("confusion matrix needs 4 rows");
    std::array<std::vector<std::uint64_t>, 4> r;
    for (std::size_t t = 0; t < 4; ++t) r[t] = rows[t].get<std::vector<std::uint64_t>>();
    m = ModifiedConfusionMatrix::from_rows(r);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<bool> class_mask(const ModifiedConfusionMatrix& matrix, std::span<const int> classes) {
    std::vector<bool> mask(static_cast<std::size_t>(matrix.alphabet_size()), false);
    for (int c : classes) {
        if (c < 0 || c >= matrix.alphabet_size())
            throw InvalidArgument("character class " + std::to_string(c) + " out of range");
        mask[static_cast<std::size_t>(c)] = true;
    }
    return mask;
}

} // namespace

double exclusion_sensitivity(const ModifiedConfusionMatrix& matrix, std::span<const int> excluded) {
    const auto mask = class_mask(matrix, excluded);
    std::uint64_t tp = 0, fn = 0;
    for (int c = 0; c < matrix.alphabet_size(); ++c) {
        if (mask[static_cast<std::size_t>(c)]) continue;
        tp += matrix.font_correct(c);
        fn += matrix.font_wrong(c);
    }
    if (tp + fn == 0) throw DataError("exclusion leaves no forged samples");
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double force_forged_sensitivity(const ModifiedConfusionMatrix& matrix, const BinaryCounts& base,
                                std::span<const int> forced) {
    if (!matrix.consistent_with(base)) throw DataError("confusion matrix does not match tp/fn counts");
    const auto mask = class_mask(matrix, forced);
    std::uint64_t tp = 0, fn = 0;
    for (int c = 0; c < matrix.alphabet_size(); ++c) {
        if (mask[static_cast<std::size_t>(c)]) {
            tp += matrix.column_sum(c);
        } else {
            tp += matrix.font_correct(c);
            fn += matrix.font_wrong(c);
        }
    }
    if (tp + fn == 0) throw DataError("no forged samples");
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::vector<double> font_misclassification_rates(const ModifiedConfusionMatrix& matrix) {
    std::vector<double> out;
    for (int c = 0; c < matrix.alphabet_size(); ++c) {
        const auto n = matrix.column_sum(c);
        out.push_back(n == 0 ? 0.0 : static_cast<double>(matrix.font_wrong(c)) / static_cast<double>(n));
    }
    return out;
}

namespace {

std::string hundredths(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(v / 100),
                  static_cast<unsigned long long>(v % 100));
    return buf;
}

} // namespace

std::string format_percent(double fraction) {
    if (!std::isfinite(fraction) || fraction < 0.0) throw InvalidArgument("percent of a negative or non-finite value");
    // The 1e-9 nudge keeps values like 0.12345 (stored as 0.1234499...) on the
    // half-up side.
    const double scaled = std::floor(fraction * 10000.0 + 0.5 + 1e-9);
    return hundredths(static_cast<std::uint64_t>(scaled));
}

std::string format_percent(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw InvalidArgument("percent with zero denominator");
    const auto v = (num * 20000 + den) / (2 * den);
    return hundredths(v);
}

// ---------------------------------------------------------------------------

EvalReport evaluate(const clf::TrainedModel& model, const synth::Dataset& negative,
                    std::span<const synth::Dataset> positives) {
    if (model.spec.kind == clf::ClassifierKind::plain)
        throw InvalidArgument("evaluate needs a model with a font output");
    if (positives.empty()) throw DataError("evaluate: no forged test set");

    EvalReport report;
    report.kind = model.spec.kind;
    report.alphabet_size = model.spec.alphabet_size;
    report.model_hash = model.content_hash();
    report.tool_version = std::string(kToolVersion);
    if (report.kind == clf::ClassifierKind::c_type) report.matrix = ModifiedConfusionMatrix(report.alphabet_size);

    auto run = [&](const synth::Dataset& ds, bool forged, std::string name) {
        if (ds.samples.empty()) throw DataError("evaluate: empty test set '" + name + "'");
        if (ds.alphabet_size != model.spec.alphabet_size)
            throw DataError("evaluate: alphabet size of '" + name + "' differs from the model");
        std::vector<synth::GlyphImage> images;
        images.reserve(ds.samples.size());
        for (const auto& s : ds.samples) {
            if (s.forged != forged)
                throw DataError("evaluate: set '" + name + "' mixes genuine and forged samples");
            if (s.char_index < 0 || s.char_index >= ds.alphabet_size)
                throw DataError("evaluate: character index out of range in '" + name + "'");
            images.push_back(s.image);
        }
        const auto preds = clf::predict_batch(model, images);

        TestSetResult res{std::move(name), forged, ds.content_hash(), {}};
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const auto& p = preds[i];
            const auto& s = ds.samples[i];
            if (!forged) {
                (p.forged ? res.counts.fp : res.counts.tn) += 1;
                continue;
            }
            (p.forged ? res.counts.tp : res.counts.fn) += 1;
            if (report.matrix)
                report.matrix->add(static_cast<int>(classify_result_type(p, s)), s.char_index);
        }
        report.overall += res.counts;
        report.sets.push_back(std::move(res));
    };

    run(negative, false, "negative");
    for (std::size_t i = 0; i < positives.size(); ++i) run(positives[i], true, "positive-" + std::to_string(i));
    return report;
}

void apply_analysis(EvalReport& report, std::vector<int> excluded, std::vector<int> forced) {
    std::ranges::sort(excluded);
    excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
    std::ranges::sort(forced);
    forced.erase(std::unique(forced.begin(), forced.end()), forced.end());

    Analysis a;
    a.excluded = excluded;
    a.forced = forced;
    if (!report.matrix) {
        if (!excluded.empty() || !forced.empty())
            throw InvalidArgument("class analyses need a C-type report with a confusion matrix");
        report.analysis = a;
        return;
    }
    if (!excluded.empty()) a.exclusion_sensitivity = exclusion_sensitivity(*report.matrix, excluded);
    if (!forced.empty()) a.force_forged_sensitivity = force_forged_sensitivity(*report.matrix, report.overall, forced);
    report.analysis = a;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const EvalReport& r) {
    j = json::object();
    j["schema"] = "fontauth.eval_report";
    j["schema_version"] = EvalReport::kSchemaVersion;
    j["kind"] = std::string(clf::to_string(r.kind));
    j["alphabet_size"] = r.alphabet_size;
    json sets = json::array();
    for (const auto& s : r.sets)
        sets.push_back({{"name", s.name}, {"forged", s.forged}, {"dataset_hash", s.dataset_hash}, {"counts", s.counts}});
    j["sets"] = sets;
    j["overall"] = r.overall;
    if (r.overall.tp + r.overall.fn > 0) j["sensitivity"] = r.overall.sensitivity();
    if (r.overall.tn + r.overall.fp > 0) j["specificity"] = r.overall.specificity();
    j["matrix"] = r.matrix ? json(*r.matrix) : json(nullptr);
    json a = {{"excluded", r.analysis.excluded}, {"forced", r.analysis.forced}};
    a["exclusion_sensitivity"] = r.analysis.exclusion_sensitivity ? json(*r.analysis.exclusion_sensitivity) : json(nullptr);
    a["force_forged_sensitivity"] =
        r.analysis.force_forged_sensitivity ? json(*r.analysis.force_forged_sensitivity) : json(nullptr);
    j["analysis"] = a;
    j["provenance"] = {{"model_hash", r.model_hash}, {"tool_version", r.tool_version}, {"config", r.config}};
}

void from_json(const json& j, EvalReport& r) {
    if (j.value("schema", std::string{}) != "fontauth.eval_report") throw FormatError("not an evaluation report");
    const int version = j.at("schema_version").get<int>();
    if (version != EvalReport::kSchemaVersion)
        throw FormatError("unsupported report schema version " + std::to_string(version));
    r = EvalReport{};
    r.kind = clf::parse_kind(j.at("kind").get<std::string>());
    r.alphabet_size = j.at("alphabet_size").get<int>();
    for (const auto& s : j.value("sets", json::array()))
        r.sets.push_back({s.at("name").get<std::string>(), s.at("forged").get<bool>(),
                          s.value("dataset_hash", std::string{}), s.at("counts").get<BinaryCounts>()});
    r.overall = j.at("overall").get<BinaryCounts>();
    if (j.contains("matrix") && !j["matrix"].is_null()) {
        r.matrix = j["matrix"].get<ModifiedConfusionMatrix>();
        if (r.matrix->alphabet_size() != r.alphabet_size) throw FormatError("matrix width differs from alphabet size");
        if (!r.matrix->consistent_with(r.overall)) throw DataError("matrix does not match tp/fn counts");
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        r.analysis.excluded = a.value("excluded", std::vector<int>{});
        r.analysis.forced = a.value("forced", std::vector<int>{});
        if (a.contains("exclusion_sensitivity") && !a["exclusion_sensitivity"].is_null())
            r.analysis.exclusion_sensitivity = a["exclusion_sensitivity"].get<double>();
        if (a.contains("force_forged_sensitivity") && !a["force_forged_sensitivity"].is_null())
            r.analysis.force_forged_sensitivity = a["force_forged_sensitivity"].get<double>();
    }
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        r.model_hash = p.value("model_hash", std::string{});
        r.tool_version = p.value("tool_version", std::string{});
        r.config = p.value("config", json::object());
    }
}

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_count(const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        throw FormatError("bad count '" + s + "'");
    }
    if (used != s.size() || s.empty() || s[0] == '-') throw FormatError("bad count '" + s + "'");
    return v;
}

std::string csv_text(const EvalReport& r) {
    std::ostringstream os;
    os << "set,forged,tp,tn,fp,fn,specificity,sensitivity\n";
    auto row = [&](const std::string& name, const std::string& forged, const BinaryCounts& c) {
        os << name << ',' << forged << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ','
           << (c.tn + c.fp ? format_percent(c.tn, c.tn + c.fp) : "") << ','
           << (c.tp + c.fn ? format_percent(c.tp, c.tp + c.fn) : "") << '\n';
    };
    for (const auto& s : r.sets) row(s.name, s.forged ? "1" : "0", s.counts);
    row("overall", "", r.overall);
    if (r.matrix) {
        os << "\ntype";
        for (int c = 0; c < r.matrix->alphabet_size(); ++c) os << ',' << c << "_w";
        os << '\n';
        const auto rows = r.matrix->rows();
        for (std::size_t t = 0; t < 4; ++t) {
            os << t + 1;
            for (auto v : rows[t]) os << ',' << v;
            os << '\n';
        }
    }
    return os.str();
}

EvalReport parse_csv(std::string_view text) {
    EvalReport r;
    std::vector<std::string> lines;
    for (auto& l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines.push_back(l);
    }
    std::size_t i = 0;
    if (lines.empty() || lines[0].rfind("set,forged,tp,tn,fp,fn", 0) != 0) throw FormatError("missing counts header");
    bool have_overall = false;
    for (i = 1; i < lines.size() && !lines[i].empty(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() < 6) throw FormatError("short counts row");
        BinaryCounts c{parse_count(f[2]), parse_count(f[3]), parse_count(f[4]), parse_count(f[5])};
        if (f[0] == "overall") {
            r.overall = c;
            have_overall = true;
        } else {
            r.sets.push_back({f[0], f[1] == "1", {}, c});
        }
    }
    if (!have_overall) throw FormatError("missing overall row");
    while (i < lines.size() && lines[i].empty()) ++i;
    if (i == lines.size()) {
        r.kind = clf::ClassifierKind::cprime_type;
        return r;
    }
    const auto header = split(lines[i], ',');
    if (header.empty() || header[0] != "type") throw FormatError("missing result-type header");
    const auto m = header.size() - 1;
    std::array<std::vector<std::uint64_t>, 4> rows;
    for (std::size_t t = 0; t < 4; ++t) {
        if (++i >= lines.size()) throw FormatError("missing result-type row");
        const auto f = split(lines[i], ',');
        if (f.size() != m + 1 || f[0] != std::to_string(t + 1)) throw FormatError("malformed result-type row");
        for (std::size_t c = 1; c <= m; ++c) rows[t].push_back(parse_count(f[c]));
    }
    r.matrix = ModifiedConfusionMatrix::from_rows(rows);
    r.alphabet_size = static_cast<int>(m);
    r.kind = clf::ClassifierKind::c_type;
    return r;
}

} // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    if (format == ReportFormat::csv) return csv_text(report);
    return json(report).dump(2) + "\n";
}

EvalReport parse_report(std::string_view text, ReportFormat format) {
    if (format == ReportFormat::csv) return parse_csv(text);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    try {
        return j.get<EvalReport>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

void save_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
    write_file_atomic(path, render_report(report, format));
}

EvalReport load_report(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto ext = path.extension().string();
    return parse_report(text, ext == ".csv" ? ReportFormat::csv : ReportFormat::json);
}

std::string summary_text(const EvalReport& r) {
    std::ostringstream os;
    const auto& c = r.overall;
    os << "classifier: " << clf::to_string(r.kind) << "\n";
    os << "TP\tTN\tFP\tFN\tSpecificity\tSensitivity\n";
    os << c.tp << '\t' << c.tn << '\t' << c.fp << '\t' << c.fn << '\t'
       << (c.tn + c.fp ? format_percent(c.tn, c.tn + c.fp) + "%" : "n/a") << '\t'
       << (c.tp + c.fn ? format_percent(c.tp, c.tp + c.fn) + "%" : "n/a") << '\n';
    if (r.matrix) {
        os << "\ntype";
        for (int k = 0; k < r.matrix->alphabet_size(); ++k) os << '\t' << k << "_w";
        os << '\n';
        const auto rows = r.matrix->rows();
        for (std::size_t t = 0; t < 4; ++t) {
            os << t + 1;
            for (auto v : rows[t]) os << '\t' << v;
            os << '\n';
        }
        os << "font error";
        for (double rate : font_misclassification_rates(*r.matrix)) os << '\t' << format_percent(rate) << '%';
        os << '\n';
    }
    auto list = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    if (r.analysis.exclusion_sensitivity)
        os << "\nsensitivity excluding {" << list(r.analysis.excluded) << "}: "
           << format_percent(*r.analysis.exclusion_sensitivity) << "%\n";
    if (r.analysis.force_forged_sensitivity)
        os << (r.analysis.exclusion_sensitivity ? "" : "\n") << "sensitivity forcing {" << list(r.analysis.forced)
           << "} forged: " << format_percent(*r.analysis.force_forged_sensitivity) << "%\n";
    return os.str();
}

} // namespace fontauth::metrics
