#include <CLI11.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

#include "fontauth/cli/cli.hpp"
#include "fontauth/common/binary_io.hpp"
#include "fontauth/common/errors.hpp"
#include "fontauth/metrics/metrics.hpp"
#include "fontauth/synthgen/dataset.hpp"
#include "fontauth/synthgen/font_registry.hpp"
#include "fontauth/verdict/verdict.hpp"
#include "fontauth/version.hpp"

namespace fontauth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by every command that reads a RunConfig. Optional values stay
// empty unless given, so they only override the config file when present.
struct CommonFlags {
    std::string config;
    std::optional<std::string> registry;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> kind;
    std::optional<int> per_cell;
    std::optional<int> per_char;
    std::optional<double> threshold;
    std::optional<unsigned> workers;
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<int> batch_size;

    RunConfig resolve() const {
        RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
        if (registry) cfg.registry = *registry;
        if (seed) cfg.seed = *seed;
        if (kind) cfg.kind = clf::parse_kind(*kind);
        if (per_cell) cfg.per_cell = *per_cell;
        if (per_char) cfg.per_char = *per_char;
        if (threshold) cfg.threshold = *threshold;
        if (workers) cfg.workers = *workers;
        if (epochs) cfg.train.epochs = *epochs;
        if (lr) cfg.train.learning_rate = *lr;
        if (batch_size) cfg.train.batch_size = *batch_size;
        cfg.validate();
        return cfg;
    }
};

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw DataError(what + " not found: " + path);
}

void require_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw DataError("output directory does not exist: " + parent.string());
}

json envelope(const RunConfig& cfg) {
    return json{{"tool_version", std::string(kToolVersion)}, {"config", to_json(cfg)}};
}

// --------------------------------------------------------------------------- synth

struct SynthArgs {
    CommonFlags common;
    std::string purpose = "train";
    std::string role = "genuine";
    std::vector<std::string> fonts;
    std::string out;
    std::string export_dir;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const auto cfg = a.common.resolve();
    require_parent(a.out);
    require_file(cfg.registry.string(), "font registry");
    const auto registry = synth::FontRegistry::load(cfg.registry);
    synth::SynthesisOptions opts;
    opts.workers = cfg.workers;

    synth::Dataset ds;
    if (a.purpose == "train") {
        if (!a.fonts.empty()) throw InvalidArgument("--font applies to test sets only");
        ds = synth::synthesize_dataset(registry, cfg.per_cell, cfg.render, cfg.augment, cfg.seed, opts);
    } else if (a.purpose == "test") {
        const auto role = synth::parse_font_role(a.role);
        std::vector<synth::FontAsset> fonts;
        if (a.fonts.empty()) {
            fonts = role == synth::FontRole::genuine ? registry.genuine
                    : role == synth::FontRole::forged_proxy ? registry.forged
                                                            : registry.held_out;
        } else {
            for (const auto& id : a.fonts) {
                const auto& f = registry.find(id);
                if (f.role != role) throw InvalidArgument("font '" + id + "' does not have role " + a.role);
                fonts.push_back(f);
            }
        }
        ds = synth::synthesize_font_set(fonts, role != synth::FontRole::genuine, cfg.per_char, cfg.render,
                                        cfg.augment, cfg.seed, opts);
    } else {
        throw InvalidArgument("--purpose must be train or test");
    }

    synth::save_dataset(ds, a.out);
    if (!a.export_dir.empty()) synth::export_sidecar(ds, a.export_dir);

    out << "samples per cell (character: genuine forged)\n";
    const auto counts = ds.cell_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        out << "  " << synth::kDigits[c] << ": " << counts[c][0] << ' ' << counts[c][1] << '\n';
    out << "wrote " << a.out << " (" << ds.samples.size() << " samples, sha256 " << ds.content_hash() << ")\n";
    return kOk;
}

// --------------------------------------------------------------------------- train

struct TrainArgs {
    CommonFlags common;
    std::string train;
    std::string val;
    std::string out;
    std::string log;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    auto cfg = a.common.resolve();
    require_file(a.train, "training set");
    require_file(a.val, "validation set");
    require_parent(a.out);
    const auto log_path = a.log.empty() ? a.out + ".log.json" : a.log;
    require_parent(log_path);

    const auto train_set = synth::load_dataset(a.train);
    const auto val_set = synth::load_dataset(a.val);
    auto tcfg = cfg.train;
    tcfg.seed = cfg.seed;
    cfg.train = tcfg;

    out << "epoch  lr        loss      val_font  val_char\n";
    auto on_epoch = [&](const clf::EpochLog& e) {
        out << std::setw(5) << e.epoch << "  " << std::fixed << std::setprecision(6) << e.learning_rate << "  "
            << e.train_loss << "  " << std::setprecision(4) << e.val_font_accuracy << "    " << e.val_char_accuracy
            << '\n'
            << std::defaultfloat;
    };
    const auto result = clf::train({cfg.kind, train_set.alphabet_size}, train_set, val_set, tcfg, on_epoch);

    clf::save_model(result.model, a.out);
    auto log = envelope(cfg);
    log["model_hash"] = result.model.content_hash();
    log["train_dataset_hash"] = result.model.provenance.train_dataset_hash;
    log["val_dataset_hash"] = result.model.provenance.val_dataset_hash;
    log["best_epoch"] = result.model.provenance.best_epoch;
    log["epochs"] = result.log;
    write_file_atomic(log_path, log.dump(2) + "\n");

    out << "best epoch " << result.model.provenance.best_epoch << "\n";
    out << "model hash " << result.model.content_hash() << "\n";
    return kOk;
}

// --------------------------------------------------------------------------- eval / report

struct EvalArgs {
    CommonFlags common;
    std::string model;
    std::string negative;
    std::vector<std::string> positives;
    std::string report_in;
    std::string exclude;
    std::string force_forged;
    std::string out;
    std::string csv;
};

void write_outputs(const metrics::EvalReport& report, const std::string& json_path, const std::string& csv_path) {
    if (!json_path.empty()) metrics::save_report(report, json_path, metrics::ReportFormat::json);
    if (!csv_path.empty()) metrics::save_report(report, csv_path, metrics::ReportFormat::csv);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (!a.out.empty()) require_parent(a.out);
    if (!a.csv.empty()) require_parent(a.csv);
    const auto excluded = parse_class_list(a.exclude);
    const auto forced = parse_class_list(a.force_forged);

    metrics::EvalReport report;
    if (!a.report_in.empty()) {
        if (!a.model.empty() || !a.negative.empty() || !a.positives.empty())
            throw InvalidArgument("--report-in cannot be combined with --model/--negative/--positive");
        require_file(a.report_in, "report");
        report = metrics::load_report(a.report_in);
    } else {
        if (a.model.empty() || a.negative.empty() || a.positives.empty())
            throw InvalidArgument("eval needs --model, --negative and at least one --positive (or --report-in)");
        const auto cfg = a.common.resolve();
        require_file(a.model, "model");
        require_file(a.negative, "negative set");
        for (const auto& p : a.positives) require_file(p, "positive set");
        const auto model = clf::load_model(a.model);
        const auto negative = synth::load_dataset(a.negative);
        std::vector<synth::Dataset> positives;
        for (const auto& p : a.positives) positives.push_back(synth::load_dataset(p));
        report = metrics::evaluate(model, negative, positives);
        report.sets[0].name = fs::path(a.negative).filename().string();
        for (std::size_t i = 0; i < a.positives.size(); ++i)
            report.sets[i + 1].name = fs::path(a.positives[i]).filename().string();
        report.config = to_json(cfg);
    }
    metrics::apply_analysis(report, excluded, forced);
    out << metrics::summary_text(report);
    write_outputs(report, a.out, a.csv);
    return kOk;
}

struct ReportArgs {
    std::string in;
    std::string exclude;
    std::string force_forged;
    std::string json_out;
    std::string csv_out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    require_file(a.in, "report");
    if (!a.json_out.empty()) require_parent(a.json_out);
    if (!a.csv_out.empty()) require_parent(a.csv_out);
    auto report = metrics::load_report(a.in);
    if (!a.exclude.empty() || !a.force_forged.empty())
        metrics::apply_analysis(report, parse_class_list(a.exclude), parse_class_list(a.force_forged));
    out << metrics::summary_text(report);
    write_outputs(report, a.json_out, a.csv_out);
    return kOk;
}

// --------------------------------------------------------------------------- verify

struct VerifyArgs {
    CommonFlags common;
    std::string std_model;
    std::string auth_model;
    std::string field;
    std::string reliability;
    double floor = verdict::kDefaultReliabilityFloor;
    bool flag_below_floor = false;
    std::string out;
};

verdict::ReliabilityTable load_reliability(const std::string& path, const verdict::ReliabilityOptions& opts) {
    const auto bytes = read_file(path);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError("reliability source is not valid JSON: " + std::string(e.what()));
    }
    if (doc.value("schema", std::string{}) == "fontauth.eval_report") {
        const auto report = doc.get<metrics::EvalReport>();
        if (!report.matrix) throw DataError("reliability report has no confusion matrix");
        return verdict::build_reliability_table(*report.matrix, opts);
    }
    return doc.get<verdict::ReliabilityTable>();
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const auto cfg = a.common.resolve();
    require_file(a.std_model, "standard model");
    require_file(a.auth_model, "authenticity model");
    if (!a.reliability.empty()) require_file(a.reliability, "reliability source");
    if (!a.out.empty()) require_parent(a.out);
    const auto images = field_images(a.field);

    const auto std_model = clf::load_model(a.std_model);
    const auto auth_model = clf::load_model(a.auth_model);
    const auto table = a.reliability.empty()
                           ? verdict::ReliabilityTable::uniform(std_model.spec.alphabet_size)
                           : load_reliability(a.reliability, {a.floor, a.flag_below_floor});

    std::vector<synth::GlyphImage> glyphs;
    json inputs = json::array();
    for (const auto& p : images) {
        glyphs.push_back(synth::load_glyph_image(p));
        inputs.push_back({{"path", p.filename().string()}, {"sha256", synth::file_sha256(p)}});
    }
    auto result = verdict::field_verdict(verdict::assess_field(std_model, auth_model, glyphs, table), cfg.threshold);

    json doc = result;
    doc["schema"] = "fontauth.verdict";
    doc["schema_version"] = 1;
    doc["provenance"] = envelope(cfg);
    doc["provenance"]["std_model_hash"] = std_model.content_hash();
    doc["provenance"]["auth_model_hash"] = auth_model.content_hash();
    doc["provenance"]["inputs"] = inputs;
    doc["provenance"]["reliability"] = table;
    if (!a.out.empty()) write_file_atomic(a.out, doc.dump(2) + "\n");

    out << "pos  std  conf    auth      flagged  weight\n";
    for (const auto& s : result.assessments) {
        out << std::setw(3) << s.position << "  " << std::setw(3) << s.std_char << "  " << std::fixed
            << std::setprecision(3) << s.std_confidence << "   " << (s.auth_char ? std::to_string(*s.auth_char) : "-")
            << (s.auth_forged ? " forged " : " genuine") << "  " << (s.flagged ? "yes" : "no ") << "      "
            << s.weight << '\n'
            << std::defaultfloat;
    }
    out << "flagged weight fraction " << std::fixed << std::setprecision(4) << result.flagged_weight_fraction
        << std::defaultfloat << " (threshold " << result.threshold << ")"
        << (result.unweighted_fallback ? " [all weights zero, unweighted]" : "") << '\n';
    out << "verdict: " << (result.forged ? "forged" : "genuine") << '\n';
    return kOk;
}

// --------------------------------------------------------------------------- wiring

void add_common(CLI::App* app, CommonFlags& f, bool training_flags) {
    app->add_option("--config", f.config, "JSON run configuration; flags override it");
    app->add_option("--registry", f.registry, "font registry manifest");
    app->add_option("--seed", f.seed, "random seed");
    app->add_option("--workers", f.workers, "worker threads for synthesis");
    if (training_flags) {
        app->add_option("--kind", f.kind, "classifier kind")->check(CLI::IsMember({"c", "cprime", "plain"}));
        app->add_option("--epochs", f.epochs, "training epochs");
        app->add_option("--lr", f.lr, "learning rate");
        app->add_option("--batch-size", f.batch_size, "mini-batch size");
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Font authenticity toolkit: synthesize glyph sets, train and evaluate classifiers, verify fields",
                 "fontauth"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "render and augment a glyph dataset");
    add_common(synth_cmd, synth_args.common, false);
    synth_cmd->add_option("--purpose", synth_args.purpose, "train (balanced cells) or test (one font role)")
        ->check(CLI::IsMember({"train", "test"}));
    synth_cmd->add_option("--role", synth_args.role, "font role for test sets")
        ->check(CLI::IsMember({"genuine", "forged_proxy", "held_out"}));
    synth_cmd->add_option("--font", synth_args.fonts, "restrict a test set to these font ids");
    synth_cmd->add_option("--per-cell", synth_args.common.per_cell, "training samples per (character, font bit)");
    synth_cmd->add_option("--per-char", synth_args.common.per_char, "test samples per character");
    synth_cmd->add_option("--out", synth_args.out, "dataset file")->required();
    synth_cmd->add_option("--export-dir", synth_args.export_dir, "also write PGM crops and a CSV manifest here");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a classifier");
    add_common(train_cmd, train_args.common, true);
    train_cmd->add_option("--train", train_args.train, "training set")->required();
    train_cmd->add_option("--val", train_args.val, "validation set")->required();
    train_cmd->add_option("--out", train_args.out, "model file")->required();
    train_cmd->add_option("--log", train_args.log, "training log (default: <out>.log.json)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on genuine and forged test sets");
    add_common(eval_cmd, eval_args.common, false);
    eval_cmd->add_option("--model", eval_args.model, "model file");
    eval_cmd->add_option("--negative", eval_args.negative, "genuine test set");
    eval_cmd->add_option("--positive", eval_args.positives, "forged test set (repeatable)");
    eval_cmd->add_option("--report-in", eval_args.report_in, "recompute from a stored report instead of a model");
    eval_cmd->add_option("--exclude", eval_args.exclude, "character classes to drop, e.g. 0,8");
    eval_cmd->add_option("--force-forged", eval_args.force_forged, "character classes always treated as forged");
    eval_cmd->add_option("--out", eval_args.out, "JSON report");
    eval_cmd->add_option("--csv", eval_args.csv, "CSV tables");

    VerifyArgs verify_args;
    auto* verify_cmd = app.add_subcommand("verify", "judge a field of symbol crops");
    add_common(verify_cmd, verify_args.common, false);
    verify_cmd->add_option("--std-model", verify_args.std_model, "plain character model")->required();
    verify_cmd->add_option("--auth-model", verify_args.auth_model, "C-type authenticity model")->required();
    verify_cmd->add_option("--field", verify_args.field, "directory of crops or a list file")->required();
    verify_cmd->add_option("--threshold", verify_args.common.threshold, "forged iff flagged weight fraction > threshold");
    verify_cmd->add_option("--reliability", verify_args.reliability, "eval report or reliability table JSON");
    verify_cmd->add_option("--floor", verify_args.floor, "reliability floor");
    verify_cmd->add_flag("--flag-below-floor", verify_args.flag_below_floor,
                         "always flag classes whose reliability is below the floor");
    verify_cmd->add_option("--out", verify_args.out, "verdict JSON");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "print or convert a stored report");
    report_cmd->add_option("--in", report_args.in, "report (.json or .csv)")->required();
    report_cmd->add_option("--exclude", report_args.exclude, "character classes to drop");
    report_cmd->add_option("--force-forged", report_args.force_forged, "character classes always treated as forged");
    report_cmd->add_option("--json", report_args.json_out, "write JSON here");
    report_cmd->add_option("--csv", report_args.csv_out, "write CSV here");

    SelfcheckOptions self_opts;
    auto* self_cmd = app.add_subcommand("selfcheck", "reference-table oracles and gradient checks");
    self_cmd->add_option("--fixtures", self_opts.fixture_dir, "fixture directory");
    self_cmd->add_option("--gradcheck-cases", self_opts.gradcheck_cases, "random networks to check");
    self_cmd->add_option("--seed", self_opts.seed, "seed for the random networks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth_args, out);
        if (*train_cmd) return cmd_train(train_args, out);
        if (*eval_cmd) return cmd_eval(eval_args, out);
        if (*verify_cmd) return cmd_verify(verify_args, out);
        if (*report_cmd) return cmd_report(report_args, out);
        if (*self_cmd) return run_selfcheck(self_opts, out) ? kOk : kCheckFailure;
    } catch (const CheckFailure& e) {
        err << "check failed: " << e.what() << '\n';
        return kCheckFailure;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

} // namespace fontauth::cli
