#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <ostream>

#include "fontauth/cli/cli.hpp"
#include "fontauth/common/errors.hpp"
#include "fontauth/metrics/metrics.hpp"
#include "fontauth/nncore/gradcheck.hpp"

namespace fontauth::cli {

namespace {

constexpr double kGradTolerance = 1e-4;

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

class Checker {
public:
    explicit Checker(std::ostream& out) : out_(out) {}

    void check(bool ok, const std::string& what, const std::string& detail = {}) {
        out_ << (ok ? "PASS " : "FAIL ") << what;
        if (!detail.empty()) out_ << "  (" << detail << ")";
        out_ << '\n';
        all_ &= ok;
    }
    bool all() const { return all_; }

private:
    std::ostream& out_;
    bool all_ = true;
};

void check_fixture(const std::filesystem::path& path, Checker& c) {
    const auto name = path.stem().string();
    std::ifstream in(path);
    const auto doc = nlohmann::json::parse(in);
    const auto report = doc.get<metrics::EvalReport>();
    const auto& exp = doc.at("expected");
    const auto& k = report.overall;

    const auto sens = metrics::format_percent(k.tp, k.tp + k.fn);
    const auto spec = metrics::format_percent(k.tn, k.tn + k.fp);
    c.check(sens == exp.at("sensitivity").get<std::string>(), name + " sensitivity", sens + "%");
    c.check(spec == exp.at("specificity").get<std::string>(), name + " specificity", spec + "%");

    if (report.matrix) {
        c.check(report.matrix->consistent_with(k), name + " matrix rows 1+2 = TP, rows 3+4 = FN",
                std::to_string(report.matrix->total_font_correct()) + " / " +
                    std::to_string(report.matrix->total_font_wrong()));
        c.check(metrics::exclusion_sensitivity(*report.matrix, {}) == k.sensitivity(),
                name + " empty exclusion equals overall sensitivity");
    }
    for (const auto& a : exp.at("analyses")) {
        const auto want = a.at("sensitivity").get<std::string>();
        if (a.contains("exclude")) {
            const auto cls = a["exclude"].get<std::vector<int>>();
            const auto got = metrics::format_percent(metrics::exclusion_sensitivity(*report.matrix, cls));
            c.check(got == want, name + " exclusion sensitivity " + a["exclude"].dump(), got + "%");
        } else {
            const auto cls = a.at("force_forged").get<std::vector<int>>();
            const auto got = metrics::format_percent(metrics::force_forged_sensitivity(*report.matrix, k, cls));
            c.check(got == want, name + " force-forged sensitivity " + a["force_forged"].dump(), got + "%");
        }
    }
}

} // namespace

bool run_selfcheck(const SelfcheckOptions& options, std::ostream& out) {
    namespace fs = std::filesystem;
    Checker c(out);

    std::vector<fs::path> fixtures;
    if (fs::is_directory(options.fixture_dir))
        for (const auto& e : fs::directory_iterator(options.fixture_dir))
            if (e.path().extension() == ".json") fixtures.push_back(e.path());
    std::ranges::sort(fixtures);
    c.check(!fixtures.empty(), "fixture files present", options.fixture_dir.string());
    for (const auto& f : fixtures) {
        try {
            check_fixture(f, c);
        } catch (const std::exception& e) {
            c.check(false, f.filename().string() + " loads", e.what());
        }
    }

    double worst = 0.0;
    std::size_t checked = 0;
    for (int i = 0; i < options.gradcheck_cases; ++i) {
        const auto tc = nn::random_gradcheck_case(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
        const auto r = nn::gradient_check(tc.network, tc.batch, tc.labels);
        worst = std::max(worst, r.max_rel_error);
        checked += r.checked;
    }
    c.check(worst < kGradTolerance && (options.gradcheck_cases == 0 || checked > 0),
            "gradient check on " + std::to_string(options.gradcheck_cases) + " random networks",
            "max relative error " + sci(worst));

    const auto tc = nn::random_gradcheck_case(options.seed);
    const auto probs = nn::softmax(nn::forward(tc.network, tc.batch));
    double dev = 0.0;
    for (std::size_t b = 0; b < probs.shape[0]; ++b) {
        double s = 0.0;
        for (double p : probs.row(b)) s += p;
        dev = std::max(dev, std::abs(s - 1.0));
    }
    c.check(dev <= 1e-9, "softmax rows sum to 1");
    return c.all();
}

} // namespace fontauth::cli
