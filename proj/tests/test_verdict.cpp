#include <doctest.h>

#include <cmath>

#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"
#include "fontauth/verdict/verdict.hpp"

using namespace fontauth;
using namespace fontauth::verdict;

namespace {

// Zero weights and one hot bias: the model answers `cls` for every image.
clf::TrainedModel constant_model(clf::ClassifierKind kind, int cls, float margin = 12.0f) {
    clf::TrainedModel m;
    m.spec = {kind, 10};
    m.network = clf::build_network(m.spec);
    m.network.params().back().bias.data[static_cast<std::size_t>(cls)] = margin;
    return m;
}

synth::GlyphImage blank() {
    synth::GlyphImage g;
    g.pixels.fill(1.0f);
    return g;
}

std::vector<SymbolAssessment> field(const std::vector<bool>& flags, const std::vector<double>& weights) {
    std::vector<SymbolAssessment> out;
    for (std::size_t i = 0; i < flags.size(); ++i)
        out.push_back(make_assessment(static_cast<int>(i), 5, 0.9, 5, flags[i], weights[i]));
    return out;
}

std::vector<SymbolAssessment> uniform_field(const std::vector<bool>& flags) {
    return field(flags, std::vector<double>(flags.size(), 1.0));
}

metrics::ModifiedConfusionMatrix passport_matrix() {
    return metrics::ModifiedConfusionMatrix::from_rows({{
        {34265, 30917, 22365, 10700, 8767, 8640, 8915, 9331, 10305, 15946},
        {173, 10, 59, 160, 110, 116, 94, 265, 27, 72},
        {5720, 2222, 731, 1522, 741, 1165, 588, 533, 1952, 738},
        {45, 36, 47, 29, 26, 24, 37, 74, 24, 151},
    }});
}

metrics::ModifiedConfusionMatrix mrz_matrix() {
    return metrics::ModifiedConfusionMatrix::from_rows({{
        {29474, 37432, 24025, 13333, 13683, 17581, 14898, 14003, 16523, 21096},
        {125, 646, 1241, 320, 380, 255, 861, 210, 183, 216},
        {18475, 1216, 2101, 2361, 4432, 185, 305, 846, 195, 601},
        {127, 188, 264, 250, 229, 112, 381, 248, 82, 224},
    }});
}

} // namespace

TEST_CASE("symbol assessment examples") {
    const auto std5 = constant_model(clf::ClassifierKind::plain, 5);
    const auto img = blank();

    const auto agree = assess_symbol(std5, constant_model(clf::ClassifierKind::c_type, 5), img);
    CHECK(agree.std_char == 5);
    CHECK(agree.std_confidence > 0.99);
    CHECK(agree.auth_char == 5);
    CHECK_FALSE(agree.auth_forged);
    CHECK_FALSE(agree.flagged);
    CHECK(agree.weight == doctest::Approx(agree.std_confidence));

    const auto forged = assess_symbol(std5, constant_model(clf::ClassifierKind::c_type, 15), img);
    CHECK(forged.auth_char == 5);
    CHECK(forged.auth_forged);
    CHECK(forged.flagged);

    const auto mismatch = assess_symbol(std5, constant_model(clf::ClassifierKind::c_type, 3), img);
    CHECK(mismatch.auth_char == 3);
    CHECK_FALSE(mismatch.auth_forged);
    CHECK(mismatch.flagged);

    const auto binary = assess_symbol(std5, constant_model(clf::ClassifierKind::cprime_type, 0), img);
    CHECK_FALSE(binary.auth_char.has_value());
    CHECK_FALSE(binary.flagged);
}

TEST_CASE("assessment weight uses the class reliability") {
    const auto std1 = constant_model(clf::ClassifierKind::plain, 1);
    const auto auth = constant_model(clf::ClassifierKind::c_type, 1);
    const auto table = build_reliability_table(passport_matrix());
    const auto a = assess_symbol(std1, auth, blank(), table, 4);
    CHECK(a.position == 4);
    CHECK(a.weight == doctest::Approx(a.std_confidence * table.reliability[1]).epsilon(1e-12));
    CHECK(a.weight >= 0.0);
    CHECK(a.weight <= 1.0);

    const std::vector<synth::GlyphImage> images(3, blank());
    const auto all = assess_field(std1, auth, images, table);
    REQUIRE(all.size() == 3);
    CHECK(all[2].position == 2);
}

TEST_CASE("model kinds are checked") {
    const auto plain = constant_model(clf::ClassifierKind::plain, 5);
    const auto ctype = constant_model(clf::ClassifierKind::c_type, 5);
    const auto img = blank();
    CHECK_THROWS_AS(assess_symbol(ctype, ctype, img), InvalidArgument);
    CHECK_THROWS_AS(assess_symbol(plain, plain, img), InvalidArgument);
    auto wide = clf::TrainedModel{};
    wide.spec = {clf::ClassifierKind::c_type, 12};
    wide.network = clf::build_network(wide.spec);
    CHECK_THROWS_AS(assess_symbol(plain, wide, img), InvalidArgument);
    CHECK_THROWS_AS(assess_symbol(plain, ctype, img, ReliabilityTable::uniform(12)), InvalidArgument);
}

TEST_CASE("field decision examples") {
    const auto none = field_verdict(uniform_field(std::vector<bool>(6, false)));
    CHECK_FALSE(none.forged);
    CHECK(none.flagged_weight_fraction == 0.0);

    const auto all = field_verdict(uniform_field(std::vector<bool>(6, true)));
    CHECK(all.forged);
    CHECK(all.flagged_weight_fraction == 1.0);

    std::vector<bool> three(10, false);
    three[1] = three[4] = three[8] = true;
    const auto v = field_verdict(uniform_field(three), 0.25);
    CHECK(v.flagged_weight_fraction == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(v.forged);
    CHECK(v.threshold == 0.25);
    CHECK(v.assessments.size() == 10);

    std::vector<bool> one(10, false);
    one[6] = true;
    CHECK(field_verdict(uniform_field(one), 0.05).forged);
    CHECK_FALSE(field_verdict(uniform_field(one), 0.1).forged);
    CHECK_FALSE(field_verdict(uniform_field(one)).forged);
}

TEST_CASE("single-symbol fields follow the symbol") {
    for (double tau : {0.0, 0.2, 0.5, 0.999})
        for (bool f : {false, true})
            for (double w : {0.0, 0.3, 1.0}) CHECK(field_verdict(field({f}, {w}), tau).forged == f);
}

TEST_CASE("verdict properties on random fields") {
    Rng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(16);
        std::vector<bool> flags(n);
        std::vector<double> weights(n);
        for (std::size_t i = 0; i < n; ++i) {
            flags[i] = rng.uniform() < 0.3;
            weights[i] = rng.uniform(0.0, 1.0);
        }
        const double tau = rng.uniform(0.0, 0.9);
        const auto base = field_verdict(field(flags, weights), tau);
        CHECK(base.flagged_weight_fraction >= 0.0);
        CHECK(base.flagged_weight_fraction <= 1.0);

        // Determinism.
        const auto again = field_verdict(field(flags, weights), tau);
        CHECK(again.flagged_weight_fraction == base.flagged_weight_fraction);
        CHECK(again.forged == base.forged);

        // Scale invariance.
        const double k = std::exp(rng.uniform(-5.0, 5.0));
        auto scaled = weights;
        for (auto& w : scaled) w *= k;
        const auto s = field_verdict(field(flags, scaled), tau);
        CHECK(s.flagged_weight_fraction == doctest::Approx(base.flagged_weight_fraction).epsilon(1e-12));
        CHECK(s.forged == base.forged);

        // Monotonicity: raising a flag never clears a forged verdict.
        const std::size_t i = rng.below(n);
        if (!flags[i]) {
            auto more = flags;
            more[i] = true;
            const auto m = field_verdict(field(more, weights), tau);
            CHECK(m.flagged_weight_fraction >= base.flagged_weight_fraction);
            if (base.forged) CHECK(m.forged);
        }
    }
}

TEST_CASE("all-zero weights fall back to counting symbols") {
    const auto v = field_verdict(field({true, false, false, false}, {0, 0, 0, 0}), 0.2);
    CHECK(v.unweighted_fallback);
    CHECK(v.flagged_weight_fraction == 0.25);
    CHECK(v.forged);
    CHECK_FALSE(field_verdict(field({true, false}, {1, 1})).unweighted_fallback);
}

TEST_CASE("field verdict errors") {
    CHECK_THROWS_AS(field_verdict({}), InvalidArgument);
    CHECK_THROWS_AS(field_verdict(uniform_field({true}), 1.0), InvalidArgument);
    CHECK_THROWS_AS(field_verdict(uniform_field({true}), -0.1), InvalidArgument);
    CHECK_THROWS_AS(field_verdict(field({true, false}, {1.0, -0.5})), InvalidArgument);
    CHECK_THROWS_AS(field_verdict(field({true, false}, {1.0, std::nan("")})), InvalidArgument);
}

TEST_CASE("flag rule") {
    CHECK_FALSE(make_assessment(0, 5, 0.9, 5, false, 1.0).flagged);
    CHECK(make_assessment(0, 5, 0.9, 5, true, 1.0).flagged);
    CHECK(make_assessment(0, 5, 0.9, 3, false, 1.0).flagged);
    CHECK_FALSE(make_assessment(0, 5, 0.9, std::nullopt, false, 1.0).flagged);
    const auto forced = make_assessment(0, 0, 0.9, 0, false, 1.0, true);
    CHECK(forced.forced);
    CHECK(forced.flagged);
}

TEST_CASE("reliability tables") {
    const auto p = build_reliability_table(passport_matrix());
    REQUIRE(p.alphabet_size() == 10);
    CHECK(p.reliability[1] == doctest::Approx((30917.0 + 10.0) / 33185.0).epsilon(1e-12));
    CHECK(std::abs(p.reliability[1] - 0.932) < 0.0005);
    const auto m = build_reliability_table(mrz_matrix());
    CHECK(m.reliability[0] == doctest::Approx((29474.0 + 125.0) / 48201.0).epsilon(1e-12));
    CHECK(std::abs(m.reliability[0] - 0.614) < 0.0005);
    for (bool f : p.always_flag) CHECK_FALSE(f);

    metrics::ModifiedConfusionMatrix perfect(10);
    for (int c = 0; c < 10; ++c) perfect.add(1, c, 50);
    for (double r : build_reliability_table(perfect).reliability) CHECK(r == 1.0);

    metrics::ModifiedConfusionMatrix sparse(3);
    sparse.add(1, 0, 10);
    sparse.add(3, 1, 10);
    const auto s = build_reliability_table(sparse, {0.4, true});
    CHECK(s.reliability[0] == 1.0);
    CHECK(s.reliability[1] == kMinReliability);
    CHECK(s.reliability[2] == 0.4);
    CHECK(s.always_flag == std::vector<bool>{false, true, false});

    const auto u = ReliabilityTable::uniform(4);
    CHECK(u.reliability == std::vector<double>(4, 1.0));
    CHECK(u.always_flag == std::vector<bool>(4, false));

    const nlohmann::json j = s;
    const auto back = j.get<ReliabilityTable>();
    CHECK(back.reliability == s.reliability);
    CHECK(back.always_flag == s.always_flag);
}

TEST_CASE("forced classes flag the symbol") {
    const auto std0 = constant_model(clf::ClassifierKind::plain, 0);
    const auto auth0 = constant_model(clf::ClassifierKind::c_type, 0);
    auto table = ReliabilityTable::uniform(10);
    table.always_flag[0] = true;
    const auto a = assess_symbol(std0, auth0, blank(), table);
    CHECK(a.forced);
    CHECK(a.flagged);
}
