#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "fontauth/classifier/classifier.hpp"
#include "fontauth/common/errors.hpp"

using namespace fontauth;
using namespace fontauth::clf;
namespace fs = std::filesystem;

namespace {

const fs::path kFonts = fs::path(FONTAUTH_DATA_DIR) / "fonts";

synth::FontRegistry two_fonts() {
    synth::FontRegistry r;
    r.genuine = {{"mono", kFonts / "DejaVuSansMono.ttf", synth::FontRole::genuine}};
    r.forged = {{"serif", kFonts / "DejaVuSerif.ttf", synth::FontRole::forged_proxy}};
    return r;
}

synth::Dataset toy_set(int per_cell, std::uint64_t seed) {
    return synth::synthesize_dataset(two_fonts(), per_cell, synth::RenderConfig{},
                                     synth::AugmentationConfig::capture_defaults(), seed);
}

const synth::Dataset& toy_train() {
    static const auto ds = toy_set(10, 101);
    return ds;
}
const synth::Dataset& toy_val() {
    static const auto ds = toy_set(5, 202);
    return ds;
}

nn::TrainConfig quick(int epochs, std::uint64_t seed = 1) {
    nn::TrainConfig c;
    c.epochs = epochs;
    c.seed = seed;
    c.batch_size = 16;
    return c;
}

const ClassifierSpec kC{ClassifierKind::c_type, 10};
const ClassifierSpec kCprime{ClassifierKind::cprime_type, 10};
const ClassifierSpec kPlain{ClassifierKind::plain, 10};

} // namespace

TEST_CASE("label encoding examples") {
    CHECK(encode_label(0, false, kC) == 0);
    CHECK(encode_label(3, true, kC) == 13);
    CHECK(encode_label(9, true, kCprime) == 1);
    CHECK(encode_label(7, true, kCprime) == 1);
    CHECK(encode_label(7, false, kCprime) == 0);
    CHECK(encode_label(7, true, kPlain) == 7);
    CHECK_THROWS_AS(encode_label(10, false, kC), InvalidArgument);
    CHECK_THROWS_AS(encode_label(-1, false, kC), InvalidArgument);
}

TEST_CASE("c-type codec is a bijection onto [0, 2M)") {
    for (int m : {1, 2, 10, 36}) {
        const ClassifierSpec spec{ClassifierKind::c_type, m};
        std::set<int> seen;
        for (int c = 0; c < m; ++c)
            for (bool f : {false, true}) {
                const int k = encode_label(c, f, spec);
                CHECK(k >= 0);
                CHECK(k < 2 * m);
                seen.insert(k);
                std::vector<double> onehot(static_cast<std::size_t>(2 * m), 0.0);
                onehot[static_cast<std::size_t>(k)] = 1.0;
                const auto p = decode_output(onehot, spec);
                CHECK(p.char_index == c);
                CHECK(p.forged == f);
            }
        CHECK(seen.size() == static_cast<std::size_t>(2 * m));
    }
}

TEST_CASE("decoding examples") {
    std::vector<double> onehot(20, 0.0);
    onehot[13] = 1.0;
    const auto a = decode_output(onehot, kC);
    CHECK(a.class_index == 13);
    CHECK(a.char_index == 3);
    CHECK(a.forged);
    CHECK(a.confidence == 1.0);
    CHECK(a.forged_probability == 1.0);

    const std::vector<double> uniform(20, 0.05);
    const auto u = decode_output(uniform, kC);
    CHECK(u.class_index == 0);
    CHECK_FALSE(u.forged);
    CHECK(u.forged_probability == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<double> split(20, 0.0);
    split[2] = 0.4;
    split[12] = 0.6;
    const auto sp = decode_output(split, kC);
    CHECK(sp.char_index == 2);
    CHECK(sp.forged);
    CHECK(sp.forged_probability == doctest::Approx(0.6).epsilon(1e-12));

    const auto b = decode_output(std::vector<double>{0.4, 0.6}, kCprime);
    CHECK(b.forged);
    CHECK_FALSE(b.char_index.has_value());
    CHECK(b.confidence == 0.6);
    CHECK(b.forged_probability == 0.6);

    const auto tie = decode_output(std::vector<double>{0.5, 0.5}, kCprime);
    CHECK(tie.class_index == 0);
    CHECK_FALSE(tie.forged);

    std::vector<double> plain(10, 0.0);
    plain[4] = 1.0;
    const auto p = decode_output(plain, kPlain);
    CHECK(p.char_index == 4);
    CHECK_FALSE(p.forged);

    CHECK_THROWS_AS(decode_output(std::vector<double>(19, 0.05), kC), ShapeError);
    CHECK_THROWS_AS(decode_output(std::vector<double>(3, 0.3), kCprime), ShapeError);
}

TEST_CASE("kind names") {
    CHECK(parse_kind("c") == ClassifierKind::c_type);
    CHECK(parse_kind("cprime") == ClassifierKind::cprime_type);
    CHECK(parse_kind("plain") == ClassifierKind::plain);
    for (auto k : {ClassifierKind::c_type, ClassifierKind::cprime_type, ClassifierKind::plain})
        CHECK(parse_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_kind("d"), InvalidArgument);
}

TEST_CASE("reference network geometry") {
    CHECK(kC.output_width() == 20);
    CHECK(kCprime.output_width() == 2);
    CHECK(kPlain.output_width() == 10);
    const auto net = build_network(kC);
    CHECK(net.output_width() == 20);
    CHECK(net.param_count() == 6360);
    CHECK(net.param_count() >= 1000);
    CHECK(net.param_count() <= 1000000);
    CHECK(net.shapes().back() == nn::FeatureShape{1, 1, 20});
    CHECK(build_network(kCprime).param_count() == 80 + 584 + 876 + 482);
}

TEST_CASE("a two-font toy problem is learned") {
    const auto r = train(kC, toy_train(), toy_val(), quick(30));
    CHECK(toy_train().samples.size() == 200);
    CHECK(r.log.size() == 30);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
    CHECK(r.model.provenance.best_val_font_accuracy >= 0.95);
    CHECK(measure_accuracy(r.model, toy_val()).font == r.model.provenance.best_val_font_accuracy);
    CHECK(r.model.provenance.train_dataset_hash == toy_train().content_hash());
    CHECK(r.model.provenance.config == quick(30));
}

TEST_CASE("training is deterministic") {
    const auto a = train(kC, toy_train(), toy_val(), quick(3, 7));
    const auto b = train(kC, toy_train(), toy_val(), quick(3, 7));
    const auto c = train(kC, toy_train(), toy_val(), quick(3, 8));
    CHECK(a.model.content_hash() == b.model.content_hash());
    CHECK(a.model.network == b.model.network);
    CHECK(a.model.content_hash() != c.model.content_hash());
}

TEST_CASE("zero learning rate keeps the initialization") {
    auto cfg = quick(2, 5);
    cfg.learning_rate = 0.0;
    const auto r = train(kCprime, toy_train(), toy_val(), cfg);
    auto init = build_network(kCprime);
    nn::initialize(init, 5);
    CHECK(r.model.network == init);

    const auto c = train(kC, toy_train(), toy_val(), [] {
        auto z = quick(1, 5);
        z.learning_rate = 0.0;
        return z;
    }());
    const auto acc = measure_accuracy(c.model, toy_val());
    CHECK(acc.font >= 0.3);
    CHECK(acc.font <= 0.7);
    CHECK(acc.character <= 0.3);
}

TEST_CASE("predictions are distributions and batching does not matter") {
    const auto r = train(kC, toy_train(), toy_val(), quick(2));
    std::vector<synth::GlyphImage> images;
    for (std::size_t i = 0; i < toy_val().samples.size(); i += 7) images.push_back(toy_val().samples[i].image);
    const auto batch = predict_batch(r.model, images);
    REQUIRE(batch.size() == images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        double s = 0.0;
        for (double p : batch[i].probabilities) s += p;
        CHECK(std::abs(s - 1.0) <= 1e-6);
        const auto single = predict(r.model, images[i]);
        CHECK(single.probabilities == batch[i].probabilities);
        CHECK(single.class_index == batch[i].class_index);
    }
    auto bad = images.front();
    bad.pixels[0] = 1.5f;
    CHECK_THROWS_AS(predict(r.model, bad), InvalidArgument);
}

TEST_CASE("saved models predict identically") {
    const auto r = train(kCprime, toy_train(), toy_val(), quick(2));
    const auto dir = fs::temp_directory_path() / "fontauth_test_classifier";
    fs::create_directories(dir);
    const auto path = dir / "model.ffnn";
    save_model(r.model, path);
    const auto back = load_model(path);
    CHECK(back.spec == r.model.spec);
    CHECK(back.content_hash() == r.model.content_hash());
    CHECK(back.provenance.best_epoch == r.model.provenance.best_epoch);
    for (std::size_t i = 0; i < toy_val().samples.size(); i += 11)
        CHECK(predict(back, toy_val().samples[i].image).probabilities ==
              predict(r.model, toy_val().samples[i].image).probabilities);

    auto bytes = serialize_model(r.model);
    bytes[bytes.size() / 3] ^= 0x40;
    CHECK_THROWS_AS(deserialize_model(bytes), ChecksumError);
    fs::remove_all(dir);
}

TEST_CASE("training rejects unusable data") {
    auto empty = toy_val();
    empty.samples.clear();
    CHECK_THROWS_AS(train(kC, toy_train(), empty, quick(1)), DataError);
    const ClassifierSpec wide{ClassifierKind::c_type, 36};
    CHECK_THROWS_AS(train(wide, toy_train(), toy_val(), quick(1)), DataError);
    auto genuine_only = toy_train();
    std::erase_if(genuine_only.samples, [](const auto& s) { return s.forged; });
    CHECK_THROWS_AS(train(kC, genuine_only, toy_val(), quick(1)), DataError);
    auto bad = quick(1);
    bad.batch_size = 0;
    CHECK_THROWS_AS(train(kC, toy_train(), toy_val(), bad), InvalidArgument);
}

TEST_CASE("a runaway learning rate is reported as divergence") {
    auto cfg = quick(3);
    cfg.learning_rate = 1e30;
    CHECK_THROWS_AS(train(kC, toy_train(), toy_val(), cfg), DivergenceError);
}
