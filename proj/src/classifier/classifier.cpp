#include "fontauth/classifier/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"
#include "fontauth/nncore/loss.hpp"
#include "fontauth/nncore/model_io.hpp"
#include "fontauth/version.hpp"

namespace fontauth::clf {

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::c_type: return "c";
    case ClassifierKind::cprime_type: return "cprime";
    case ClassifierKind::plain: return "plain";
    }
    return "?";
}

ClassifierKind parse_kind(std::string_view text) {
    if (text == "c" || text == "c_type" || text == "C") return ClassifierKind::c_type;
    if (text == "cprime" || text == "cprime_type" || text == "C'") return ClassifierKind::cprime_type;
    if (text == "plain" || text == "standard") return ClassifierKind::plain;
    throw InvalidArgument("unknown classifier kind: " + std::string(text));
}

int ClassifierSpec::output_width() const {
    switch (kind) {
    case ClassifierKind::c_type: return 2 * alphabet_size;
    case ClassifierKind::cprime_type: return 2;
    case ClassifierKind::plain: return alphabet_size;
    }
    return 0;
}

int encode_label(int char_index, bool forged, const ClassifierSpec& spec) {
    if (spec.kind == ClassifierKind::cprime_type) return forged ? 1 : 0;
    if (char_index < 0 || char_index >= spec.alphabet_size)
        throw InvalidArgument("char_index " + std::to_string(char_index) + " outside [0," +
                              std::to_string(spec.alphabet_size) + ")");
    if (spec.kind == ClassifierKind::plain) return char_index;
    return char_index + spec.alphabet_size * (forged ? 1 : 0);
}

Prediction decode_output(std::span<const double> probabilities, const ClassifierSpec& spec) {
    if (probabilities.size() != static_cast<std::size_t>(spec.output_width()))
        throw ShapeError("probability vector of width " + std::to_string(probabilities.size()) + ", expected " +
                         std::to_string(spec.output_width()));
    Prediction p;
    p.probabilities.assign(probabilities.begin(), probabilities.end());
    // max_element returns the first maximum, which is the lowest index.
    p.class_index = static_cast<int>(std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
    p.confidence = probabilities[static_cast<std::size_t>(p.class_index)];
    const int m = spec.alphabet_size;
    switch (spec.kind) {
    case ClassifierKind::c_type:
        p.char_index = p.class_index % m;
        p.forged = p.class_index >= m;
        p.forged_probability = std::accumulate(probabilities.begin() + m, probabilities.end(), 0.0);
        break;
    case ClassifierKind::cprime_type:
        p.forged = p.class_index == 1;
        p.forged_probability = probabilities[1];
        break;
    case ClassifierKind::plain:
        p.char_index = p.class_index;
        break;
    }
    return p;
}

nn::Network<float> build_network(const ClassifierSpec& spec) {
    if (spec.alphabet_size < 1) throw InvalidArgument("alphabet size must be positive");
    using namespace nn;
    std::vector<LayerSpec> layers = {
        Conv2dSpec{1, 8, 3, 3, 1, 1},  ActivationSpec{Activation::relu},
        Conv2dSpec{8, 8, 3, 3, 2, 1},  ActivationSpec{Activation::relu},
        Conv2dSpec{8, 12, 3, 3, 2, 1}, ActivationSpec{Activation::relu},
    };
    const FeatureShape input{synth::kGlyphHeight, synth::kGlyphWidth, 1};
    FeatureShape s = input;
    for (const auto& l : layers) s = infer_output(l, s);
    layers.emplace_back(DenseSpec{static_cast<int>(s.size()), spec.output_width()});
    return Network<float>(input, std::move(layers));
}

void to_json(nlohmann::json& j, const EpochLog& e) {
    j = {{"epoch", e.epoch},
         {"learning_rate", e.learning_rate},
         {"train_loss", e.train_loss},
         {"val_font_accuracy", e.val_font_accuracy},
         {"val_char_accuracy", e.val_char_accuracy}};
}

void from_json(const nlohmann::json& j, EpochLog& e) {
    e.epoch = j.at("epoch").get<int>();
    e.learning_rate = j.at("learning_rate").get<double>();
    e.train_loss = j.at("train_loss").get<double>();
    e.val_font_accuracy = j.at("val_font_accuracy").get<double>();
    e.val_char_accuracy = j.at("val_char_accuracy").get<double>();
}

void to_json(nlohmann::json& j, const TrainingProvenance& p) {
    j = {{"train_dataset_hash", p.train_dataset_hash},
         {"val_dataset_hash", p.val_dataset_hash},
         {"train_config", p.config},
         {"best_epoch", p.best_epoch},
         {"best_val_font_accuracy", p.best_val_font_accuracy},
         {"best_val_char_accuracy", p.best_val_char_accuracy},
         {"tool_version", p.tool_version}};
}

void from_json(const nlohmann::json& j, TrainingProvenance& p) {
    p.train_dataset_hash = j.value("train_dataset_hash", std::string());
    p.val_dataset_hash = j.value("val_dataset_hash", std::string());
    if (j.contains("train_config")) p.config = j.at("train_config").get<nn::TrainConfig>();
    p.best_epoch = j.value("best_epoch", -1);
    p.best_val_font_accuracy = j.value("best_val_font_accuracy", 0.0);
    p.best_val_char_accuracy = j.value("best_val_char_accuracy", 0.0);
    p.tool_version = j.value("tool_version", std::string());
}

std::string TrainedModel::content_hash() const { return nn::content_hash(network); }

namespace {

nn::Tensor<float> make_batch(std::span<const synth::GlyphImage* const> images) {
    nn::Tensor<float> batch({images.size(), synth::kGlyphHeight, synth::kGlyphWidth, 1});
    float* out = batch.ptr();
    // Ink-positive encoding: background maps to 0, matching the zero padding
    // of the convolutions.
    for (const auto* img : images)
        out = std::transform(img->pixels.begin(), img->pixels.end(), out, [](float v) { return 1.0f - v; });
    return batch;
}

void check_dataset(const ClassifierSpec& spec, const synth::Dataset& ds, const char* role) {
    if (ds.alphabet_size != spec.alphabet_size)
        throw DataError(std::string(role) + " dataset alphabet size " + std::to_string(ds.alphabet_size) +
                        " does not match classifier alphabet size " + std::to_string(spec.alphabet_size));
    if (ds.samples.empty()) throw DataError(std::string(role) + " dataset is empty");
}

constexpr std::size_t kEvalBatch = 256;

} // namespace

std::vector<Prediction> predict_batch(const TrainedModel& model, std::span<const synth::GlyphImage> images) {
    std::vector<Prediction> out;
    out.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += kEvalBatch) {
        const std::size_t n = std::min(kEvalBatch, images.size() - start);
        std::vector<const synth::GlyphImage*> ptrs;
        for (std::size_t i = 0; i < n; ++i) {
            synth::check_intensities(images[start + i]);
            ptrs.push_back(&images[start + i]);
        }
        const auto logits = nn::forward(model.network, make_batch(ptrs));
        for (std::size_t i = 0; i < n; ++i) {
            const auto probs = nn::softmax_row(logits.row(i));
            out.push_back(decode_output(probs, model.spec));
        }
    }
    return out;
}

Prediction predict(const TrainedModel& model, const synth::GlyphImage& image) {
    return predict_batch(model, std::span(&image, 1)).front();
}

Accuracy measure_accuracy(const TrainedModel& model, const synth::Dataset& ds) {
    std::vector<synth::GlyphImage> images;
    images.reserve(ds.samples.size());
    for (const auto& s : ds.samples) images.push_back(s.image);
    const auto preds = predict_batch(model, images);
    std::size_t font_ok = 0, char_ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].forged == ds.samples[i].forged) ++font_ok;
        if (preds[i].char_index && *preds[i].char_index == ds.samples[i].char_index) ++char_ok;
    }
    const double n = static_cast<double>(std::max<std::size_t>(preds.size(), 1));
    return {static_cast<double>(font_ok) / n, static_cast<double>(char_ok) / n};
}

TrainResult train(const ClassifierSpec& spec, const synth::Dataset& train_set, const synth::Dataset& val_set,
                  const nn::TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    check_dataset(spec, train_set, "training");
    check_dataset(spec, val_set, "validation");
    train_set.validate(spec.kind != ClassifierKind::plain);

    TrainResult result;
    result.model.spec = spec;
    result.model.network = build_network(spec);
    nn::initialize(result.model.network, cfg.seed);

    std::vector<int> labels(train_set.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        labels[i] = encode_label(train_set.samples[i].char_index, train_set.samples[i].forged, spec);

    const bool select_by_char = spec.kind == ClassifierKind::plain;
    TrainedModel best = result.model;
    double best_metric = -1.0;
    Accuracy best_acc;
    nn::SgdState<float> sgd;
    std::vector<std::size_t> order(train_set.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1));
        shuffle_rng.shuffle(std::span(order));
        const double lr = cfg.rate_for_epoch(epoch);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            std::vector<const synth::GlyphImage*> ptrs(n);
            std::vector<int> batch_labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                ptrs[i] = &train_set.samples[order[start + i]].image;
                batch_labels[i] = labels[order[start + i]];
            }
            nn::ForwardCache<float> cache;
            const auto logits = nn::forward(result.model.network, make_batch(ptrs), &cache);
            const auto loss = nn::softmax_xent(logits, std::span<const int>(batch_labels));
            if (!std::isfinite(loss.loss))
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches) + " (learning rate " + std::to_string(lr) + ")");
            const auto grads = nn::backward(result.model.network, cache, loss.grad_logits);
            nn::sgd_step(result.model.network, grads, lr, cfg.momentum, sgd);
            loss_sum += loss.loss;
            ++batches;
        }
        const auto acc = measure_accuracy(result.model, val_set);
        EpochLog entry{epoch, lr, loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)), acc.font,
                       acc.character};
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
        const double metric = select_by_char ? acc.character : acc.font;
        if (metric > best_metric) {
            best_metric = metric;
            best_acc = acc;
            best = result.model;
            best.provenance.best_epoch = epoch;
        }
    }

    result.model = std::move(best);
    auto& prov = result.model.provenance;
    prov.train_dataset_hash = train_set.content_hash();
    prov.val_dataset_hash = val_set.content_hash();
    prov.config = cfg;
    prov.best_val_font_accuracy = best_acc.font;
    prov.best_val_char_accuracy = best_acc.character;
    prov.tool_version = kToolVersion;
    return result;
}

Bytes serialize_model(const TrainedModel& model) {
    ByteWriter ext;
    ext.u8(static_cast<std::uint8_t>(model.spec.kind));
    ext.u16(static_cast<std::uint16_t>(model.spec.alphabet_size));
    ext.str(nlohmann::json(model.provenance).dump());
    return nn::serialize_model(model.network, ext.bytes());
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
    auto file = nn::deserialize_model(bytes);
    ByteReader ext(file.extension);
    TrainedModel model;
    const auto kind = ext.u8();
    if (kind > static_cast<std::uint8_t>(ClassifierKind::plain)) throw FormatError("unknown classifier kind tag");
    model.spec.kind = static_cast<ClassifierKind>(kind);
    model.spec.alphabet_size = ext.u16();
    try {
        model.provenance = nlohmann::json::parse(ext.str()).get<TrainingProvenance>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model provenance: ") + e.what());
    }
    model.network = std::move(file.network);
    if (model.network.output_width() != static_cast<std::size_t>(model.spec.output_width()))
        throw FormatError("model output width does not match its codec header");
    return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

} // namespace fontauth::clf
